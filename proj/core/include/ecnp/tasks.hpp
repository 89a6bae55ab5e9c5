#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecnp/array.hpp"
#include "ecnp/rng.hpp"

namespace ecnp {

/// One few-shot episode: a context (support) set the model conditions on and
/// a target (query) set it is scored on.
struct Task {
    Array xc;  // [n_context, x_dim]
    Array yc;  // [n_context, y_dim]
    Array xt;  // [n_target, x_dim]
    Array yt;  // [n_target, y_dim]
    std::string generator;
    uint64_t stream = 0;  // per-task RNG stream index

    int64_t n_context() const { return xc.dim(0); }
    int64_t n_target() const { return xt.dim(0); }
    int64_t x_dim() const { return xc.dim(1); }
    int64_t y_dim() const { return yc.dim(1); }
};

enum class Generator { Sinusoid, Gp, Mnist };

Generator generator_from_name(const std::string& name);
std::string generator_name(Generator g);

struct TaskGenConfig {
    Generator generator = Generator::Sinusoid;
    int64_t k = 5;       // context size (shots)
    uint64_t seed = 0;   // base seed; each task uses its own stream
    bool train = true;   // train: targets = context + u extras; test: fresh targets
};

/// Number of fresh target points in test-mode regression tasks.
inline constexpr int64_t kTestTargets = 400;

/// y = A sin(x + phi) with A ~ U[0.1, 5], phi ~ U[0, pi], x ~ U[-5, 5].
/// Training tasks use target = context points + u extras, u ~ {3..K};
/// test tasks draw 400 fresh targets. Deterministic in (cfg.seed, stream).
Task gen_sinusoid(const TaskGenConfig& cfg, uint64_t stream);

/// Function values jointly sampled from a zero-mean GP with squared
/// exponential kernel (length scale 0.6, variance 1.0) over x ~ U[-2, 2].
/// Same context/target split as gen_sinusoid. Cholesky jitter starts at
/// 1e-6 and escalates x10 up to 1e-2 before raising CholeskyFailure.
Task gen_gp(const TaskGenConfig& cfg, uint64_t stream);

/// Image completion: inputs are pixel coordinates of an H x W grid
/// normalized to [0,1]^2 (pixel (r, c) -> (r/(H-1), c/(W-1))), outputs the
/// intensities. Context = k pixels sampled without replacement; target =
/// all remaining pixels. Raises KTooLarge when k >= H*W.
Task gen_image_task(const Array& image, int64_t k, CounterRng& rng);

/// Dispatch on cfg.generator for the regression generators. (Image tasks
/// need the corpus, so the harness drives gen_image_task directly.)
Task gen_regression(const TaskGenConfig& cfg, uint64_t stream);

/// Add `severity` to the output of exactly one randomly chosen target point
/// that is not shared with the context (training regression tasks keep the
/// context as the leading target rows, so the choice is over the extras).
Task inject_outlier(const Task& task, double severity, CounterRng& rng);

/// Add zeta * N(0, 1) noise independently to every context output; targets
/// untouched.
Task noisy_context(const Task& task, double zeta, CounterRng& rng);

/// Squared-exponential kernel value, length scale 0.6, variance 1.0.
double se_kernel(double xa, double xb);

/// In-place lower Cholesky of a dense symmetric n x n matrix; returns false
/// when a non-positive pivot is met.
bool cholesky_lower(std::vector<double>& a, int64_t n);

}  // namespace ecnp
