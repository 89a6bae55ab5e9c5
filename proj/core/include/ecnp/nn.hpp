#pragma once

#include <cstdint>
#include <vector>

#include "ecnp/array.hpp"
#include "ecnp/rng.hpp"
#include "ecnp/tape.hpp"

namespace ecnp {

struct Linear {
    Array weight;  // [in_dim, out_dim]
    Array bias;    // [out_dim]
};

/// Fully connected stack; relu between layers, none after the last (output
/// activation is the head's business).
struct MLP {
    std::vector<Linear> layers;

    int64_t in_dim() const { return layers.front().weight.dim(0); }
    int64_t out_dim() const { return layers.back().weight.dim(1); }
};

/// Allocate an MLP with the given layer widths (dims = [in, h1, ..., out]);
/// parameters start zeroed — call init_mlp before use.
MLP make_mlp(const std::vector<int64_t>& dims);

/// Weights ~ Uniform(-sqrt(1/in_dim), +sqrt(1/in_dim)), biases zero. Draws
/// from `rng` in a fixed order, so the same generator state reproduces the
/// same parameters.
void init_mlp(MLP& mlp, CounterRng& rng);

/// Parameter node ids for one MLP staged onto a tape.
struct MlpNodes {
    struct LayerNodes {
        NodeId weight;
        NodeId bias;
    };
    std::vector<LayerNodes> layers;
};

/// Register every parameter on the tape: as differentiable leaves when
/// `trainable`, as constants otherwise (evaluation).
MlpNodes stage_mlp(const MLP& mlp, Tape& tape, bool trainable);

/// x: [n, in_dim] -> [n, out_dim]; relu between layers, not after the last.
Value mlp_forward(const MlpNodes& nodes, Tape& tape, Value x);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates mirroring a fixed parameter list.
struct AdamState {
    AdamConfig config;
    std::vector<Array> m;
    std::vector<Array> v;
    int64_t t = 0;

    explicit AdamState(AdamConfig config = {}) : config(config) {}
    void reset(const std::vector<Array*>& params);
};

/// One Adam update with bias correction. If any gradient element is
/// non-finite the step is skipped entirely (parameters and state untouched)
/// and the function returns false so the caller can flag it.
bool adam_step(const std::vector<Array*>& params, const std::vector<Array>& grads,
               AdamState& state);

/// Scale all gradients by min(1, max_norm / ||g||_2) over the concatenated
/// gradient vector. No-op when the norm is within bounds or non-finite.
void clip_by_global_norm(std::vector<Array>& grads, double max_norm);

}  // namespace ecnp
