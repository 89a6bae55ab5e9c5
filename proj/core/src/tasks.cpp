#include "ecnp/tasks.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ecnp/error.hpp"

namespace ecnp {

Generator generator_from_name(const std::string& name) {
    if (name == "sinusoid") return Generator::Sinusoid;
    if (name == "gp") return Generator::Gp;
    if (name == "mnist") return Generator::Mnist;
    raise(Error::Kind::TypeError, "unknown generator '" + name + "'");
}

std::string generator_name(Generator g) {
    switch (g) {
        case Generator::Sinusoid: return "sinusoid";
        case Generator::Gp: return "gp";
        default: return "mnist";
    }
}

double se_kernel(double xa, double xb) {
    constexpr double kLengthScale = 0.6;
    const double d = xa - xb;
    return std::exp(-d * d / (2.0 * kLengthScale * kLengthScale));
}

bool cholesky_lower(std::vector<double>& a, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = 0; j <= i; ++j) {
            double s = a[static_cast<size_t>(i * n + j)];
            for (int64_t k = 0; k < j; ++k)
                s -= a[static_cast<size_t>(i * n + k)] * a[static_cast<size_t>(j * n + k)];
            if (i == j) {
                if (!(s > 0.0)) return false;
                a[static_cast<size_t>(i * n + j)] = std::sqrt(s);
            } else {
                a[static_cast<size_t>(i * n + j)] = s / a[static_cast<size_t>(j * n + j)];
            }
        }
        for (int64_t j = i + 1; j < n; ++j) a[static_cast<size_t>(i * n + j)] = 0.0;
    }
    return true;
}

namespace {

// Context/target point counts for a regression task. Training targets are
// the K context points plus u ~ {3..K} extras; test targets are fresh.
struct SplitCounts {
    int64_t n_context;
    int64_t n_extra;   // extra target points beyond the shared context rows
    bool shared;       // context rows are also the leading target rows
};

SplitCounts regression_split(const TaskGenConfig& cfg, CounterRng& rng) {
    if (cfg.k < 1) raise(Error::Kind::InvalidParams, "context size k must be >= 1");
    if (cfg.train) {
        if (cfg.k < 3)
            raise(Error::Kind::InvalidParams,
                  "training tasks need k >= 3 (extra-target count u ~ {3..k})");
        return {cfg.k, rng.uniform_int(3, cfg.k), true};
    }
    return {cfg.k, kTestTargets, false};
}

}  // namespace

Task gen_sinusoid(const TaskGenConfig& cfg, uint64_t stream) {
    CounterRng rng(cfg.seed, stream);
    const double amplitude = rng.uniform(0.1, 5.0);
    const double phase = rng.uniform(0.0, std::numbers::pi);
    const SplitCounts split = regression_split(cfg, rng);
    const int64_t n_all = split.n_context + split.n_extra;

    std::vector<double> xs(static_cast<size_t>(n_all));
    for (double& x : xs) x = rng.uniform(-5.0, 5.0);

    auto y_of = [&](double x) { return amplitude * std::sin(x + phase); };

    Task task;
    task.generator = "sinusoid";
    task.stream = stream;
    task.xc = Array::zeros({split.n_context, 1});
    task.yc = Array::zeros({split.n_context, 1});
    for (int64_t i = 0; i < split.n_context; ++i) {
        task.xc[i] = xs[static_cast<size_t>(i)];
        task.yc[i] = y_of(task.xc[i]);
    }
    const int64_t n_target = split.shared ? n_all : split.n_extra;
    const int64_t first = split.shared ? 0 : split.n_context;
    task.xt = Array::zeros({n_target, 1});
    task.yt = Array::zeros({n_target, 1});
    for (int64_t i = 0; i < n_target; ++i) {
        task.xt[i] = xs[static_cast<size_t>(first + i)];
        task.yt[i] = y_of(task.xt[i]);
    }
    return task;
}

Task gen_gp(const TaskGenConfig& cfg, uint64_t stream) {
    CounterRng rng(cfg.seed, stream);
    const SplitCounts split = regression_split(cfg, rng);
    const int64_t n_all = split.n_context + split.n_extra;

    std::vector<double> xs(static_cast<size_t>(n_all));
    for (double& x : xs) x = rng.uniform(-2.0, 2.0);
    std::vector<double> z(static_cast<size_t>(n_all));
    for (double& zi : z) zi = rng.gaussian();

    std::vector<double> cov(static_cast<size_t>(n_all * n_all));
    for (int64_t i = 0; i < n_all; ++i)
        for (int64_t j = 0; j < n_all; ++j)
            cov[static_cast<size_t>(i * n_all + j)] =
                se_kernel(xs[static_cast<size_t>(i)], xs[static_cast<size_t>(j)]);

    std::vector<double> chol;
    bool ok = false;
    for (double jitter = 1e-6; jitter <= 1e-2 * 1.0000001; jitter *= 10.0) {
        chol = cov;
        for (int64_t i = 0; i < n_all; ++i) chol[static_cast<size_t>(i * n_all + i)] += jitter;
        if (cholesky_lower(chol, n_all)) {
            ok = true;
            break;
        }
    }
    if (!ok)
        raise(Error::Kind::CholeskyFailure,
              "GP covariance not positive definite after jitter escalation to 1e-2");

    std::vector<double> ys(static_cast<size_t>(n_all), 0.0);
    for (int64_t i = 0; i < n_all; ++i) {
        double s = 0.0;
        for (int64_t j = 0; j <= i; ++j)
            s += chol[static_cast<size_t>(i * n_all + j)] * z[static_cast<size_t>(j)];
        ys[static_cast<size_t>(i)] = s;
    }

    Task task;
    task.generator = "gp";
    task.stream = stream;
    task.xc = Array::zeros({split.n_context, 1});
    task.yc = Array::zeros({split.n_context, 1});
    for (int64_t i = 0; i < split.n_context; ++i) {
        task.xc[i] = xs[static_cast<size_t>(i)];
        task.yc[i] = ys[static_cast<size_t>(i)];
    }
    const int64_t n_target = split.shared ? n_all : split.n_extra;
    const int64_t first = split.shared ? 0 : split.n_context;
    task.xt = Array::zeros({n_target, 1});
    task.yt = Array::zeros({n_target, 1});
    for (int64_t i = 0; i < n_target; ++i) {
        task.xt[i] = xs[static_cast<size_t>(first + i)];
        task.yt[i] = ys[static_cast<size_t>(first + i)];
    }
    return task;
}

Task gen_regression(const TaskGenConfig& cfg, uint64_t stream) {
    switch (cfg.generator) {
        case Generator::Sinusoid: return gen_sinusoid(cfg, stream);
        case Generator::Gp: return gen_gp(cfg, stream);
        default:
            raise(Error::Kind::InvalidParams,
                  "gen_regression handles sinusoid/gp only; image tasks need a corpus");
    }
}

Task gen_image_task(const Array& image, int64_t k, CounterRng& rng) {
    if (image.rank() != 2)
        raise(Error::Kind::ShapeMismatch, "image must be [H, W], got " + shape_str(image.shape()));
    const int64_t h = image.dim(0), w = image.dim(1);
    const int64_t n_pixels = h * w;
    if (k < 1 || k >= n_pixels)
        raise(Error::Kind::KTooLarge, "context size " + std::to_string(k) +
                                          " must be in [1, " + std::to_string(n_pixels - 1) + ")");

    // Partial Fisher-Yates: the first k entries become the context pixels.
    std::vector<int64_t> order(static_cast<size_t>(n_pixels));
    for (int64_t i = 0; i < n_pixels; ++i) order[static_cast<size_t>(i)] = i;
    for (int64_t i = 0; i < k; ++i) {
        const int64_t j = rng.uniform_int(i, n_pixels - 1);
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    std::vector<bool> in_context(static_cast<size_t>(n_pixels), false);
    for (int64_t i = 0; i < k; ++i) in_context[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;

    const double row_den = h > 1 ? static_cast<double>(h - 1) : 1.0;
    const double col_den = w > 1 ? static_cast<double>(w - 1) : 1.0;
    auto fill_point = [&](Array& xs, Array& ys, int64_t slot, int64_t pixel) {
        const int64_t r = pixel / w, c = pixel % w;
        xs[slot * 2] = static_cast<double>(r) / row_den;
        xs[slot * 2 + 1] = static_cast<double>(c) / col_den;
        ys[slot] = image[pixel];
    };

    Task task;
    task.generator = "mnist";
    task.xc = Array::zeros({k, 2});
    task.yc = Array::zeros({k, 1});
    for (int64_t i = 0; i < k; ++i) fill_point(task.xc, task.yc, i, order[static_cast<size_t>(i)]);

    const int64_t n_target = n_pixels - k;
    task.xt = Array::zeros({n_target, 2});
    task.yt = Array::zeros({n_target, 1});
    int64_t slot = 0;
    for (int64_t pixel = 0; pixel < n_pixels; ++pixel) {
        if (in_context[static_cast<size_t>(pixel)]) continue;
        fill_point(task.xt, task.yt, slot++, pixel);
    }
    return task;
}

Task inject_outlier(const Task& task, double severity, CounterRng& rng) {
    const int64_t n_context = task.n_context();
    const int64_t n_target = task.n_target();
    if (n_target <= n_context)
        raise(Error::Kind::InvalidParams,
              "inject_outlier needs target points beyond the shared context rows");
    const int64_t pick = rng.uniform_int(n_context, n_target - 1);
    Task out = task;
    out.yt = task.yt.clone();
    for (int64_t c = 0; c < task.y_dim(); ++c) out.yt[pick * task.y_dim() + c] += severity;
    return out;
}

Task noisy_context(const Task& task, double zeta, CounterRng& rng) {
    Task out = task;
    out.yc = task.yc.clone();
    for (int64_t i = 0; i < out.yc.size(); ++i) out.yc[i] += zeta * rng.gaussian();
    return out;
}

}  // namespace ecnp
