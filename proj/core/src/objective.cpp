#include "ecnp/objective.hpp"

#include <cmath>

#include "ecnp/error.hpp"
#include "ecnp/special.hpp"

namespace ecnp {
namespace {

// Smallest Euclidean distance from each target input to the context set,
// as an [n_target] array (computed outside the tape: inputs are data).
Array min_context_distances(const Array& xt, const Array& xc) {
    if (xc.dim(0) < 1) raise(Error::Kind::EmptyContext, "kernel term needs a context set");
    const int64_t n_t = xt.dim(0), n_c = xc.dim(0), d = xt.dim(1);
    Array out = Array::zeros({n_t});
    for (int64_t t = 0; t < n_t; ++t) {
        double best = 0.0;
        for (int64_t c = 0; c < n_c; ++c) {
            double sq = 0.0;
            for (int64_t j = 0; j < d; ++j) {
                const double diff = xt[t * d + j] - xc[c * d + j];
                sq += diff * diff;
            }
            if (c == 0 || sq < best) best = sq;
        }
        out[t] = std::sqrt(best);
    }
    return out;
}

// Distance matrix [n_target, n_context] for the on-tape min reduction.
Array context_distance_matrix(const Array& xt, const Array& xc) {
    if (xc.dim(0) < 1) raise(Error::Kind::EmptyContext, "kernel term needs a context set");
    const int64_t n_t = xt.dim(0), n_c = xc.dim(0), d = xt.dim(1);
    Array out = Array::zeros({n_t, n_c});
    for (int64_t t = 0; t < n_t; ++t) {
        for (int64_t c = 0; c < n_c; ++c) {
            double sq = 0.0;
            for (int64_t j = 0; j < d; ++j) {
                const double diff = xt[t * d + j] - xc[c * d + j];
                sq += diff * diff;
            }
            out[t * n_c + c] = std::sqrt(sq);
        }
    }
    return out;
}

}  // namespace

void LossConfig::check() const {
    if (lambda1 < 0.0 || lambda2 < 0.0)
        raise(Error::Kind::InvalidParams, "loss lambdas must be non-negative");
}

double evid_nll(const NIGParams& p, double y) {
    p.check();
    const double resid_sq = (y - p.gamma) * (y - p.gamma);
    const double two_b1v = 2.0 * p.beta * (1.0 + p.v);
    return lgamma_pos(p.alpha) - lgamma_pos(p.alpha + 0.5) + 0.5 * std::log(M_PI / p.v) -
           p.alpha * std::log(two_b1v) + (p.alpha + 0.5) * std::log(resid_sq * p.v + two_b1v);
}

double evid_reg(const NIGParams& p, double y) {
    p.check();
    return std::fabs(y - p.gamma) * (p.v + p.alpha + 1.0 / p.beta);
}

double kernel_reg(const NIGParams& p, const Array& x_t, const Array& xc) {
    p.check();
    Array xt_row = x_t.rank() == 1 ? x_t.reshaped({1, x_t.size()}) : x_t;
    return p.v * min_context_distances(xt_row, xc)[0];
}

double gaussian_nll(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) raise(Error::Kind::InvalidParams, "gaussian_nll requires sigma > 0");
    const double z = (y - mu) / sigma;
    return 0.5 * std::log(2.0 * M_PI * sigma * sigma) + 0.5 * z * z;
}

LossBreakdown TracedLoss::breakdown() const {
    LossBreakdown b;
    b.nll = nll.scalar();
    b.evid_reg = evid_reg.scalar();
    b.kernel_reg = kernel_reg.scalar();
    b.total = total.scalar();
    return b;
}

TracedLoss ecnp_loss(const NigNodes& nig, Tape& tape, const Task& task, const LossConfig& cfg) {
    cfg.check();
    Value yt{&tape, tape.constant(task.yt)};
    Value resid = yt - nig.gamma;

    // NLL summed over targets and channels.
    Value two_b1v = (nig.beta * (nig.v + 1.0)) * 2.0;
    Value nll_elems = lgamma(nig.alpha) - lgamma(nig.alpha + 0.5) +
                      (-log(nig.v) + std::log(M_PI)) * 0.5 - nig.alpha * log(two_b1v) +
                      (nig.alpha + 0.5) * log(square(resid) * nig.v + two_b1v);
    Value nll = sum_all(nll_elems);

    // Regularizers with zero weight are never built: they contribute nothing
    // to the objective and report as zero in the breakdown.
    Value zero{&tape, tape.constant(Array::scalar(0.0))};
    Value ereg = zero, kreg = zero;
    Value total = nll;

    if (cfg.lambda1 > 0.0) {
        // Evidence penalty per channel, summed.
        Value evidence = nig.v + nig.alpha + reciprocal(nig.beta);
        ereg = sum_all(abs(resid) * evidence);
        total = total + cfg.lambda1 * ereg;
    }
    if (cfg.lambda2 > 0.0) {
        // Kernel penalty: data-only distance matrix, min over context
        // on-tape, weighted by the per-target channel sum of v.
        Value dist{&tape, tape.constant(context_distance_matrix(task.xt, task.xc))};
        Value min_dist = min_axis(dist, 1);      // [n_target]
        Value v_per_target = sum_axis(nig.v, 1); // [n_target]
        kreg = sum_all(v_per_target * min_dist);
        total = total + cfg.lambda2 * kreg;
    }
    if (cfg.normalize_targets) {
        const double inv = 1.0 / static_cast<double>(task.n_target());
        nll = nll * inv;
        ereg = ereg * inv;
        kreg = kreg * inv;
        total = total * inv;
    }
    return TracedLoss{nll, ereg, kreg, total};
}

TracedLoss gaussian_loss(const GaussianNodes& g, Tape& tape, const Task& task,
                         const LossConfig& cfg) {
    cfg.check();
    Value yt{&tape, tape.constant(task.yt)};
    Value resid = yt - g.mu;
    Value nll_elems = log(g.sigma) + 0.5 * std::log(2.0 * M_PI) +
                      square(resid) * reciprocal(square(g.sigma)) * 0.5;
    Value nll = sum_all(nll_elems);
    Value zero{&tape, tape.constant(Array::scalar(0.0))};
    Value total = nll;
    if (cfg.normalize_targets) {
        const double inv = 1.0 / static_cast<double>(task.n_target());
        nll = nll * inv;
        total = total * inv;
    }
    return TracedLoss{nll, zero, zero, total};
}

double gradient_weight_empirical(const NIGParams& p, double y) {
    p.check();
    const StudentT st = predictive(p);
    const double delta_sq = (y - p.gamma) * (y - p.gamma) / st.scale_sq;
    if (delta_sq == 0.0) return outlier_weight(p.alpha, 0.0);

    Tape tape;
    Value gamma{&tape, tape.leaf(Array::scalar(p.gamma))};
    Value resid = Value{&tape, tape.constant(Array::scalar(y))} - gamma;
    const double two_b1v = 2.0 * p.beta * (1.0 + p.v);
    const double constant_part = lgamma_pos(p.alpha) - lgamma_pos(p.alpha + 0.5) +
                                 0.5 * std::log(M_PI / p.v) - p.alpha * std::log(two_b1v);
    Value nll = log(square(resid) * p.v + two_b1v) * (p.alpha + 0.5) + constant_part;
    const std::vector<Array> adj = tape.backward(nll.id());
    const double dgamma = adj[static_cast<size_t>(gamma.id())][0];
    return dgamma * st.scale_sq / (p.gamma - y);
}

}  // namespace ecnp
