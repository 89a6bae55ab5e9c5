#pragma once

#include "ecnp/evidential.hpp"
#include "ecnp/model.hpp"
#include "ecnp/tape.hpp"
#include "ecnp/tasks.hpp"

namespace ecnp {

struct LossConfig {
    double lambda1 = 0.1;  // evidence regularizer weight
    double lambda2 = 0.1;  // kernel regularizer weight
    /// When set, per-task sums are divided by the target count. Off by
    /// default: the training objective sums over targets, so tasks with
    /// more targets weigh more, exactly as written.
    bool normalize_targets = false;

    void check() const;
};

struct LossBreakdown {
    double nll = 0.0;
    double evid_reg = 0.0;    // unweighted sum; total applies lambda1
    double kernel_reg = 0.0;  // unweighted sum; total applies lambda2
    double total = 0.0;       // reg terms with zero weight are skipped and read 0
};

/// Single-point closed forms (plain doubles, used by tests and analysis).

/// Negative log predictive density of the NIG belief at y:
/// log(Gamma(alpha) sqrt(pi/v) / Gamma(alpha + 1/2)) - alpha log(2beta(1+v))
///   + (alpha + 1/2) log((y-gamma)^2 v + 2beta(1+v)).
/// Identical to -student_t_log_density(predictive(p), y).
double evid_nll(const NIGParams& p, double y);

/// Evidence penalty |y - gamma| * (v + alpha + 1/beta): confident wrong
/// predictions pay in proportion to their total evidence.
double evid_reg(const NIGParams& p, double y);

/// Kernel penalty v * min over context inputs of ||x_t - x_c||_2. Raises
/// EmptyContext when the context is empty.
double kernel_reg(const NIGParams& p, const Array& x_t, const Array& xc);

/// Gaussian negative log density 0.5 log(2 pi sigma^2) + (y-mu)^2/(2 sigma^2).
double gaussian_nll(double mu, double sigma, double y);

/// Differentiable per-task losses. Component nodes are scalar sums over
/// targets and channels; `total` folds in the lambda weights.
struct TracedLoss {
    Value nll;
    Value evid_reg;
    Value kernel_reg;
    Value total;

    LossBreakdown breakdown() const;
};

/// ECNP objective for one task: sum over targets/channels of the NLL plus
/// the evidence and kernel regularizers. The min-distance factor of the
/// kernel term is data-only, so it enters the tape as a constant matrix
/// reduced with min_axis; gradients reach v but never gamma.
TracedLoss ecnp_loss(const NigNodes& nig, Tape& tape, const Task& task, const LossConfig& cfg);

/// Gaussian NLL summed over targets/channels (CNP baseline); both
/// regularizer nodes are constant zero.
TracedLoss gaussian_loss(const GaussianNodes& g, Tape& tape, const Task& task,
                         const LossConfig& cfg);

/// Measure d(evid_nll)/d(gamma) with the tape and divide out the Gaussian
/// gradient factor s^-2 (gamma - y): the quotient is the Student-t outlier
/// weight and must equal outlier_weight(alpha, delta_sq). When y == gamma
/// the quotient is 0/0; the closed form is returned directly.
double gradient_weight_empirical(const NIGParams& p, double y);

}  // namespace ecnp
