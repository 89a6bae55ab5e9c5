#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ecnp/evidential.hpp"

namespace ecnp {

/// Outcome of one property check. `worst` is the extreme statistic the check
/// observed (max error, smallest margin, ...); `tolerance` is the bound it
/// must respect. Tolerances are pinned here, not configurable.
struct CheckResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Independent numerical oracles. These deliberately avoid the closed forms
// they are used to validate.

/// Marginal density of y under the hierarchical model
///   sigma^2 ~ InvGamma(alpha, beta), mu | sigma^2 ~ N(gamma, sigma^2 / v),
///   y | mu, sigma^2 ~ N(mu, sigma^2),
/// computed by composite-Simpson quadrature over (mu, log sigma^2). Absolute
/// accuracy is well below 1e-6 for moderate parameter ranges.
double quad_student_t_density(const NIGParams& p, double y);

/// Pointwise log density of the normal-inverse-gamma distribution at
/// (mu, sigma_sq).
double log_nig_density(const NIGParams& p, double mu, double sigma_sq);

/// Pointwise log of prior density times Gaussian likelihood of `ys` at
/// (mu, sigma_sq) — the unnormalized posterior a grid oracle discretizes.
double log_joint_nig_likelihood(const NIGParams& prior, std::span<const double> ys, double mu,
                                double sigma_sq);

// ---------------------------------------------------------------------------
// Property checks. Case counts default to the advertised battery sizes.

/// Autodiff gradient of the full evidential loss (NLL + both regularizers)
/// vs central finite differences over every parameter, on random small
/// models and tasks.
CheckResult check_loss_gradient(int64_t instances = 100, uint64_t seed = 2026);

/// Closed-form Student-t predictive density vs quad_student_t_density.
CheckResult check_student_t_marginal(int64_t cases = 50, uint64_t seed = 2026);

/// nig_posterior_update vs a normalized 200x200 grid posterior.
CheckResult check_conjugacy(int64_t cases = 20, uint64_t seed = 2026);

/// Autodiff-measured per-residual gradient weight vs (2a+1)/(2a+d^2).
CheckResult check_gradient_weight(int64_t cases = 1000, uint64_t seed = 2026);

/// Evidential gradient magnitude is bounded in the residual while the
/// Gaussian gradient grows exactly linearly (residuals 1, 10, 100).
CheckResult check_gradient_boundedness();

/// gaussian_limit_gap strictly decreasing over alpha in {10, 100, 1000} and
/// below 1e-3 at alpha = 1000 (beta = 1).
CheckResult check_gaussian_limit();

/// Var[Student-t predictive] equals aleatoric + epistemic to 1e-12.
CheckResult check_variance_identity(int64_t cases = 1000, uint64_t seed = 2026);

/// Two seeded 200-iteration headline mini-runs produce byte-identical CSV.
/// Writes scratch runs under `scratch_dir`.
CheckResult check_determinism(const std::string& scratch_dir);

/// Full battery in fixed order; prints one line per check to `out` and
/// returns all results. Callers exit nonzero if any result failed.
std::vector<CheckResult> run_selftest(const std::string& scratch_dir, std::ostream& out);

}  // namespace ecnp
