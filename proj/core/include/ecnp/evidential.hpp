#pragma once

#include <span>

namespace ecnp {

/// Parameters of a Normal-Inverse-Gamma belief over a Gaussian's mean and
/// variance: NIG(mu, sigma^2 | gamma, v, alpha, beta). gamma is the
/// predicted mean, v the pseudo-count of mean evidence, alpha the
/// pseudo-count of variance evidence, beta the variance scale.
struct NIGParams {
    double gamma = 0.0;
    double v = 1.0;
    double alpha = 2.0;
    double beta = 1.0;

    /// Raises InvalidParams unless gamma is finite and v, alpha, beta > 0.
    void check() const;
};

/// Student-t distribution parameterized by squared scale.
struct StudentT {
    double loc = 0.0;
    double scale_sq = 1.0;
    double dof = 2.0;
};

struct UncertaintyReport {
    double aleatoric = 0.0;  // E[sigma^2] = beta / (alpha - 1)
    double epistemic = 0.0;  // Var[mu] = beta / (v (alpha - 1))
    double evidence = 0.0;   // v + alpha + 1/beta
};

/// Marginal predictive of the NIG belief: St(y; gamma, beta(1+v)/(v alpha), 2 alpha).
StudentT predictive(const NIGParams& p);

/// Log density of the Student-t at y.
double student_t_log_density(const StudentT& st, double y);

/// Mean and variance of the Student-t (variance requires dof > 2, raises
/// InvalidParams otherwise).
double student_t_variance(const StudentT& st);

/// Split predictive uncertainty into aleatoric + epistemic parts and report
/// the total evidence. Raises AlphaTooSmall when alpha <= 1.
UncertaintyReport decompose(const NIGParams& p);

/// Closed-form conjugate update of the NIG belief after observing ys
/// (at least one observation):
///   v_N     = v + N
///   gamma_N = (v gamma + N ybar) / (v + N)
///   alpha_N = alpha + N/2
///   beta_N  = beta + 1/2 sum (y - ybar)^2 + N v (ybar - gamma)^2 / (2 (v + N))
NIGParams nig_posterior_update(const NIGParams& prior, std::span<const double> ys);

/// Scaling factor of the NLL gradient w.r.t. gamma relative to the Gaussian
/// case: w = (2 alpha + 1) / (2 alpha + delta_sq), where delta_sq is the
/// squared residual in predictive-scale units. Decreasing in delta_sq, so
/// far-off targets pull on gamma with bounded force.
double outlier_weight(double alpha, double delta_sq);

/// Sup-norm distance on a 501-point grid over gamma +/- 6 sqrt(beta)
/// between the predictive Student-t with v = 1/alpha and the Gaussian
/// N(gamma, variance beta) it converges to as alpha grows with alpha*v
/// held constant. Requires alpha > 1.
double gaussian_limit_gap(double alpha, double beta, double gamma);

}  // namespace ecnp
