#include "ecnp/evidential.hpp"

#include <cmath>
#include <string>

#include "ecnp/error.hpp"
#include "ecnp/special.hpp"

namespace ecnp {

void NIGParams::check() const {
    if (!std::isfinite(gamma) || !(v > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
        raise(Error::Kind::InvalidParams,
              "invalid NIG parameters (gamma=" + std::to_string(gamma) +
                  ", v=" + std::to_string(v) + ", alpha=" + std::to_string(alpha) +
                  ", beta=" + std::to_string(beta) + ")");
}

StudentT predictive(const NIGParams& p) {
    p.check();
    return StudentT{p.gamma, p.beta * (1.0 + p.v) / (p.v * p.alpha), 2.0 * p.alpha};
}

double student_t_log_density(const StudentT& st, double y) {
    const double nu = st.dof;
    const double z_sq = (y - st.loc) * (y - st.loc) / st.scale_sq;
    return lgamma_pos(0.5 * (nu + 1.0)) - lgamma_pos(0.5 * nu) -
           0.5 * std::log(nu * M_PI * st.scale_sq) -
           0.5 * (nu + 1.0) * std::log1p(z_sq / nu);
}

double student_t_variance(const StudentT& st) {
    if (!(st.dof > 2.0))
        raise(Error::Kind::InvalidParams,
              "Student-t variance undefined for dof = " + std::to_string(st.dof));
    return st.scale_sq * st.dof / (st.dof - 2.0);
}

UncertaintyReport decompose(const NIGParams& p) {
    p.check();
    if (!(p.alpha > 1.0))
        raise(Error::Kind::AlphaTooSmall,
              "decompose requires alpha > 1, got " + std::to_string(p.alpha));
    UncertaintyReport r;
    r.aleatoric = p.beta / (p.alpha - 1.0);
    r.epistemic = p.beta / (p.v * (p.alpha - 1.0));
    r.evidence = p.v + p.alpha + 1.0 / p.beta;
    return r;
}

NIGParams nig_posterior_update(const NIGParams& prior, std::span<const double> ys) {
    prior.check();
    if (ys.empty())
        raise(Error::Kind::InvalidParams, "nig_posterior_update needs at least one observation");
    const double n = static_cast<double>(ys.size());
    double ybar = 0.0;
    for (double y : ys) ybar += y;
    ybar /= n;
    double ss = 0.0;
    for (double y : ys) ss += (y - ybar) * (y - ybar);

    NIGParams post;
    post.v = prior.v + n;
    post.gamma = (prior.v * prior.gamma + n * ybar) / post.v;
    post.alpha = prior.alpha + 0.5 * n;
    post.beta = prior.beta + 0.5 * ss +
                n * prior.v * (ybar - prior.gamma) * (ybar - prior.gamma) / (2.0 * post.v);
    return post;
}

double outlier_weight(double alpha, double delta_sq) {
    if (!(alpha > 0.0) || delta_sq < 0.0)
        raise(Error::Kind::InvalidParams, "outlier_weight requires alpha > 0 and delta_sq >= 0");
    return (2.0 * alpha + 1.0) / (2.0 * alpha + delta_sq);
}

double gaussian_limit_gap(double alpha, double beta, double gamma) {
    if (!(alpha > 1.0) || !(beta > 0.0))
        raise(Error::Kind::InvalidParams, "gaussian_limit_gap requires alpha > 1 and beta > 0");
    const NIGParams p{gamma, 1.0 / alpha, alpha, beta};
    const StudentT st = predictive(p);
    const double sd = std::sqrt(beta);
    const double log_norm = -0.5 * std::log(2.0 * M_PI * beta);
    double sup = 0.0;
    constexpr int kPoints = 501;
    for (int i = 0; i < kPoints; ++i) {
        const double y = gamma - 6.0 * sd + 12.0 * sd * static_cast<double>(i) / (kPoints - 1);
        const double t_pdf = std::exp(student_t_log_density(st, y));
        const double z = (y - gamma) / sd;
        const double g_pdf = std::exp(log_norm - 0.5 * z * z);
        sup = std::max(sup, std::fabs(t_pdf - g_pdf));
    }
    return sup;
}

}  // namespace ecnp
