#include "ecnp/metrics.hpp"

#include <cmath>

#include "ecnp/error.hpp"

namespace ecnp {

double mse(std::span<const double> preds, std::span<const double> truths) {
    if (preds.size() != truths.size() || preds.empty())
        raise(Error::Kind::ShapeMismatch, "mse needs equal-length non-empty inputs");
    double acc = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - truths[i];
        acc += d * d;
    }
    return acc / static_cast<double>(preds.size());
}

double inclusion_at_k(std::span<const double> preds, std::span<const double> uncs,
                      std::span<const double> truths, double k) {
    if (preds.size() != truths.size() || preds.size() != uncs.size() || preds.empty())
        raise(Error::Kind::ShapeMismatch, "inclusion_at_k needs equal-length non-empty inputs");
    int64_t inside = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        if (std::fabs(truths[i] - preds[i]) < k * uncs[i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(preds.size());
}

double uncertainty_increase(std::span<const double> query_uncs,
                            std::span<const double> support_matched_uncs) {
    if (query_uncs.size() != support_matched_uncs.size() || query_uncs.empty())
        raise(Error::Kind::ShapeMismatch,
              "uncertainty_increase needs equal-length non-empty inputs");
    int64_t above = 0;
    for (size_t i = 0; i < query_uncs.size(); ++i) {
        if (query_uncs[i] > support_matched_uncs[i]) ++above;
    }
    return static_cast<double>(above) / static_cast<double>(query_uncs.size());
}

namespace {

int64_t nearest_support_index(const Array& xt, int64_t t, const Array& xc) {
    const int64_t d = xt.dim(1);
    int64_t best = 0;
    double best_sq = 0.0;
    for (int64_t c = 0; c < xc.dim(0); ++c) {
        double sq = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double diff = xt[t * d + j] - xc[c * d + j];
            sq += diff * diff;
        }
        if (c == 0 || sq < best_sq) {
            best_sq = sq;
            best = c;
        }
    }
    return best;
}

}  // namespace

MetricsReport evaluate_task(const ModelParams& params, const Task& task,
                            const MetricsConfig& cfg) {
    const Prediction pred = forward(params, task);
    const Prediction support_pred = forward(params, task.xc, task.yc, task.xc);
    const int64_t n_t = task.n_target();
    const int64_t y_dim = task.y_dim();

    MetricsReport report;
    report.n_tasks = 1;

    // MSE and LL pooled over targets and channels.
    double se = 0.0, ll = 0.0;
    for (int64_t t = 0; t < n_t; ++t) {
        for (int64_t c = 0; c < y_dim; ++c) {
            const double truth = task.yt[t * y_dim + c];
            const double diff = pred.mean_at(t, c) - truth;
            se += diff * diff;
            ll += pred.log_density_at(t, c, truth);
        }
    }
    const double n_points = static_cast<double>(n_t * y_dim);
    report.mse = se / n_points;
    report.ll = ll / n_points;

    // Per-channel inclusion and uncertainty-increase, averaged over channels.
    report.inclusion.assign(cfg.inclusion_ks.size(), 0.0);
    std::vector<double> means(static_cast<size_t>(n_t));
    std::vector<double> uncs(static_cast<size_t>(n_t));
    std::vector<double> truths(static_cast<size_t>(n_t));
    std::vector<double> support_uncs(static_cast<size_t>(n_t));
    std::vector<int64_t> nearest(static_cast<size_t>(n_t));
    for (int64_t t = 0; t < n_t; ++t)
        nearest[static_cast<size_t>(t)] = nearest_support_index(task.xt, t, task.xc);

    for (int64_t c = 0; c < y_dim; ++c) {
        for (int64_t t = 0; t < n_t; ++t) {
            const double s = pred.std_at(t, c);
            const double s_support = support_pred.std_at(nearest[static_cast<size_t>(t)], c);
            means[static_cast<size_t>(t)] = pred.mean_at(t, c);
            uncs[static_cast<size_t>(t)] = cfg.use_variance ? s * s : s;
            support_uncs[static_cast<size_t>(t)] =
                cfg.use_variance ? s_support * s_support : s_support;
            truths[static_cast<size_t>(t)] = task.yt[t * y_dim + c];
        }
        for (size_t ki = 0; ki < cfg.inclusion_ks.size(); ++ki)
            report.inclusion[ki] +=
                inclusion_at_k(means, uncs, truths, cfg.inclusion_ks[ki]) /
                static_cast<double>(y_dim);
        report.unc_increase +=
            uncertainty_increase(uncs, support_uncs) / static_cast<double>(y_dim);
    }

    if (params.config.head == HeadKind::Evidential) {
        double al = 0.0, ep = 0.0, ev = 0.0;
        for (int64_t t = 0; t < n_t; ++t) {
            for (int64_t c = 0; c < y_dim; ++c) {
                const UncertaintyReport u = decompose(pred.nig_at(t, c));
                al += u.aleatoric;
                ep += u.epistemic;
                ev += u.evidence;
            }
        }
        report.mean_al = al / n_points;
        report.mean_ep = ep / n_points;
        report.mean_evidence = ev / n_points;
    }
    return report;
}

MetricsReport evaluate(const ModelParams& params, const std::vector<Task>& tasks,
                       const MetricsConfig& cfg) {
    if (tasks.empty()) raise(Error::Kind::InvalidParams, "evaluate needs at least one task");
    MetricsReport total;
    total.inclusion.assign(cfg.inclusion_ks.size(), 0.0);
    for (const Task& task : tasks) {
        const MetricsReport r = evaluate_task(params, task, cfg);
        total.mse += r.mse;
        total.ll += r.ll;
        for (size_t i = 0; i < total.inclusion.size(); ++i) total.inclusion[i] += r.inclusion[i];
        total.unc_increase += r.unc_increase;
        total.mean_al += r.mean_al;
        total.mean_ep += r.mean_ep;
        total.mean_evidence += r.mean_evidence;
    }
    const double n = static_cast<double>(tasks.size());
    total.mse /= n;
    total.ll /= n;
    for (double& v : total.inclusion) v /= n;
    total.unc_increase /= n;
    total.mean_al /= n;
    total.mean_ep /= n;
    total.mean_evidence /= n;
    total.n_tasks = static_cast<int64_t>(tasks.size());
    return total;
}

}  // namespace ecnp
