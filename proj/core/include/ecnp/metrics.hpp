#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecnp/model.hpp"
#include "ecnp/tasks.hpp"

namespace ecnp {

struct MetricsConfig {
    std::vector<double> inclusion_ks{1.0, 2.0, 3.0};
    /// Feed k * variance instead of k * std to the inclusion/UI indicator.
    /// Off by default (std is unit-consistent with the residual); both
    /// models in a comparison always use the same setting.
    bool use_variance = false;
};

struct MetricsReport {
    double mse = 0.0;
    double ll = 0.0;
    std::vector<double> inclusion;  // aligned with MetricsConfig::inclusion_ks
    double unc_increase = 0.0;
    double mean_al = 0.0;        // evidential heads only, else 0
    double mean_ep = 0.0;
    double mean_evidence = 0.0;
    int64_t n_tasks = 0;
};

/// Mean of squared per-element differences.
double mse(std::span<const double> preds, std::span<const double> truths);

/// Fraction of points with |truth - pred| < k * unc (strict).
double inclusion_at_k(std::span<const double> preds, std::span<const double> uncs,
                      std::span<const double> truths, double k);

/// Fraction of query points whose uncertainty strictly exceeds the model's
/// uncertainty at the nearest support point (pairs aligned by index).
double uncertainty_increase(std::span<const double> query_uncs,
                            std::span<const double> support_matched_uncs);

/// Metrics for one task: forward on the targets, plus a forward on the
/// support inputs so uncertainty_increase can compare each query point
/// against its nearest (Euclidean) support point.
MetricsReport evaluate_task(const ModelParams& params, const Task& task,
                            const MetricsConfig& cfg);

/// Equal-weight average of per-task metrics over an evaluation set.
MetricsReport evaluate(const ModelParams& params, const std::vector<Task>& tasks,
                       const MetricsConfig& cfg);

}  // namespace ecnp
