#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ecnp/checkpoint.hpp"
#include "ecnp/metrics.hpp"
#include "ecnp/model.hpp"
#include "ecnp/nn.hpp"
#include "ecnp/objective.hpp"
#include "ecnp/tasks.hpp"

namespace ecnp {

struct TrainConfig {
    int64_t iterations = 30000;
    int64_t batch_tasks = 8;
    AdamConfig adam;
    LossConfig loss;
    int64_t log_every = 1000;
    uint64_t seed = 0;
    double grad_clip = 0.0;  // 0 disables clipping

    void check() const;
};

/// Deterministic task stream: tasks are a pure function of their index, so
/// any consumption order reproduces the same batch contents.
using TaskSource = std::function<Task(uint64_t index)>;

struct TrainLogEntry {
    int64_t step = 0;
    LossBreakdown loss;
    double wall_s = 0.0;
    bool skipped = false;  // Adam step skipped on a non-finite gradient
};

struct TrainResult {
    std::vector<TrainLogEntry> entries;
    int64_t skipped_steps = 0;
    double wall_s = 0.0;
};

/// Episodic training: per iteration, draw batch_tasks tasks, average their
/// per-task losses, take one Adam step. Mutates `state` in place (resuming
/// from state.step up to cfg.iterations) so the caller can checkpoint.
/// Writes line-delimited records to `log` (when non-null) every log_every
/// steps. Raises NonFiniteLoss with the offending task stream indices if
/// the batch loss is not finite.
TrainResult meta_train(TrainState& state, const TaskSource& source, const TrainConfig& cfg,
                       std::ostream* log);

/// Convenience wrapper: fresh optimizer, model passed in/out directly.
TrainResult meta_train(ModelParams& model, const TaskSource& source, const TrainConfig& cfg,
                       std::ostream* log);

/// Task sources and evaluation sets. Training streams use (seed, index)
/// directly; evaluation streams use a salted seed so they never collide
/// with training tasks.
TaskSource regression_source(Generator gen, int64_t k, uint64_t seed);
TaskSource outlier_source(Generator gen, int64_t k, uint64_t seed, double severity);

using ImageCorpus = std::shared_ptr<const std::vector<Array>>;
TaskSource image_source(ImageCorpus corpus, int64_t k, uint64_t seed);

std::vector<Task> regression_eval_tasks(Generator gen, int64_t k, uint64_t seed, int64_t count);
std::vector<Task> image_eval_tasks(const ImageCorpus& corpus, int64_t k, uint64_t seed,
                                   int64_t count);

/// Model configuration for one dataset/head pair (dims per the appendix:
/// 1-D regression or 2-D pixel coordinates, 128-wide trunk).
ModelConfig model_config_for(Generator dataset, HeadKind head);

// ---------------------------------------------------------------------------
// Experiment suites. Each writes CSV artifacts into out_dir and returns the
// numbers the caller (or a test) most often asserts on. CSV columns are
// documented in the repository README.

struct HeadlineOptions {
    Generator dataset = Generator::Sinusoid;
    int64_t k = 5;
    TrainConfig train;
    int64_t runs = 1;  // seeds train.seed .. train.seed + runs - 1
    int64_t eval_tasks = 2000;
    MetricsConfig metrics;
    ImageCorpus train_images;  // mnist only
    ImageCorpus test_images;   // mnist only
    bool save_checkpoints = true;
};

struct HeadlineResult {
    MetricsReport cnp;   // mean over runs
    MetricsReport ecnp;  // mean over runs
};

/// Train CNP and ECNP on identical task streams, evaluate both on the same
/// test tasks; writes headline.csv (one row per head/seed plus mean rows)
/// and per-run checkpoints/training logs.
HeadlineResult run_headline(const HeadlineOptions& opt, const std::string& out_dir);

struct OutlierOptions {
    Generator dataset = Generator::Sinusoid;
    int64_t k = 5;
    TrainConfig train;
    std::vector<double> severities{0.0, 5.0, 10.0, 20.0};
    int64_t eval_tasks = 2000;
    MetricsConfig metrics;
};

struct OutlierCell {
    double severity = 0.0;
    double cnp_mse = 0.0;
    double ecnp_mse = 0.0;
};

/// Train both heads on streams where one target per task carries an
/// additive outlier of the given severity; evaluate on clean test tasks.
/// Writes outlier.csv.
std::vector<OutlierCell> run_outlier_sweep(const OutlierOptions& opt, const std::string& out_dir);

struct EpalOptions {
    Generator dataset = Generator::Sinusoid;
    int64_t k = 5;
    std::vector<double> zetas{0.0, 0.25, 0.5, 1.0};
    int64_t eval_tasks = 2000;
    int64_t profile_tasks = 100;
    uint64_t seed = 0;
    MetricsConfig metrics;
};

struct EpalResult {
    std::vector<std::pair<double, double>> al_by_zeta;   // (zeta, mean AL)
    std::vector<std::pair<double, double>> mse_by_zeta;  // (zeta, MSE)
    // Sinusoid extrapolation profile region means (epistemic uncertainty).
    double ep_train_range = 0.0;    // x in [-5, 5]
    double ep_extrapolation = 0.0;  // x in [6, 10]
};

/// Aleatoric response to context noise (any regression dataset) and, for
/// sinusoid, the epistemic extrapolation profile on x in [-5, 10]. Expects
/// a trained evidential model. Writes epal_noise.csv and, for sinusoid,
/// epal_profile.csv + epal_regions.csv.
EpalResult run_epal_analysis(const ModelParams& model, const EpalOptions& opt,
                             const std::string& out_dir);

struct ActiveOptions {
    int64_t n_tasks = 20;
    int64_t budget = 100;
    int64_t initial_context = 10;
    uint64_t seed = 0;
};

struct ActiveTaskResult {
    int64_t task = 0;
    double initial_mse = 0.0;
    double random_final = 0.0;
    double ep_greedy_final = 0.0;
};

/// Active context construction on held-out images: starting from a small
/// random context, add one pixel at a time — uniformly at random, or the
/// remaining pixel with the highest epistemic uncertainty — and track MSE
/// over the fixed evaluation set (the complement of the initial context).
/// Expects a trained evidential image model. Writes active.csv.
std::vector<ActiveTaskResult> run_active_selection(const ModelParams& model,
                                                   const ImageCorpus& test_images,
                                                   const ActiveOptions& opt,
                                                   const std::string& out_dir);

struct AblationOptions {
    Generator dataset = Generator::Sinusoid;
    int64_t k = 5;
    TrainConfig train;
    bool sweep_lambda1 = true;  // false sweeps lambda2
    std::vector<double> grid{0.0, 0.01, 0.1, 1.0};
    int64_t eval_tasks = 2000;
    MetricsConfig metrics;
};

struct AblationRow {
    double lambda = 0.0;
    double mse = 0.0;
    double ll = 0.0;
    double mean_al = 0.0;
    double mean_ep = 0.0;
    double mean_evidence = 0.0;
};

/// Train one evidential model per lambda grid point. Writes ablation.csv.
std::vector<AblationRow> run_lambda_ablation(const AblationOptions& opt,
                                             const std::string& out_dir);

struct TrendsOptions {
    Generator dataset = Generator::Sinusoid;
    std::vector<int64_t> context_sizes{1, 2, 3, 5, 10, 20, 50};
    int64_t n_tasks = 100;
    uint64_t seed = 0;
};

struct TrendRow {
    int64_t n_context = 0;
    double mean_alpha = 0.0;
    double mean_v = 0.0;
    double mean_beta = 0.0;
    double mse = 0.0;
    double mean_evidence = 0.0;
};

/// Evaluate a trained evidential model on nested context subsets of the
/// same tasks and record how the evidential parameters grow with context.
/// Writes trends.csv.
std::vector<TrendRow> run_evidence_trends(const ModelParams& model, const TrendsOptions& opt,
                                          const std::string& out_dir);

/// Fixed-format float for CSV cells ("%.10g"), so identical runs emit
/// byte-identical files.
std::string csv_num(double v);

}  // namespace ecnp
