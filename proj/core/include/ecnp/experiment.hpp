#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ecnp/harness.hpp"

namespace ecnp {

enum class Command {
    Train,
    Eval,
    Headline,
    Outlier,
    Epal,
    Active,
    Ablate,
    Trends,
    Selftest,
};

Command command_from_name(const std::string& name);
std::string command_name(Command c);

/// Everything a run needs, resolved from defaults, environment, config file,
/// and flag overrides (in that precedence order, flags strongest).
struct ExperimentConfig {
    Command command = Command::Headline;
    Generator dataset = Generator::Sinusoid;
    int64_t k = 5;
    HeadKind head = HeadKind::Evidential;
    TrainConfig train;       // iterations, batch, optimizer, loss weights, seed
    bool iterations_set = false;  // true once `iterations` was given explicitly
    int64_t epochs = 5;      // images: iterations = epochs * corpus / batch unless set
    int64_t runs = 3;
    int64_t eval_tasks = 2000;
    std::string out_dir = "runs/out";
    std::string mnist_path;  // directory holding the IDX image files
    int64_t mnist_limit = 10000;
    int64_t mnist_test_limit = 2000;
    std::vector<double> severities{0.0, 5.0, 10.0, 20.0};
    std::vector<double> zetas{0.0, 0.25, 0.5, 1.0};
    int64_t budget = 100;
    int64_t active_tasks = 20;
    int64_t initial_context = 10;
    std::string mode = "both";  // active selection: random | ep-greedy | both
    std::string checkpoint;     // reuse a trained model instead of training
    std::string sweep = "lambda1";  // ablation target: lambda1 | lambda2
    std::vector<double> grid{0.0, 0.01, 0.1, 1.0};
    int64_t profile_tasks = 100;
    int64_t trend_tasks = 100;
    std::vector<int64_t> context_sizes{1, 2, 3, 5, 10, 20, 50};
    bool use_variance = false;  // Inclusion@K counts variance units, not std

    void check() const;
};

/// Apply one key=value setting. Raises UnknownKey for unrecognized keys and
/// TypeError when the value does not parse.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Resolve a config: defaults, then ECNP_* environment variables, then the
/// config file (flat key=value lines, '#' comments), then explicit overrides.
ExperimentConfig parse_config(const std::string& file_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides);

/// Full key=value echo of a config; re-parsing it reproduces the config
/// exactly (doubles serialized with round-trip precision).
std::string config_echo(const ExperimentConfig& cfg);

/// Run the configured command: writes the run manifest into out_dir before
/// any training, then dispatches to the harness. Returns a process exit
/// code (0 on success; selftest returns 1 if any check failed). Raises on
/// invalid configuration (e.g. MissingRequired for an absent image path).
int dispatch(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace ecnp
