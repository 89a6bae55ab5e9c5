#include <deque>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ecnp/error.hpp"
#include "ecnp/experiment.hpp"

namespace {

struct OptSpec {
    const char* flag;
    const char* key;
    const char* desc;
};

constexpr OptSpec kOptions[] = {
    {"--dataset", "dataset", "task family: sinusoid, gp, or mnist"},
    {"--k", "k", "context-set size"},
    {"--head", "head", "model head: cnp or ecnp"},
    {"--iterations", "iterations", "training iterations"},
    {"--epochs", "epochs", "image-corpus epochs (used when --iterations is absent)"},
    {"--batch", "batch", "tasks per training step"},
    {"--lr", "lr", "Adam learning rate"},
    {"--lambda1", "lambda1", "evidence regularizer weight"},
    {"--lambda2", "lambda2", "kernel regularizer weight"},
    {"--log-every", "log_every", "training log stride in steps"},
    {"--seed", "seed", "base seed"},
    {"--grad-clip", "grad_clip", "global gradient-norm clip (0 disables)"},
    {"--out", "out", "output directory"},
    {"--runs", "runs", "independent seeds for the headline comparison"},
    {"--eval-tasks", "eval_tasks", "test tasks per evaluation"},
    {"--mnist-path", "mnist_path", "directory holding the IDX image files"},
    {"--mnist-limit", "mnist_limit", "training images used from the corpus"},
    {"--mnist-test-limit", "mnist_test_limit", "test images used from the corpus"},
    {"--severity", "severity", "outlier severities, comma-separated"},
    {"--zeta", "zeta", "context noise levels, comma-separated"},
    {"--budget", "budget", "active-selection point additions"},
    {"--active-tasks", "active_tasks", "active-selection task count"},
    {"--initial-context", "initial_context", "active-selection starting pixels"},
    {"--mode", "mode", "active summary mode: random, ep-greedy, or both"},
    {"--checkpoint", "checkpoint", "checkpoint to load instead of training"},
    {"--sweep", "sweep", "ablation target: lambda1 or lambda2"},
    {"--grid", "grid", "ablation lambda grid, comma-separated"},
    {"--profile-tasks", "profile_tasks", "tasks averaged in the extrapolation profile"},
    {"--trend-tasks", "trend_tasks", "tasks averaged in evidence trends"},
    {"--context-sizes", "context_sizes", "evidence-trend context sizes, comma-separated"},
    {"--use-variance", "use_variance", "Inclusion@K counts variance units (0/1)"},
};

constexpr std::pair<const char*, const char*> kCommands[] = {
    {"train", "train one head and save a checkpoint"},
    {"eval", "evaluate a checkpoint on fresh test tasks"},
    {"headline", "train CNP and ECNP on paired task streams and compare"},
    {"outlier", "outlier-severity robustness sweep"},
    {"epal", "aleatoric/epistemic uncertainty analysis"},
    {"active", "active context construction on held-out images"},
    {"ablate", "regularizer-weight ablation"},
    {"trends", "evidential parameters vs context size"},
    {"selftest", "gradient checks and numerical oracles"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meta-learning engine for conditional and evidential neural processes"};
    app.require_subcommand(1);

    struct SubState {
        CLI::App* cmd = nullptr;
        std::string name;
        std::string config_path;
        std::map<std::string, std::string> values;
    };
    std::deque<SubState> subs;
    for (const auto& [name, desc] : kCommands) {
        SubState& st = subs.emplace_back();
        st.name = name;
        st.cmd = app.add_subcommand(name, desc);
        st.cmd->add_option("--config", st.config_path, "flat key=value config file");
        for (const OptSpec& opt : kOptions) {
            st.cmd->add_option_function<std::string>(
                opt.flag,
                [&st, key = opt.key](const std::string& value) { st.values[key] = value; },
                opt.desc);
        }
    }

    CLI11_PARSE(app, argc, argv);

    for (SubState& st : subs) {
        if (!st.cmd->parsed()) continue;
        try {
            std::vector<std::pair<std::string, std::string>> overrides(st.values.begin(),
                                                                       st.values.end());
            overrides.emplace_back("command", st.name);
            const ecnp::ExperimentConfig cfg = ecnp::parse_config(st.config_path, overrides);
            return ecnp::dispatch(cfg, std::cout);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }
    return 1;
}
