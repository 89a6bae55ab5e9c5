#include "ecnp/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ecnp/error.hpp"
#include "ecnp/mnist.hpp"
#include "ecnp/selftest.hpp"
#include "ecnp/version.hpp"

namespace ecnp {
namespace {

// Every key the flat config understands, in manifest echo order.
constexpr const char* kKeys[] = {
    "command",      "dataset",       "k",
    "head",         "iterations",    "epochs",
    "batch",        "lr",            "lambda1",
    "lambda2",      "log_every",     "seed",
    "grad_clip",    "out",           "runs",
    "eval_tasks",   "mnist_path",    "mnist_limit",
    "mnist_test_limit", "severity",  "zeta",
    "budget",       "active_tasks",  "initial_context",
    "mode",         "checkpoint",    "sweep",
    "grid",         "profile_tasks", "trend_tasks",
    "context_sizes", "use_variance",
};

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

int64_t parse_i64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const int64_t v = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise(Error::Kind::TypeError, "key '" + key + "' expects an integer, got '" + value + "'");
    }
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const uint64_t v = std::stoull(value, &used);
        if (used != value.size() || value.front() == '-') throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise(Error::Kind::TypeError,
              "key '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
}

double parse_f64(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise(Error::Kind::TypeError, "key '" + key + "' expects a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    raise(Error::Kind::TypeError, "key '" + key + "' expects a boolean, got '" + value + "'");
}

std::vector<double> parse_f64_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const std::string& part : split(value, ','))
        if (!trim(part).empty()) out.push_back(parse_f64(key, trim(part)));
    if (out.empty())
        raise(Error::Kind::TypeError, "key '" + key + "' expects a comma-separated list");
    return out;
}

std::vector<int64_t> parse_i64_list(const std::string& key, const std::string& value) {
    std::vector<int64_t> out;
    for (const std::string& part : split(value, ','))
        if (!trim(part).empty()) out.push_back(parse_i64(key, trim(part)));
    if (out.empty())
        raise(Error::Kind::TypeError, "key '" + key + "' expects a comma-separated list");
    return out;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_same_v<T, double>) {
            out += num17(xs[i]);
        } else {
            out += std::to_string(xs[i]);
        }
    }
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise(Error::Kind::IoError, "cannot create directory " + dir + ": " + ec.message());
}

void write_manifest(const ExperimentConfig& cfg) {
    std::ofstream f(cfg.out_dir + "/manifest.txt");
    if (!f) raise(Error::Kind::IoError, "cannot write manifest in " + cfg.out_dir);
    f << "# run manifest (re-parseable as a config file)\n";
    f << "# version=" << kVersion << " git=" << kGitHash << "\n";
    f << config_echo(cfg);
}

ImageCorpus load_corpus(const std::string& dir, bool train_split, int64_t limit) {
    namespace fs = std::filesystem;
    const std::vector<std::string> names =
        train_split ? std::vector<std::string>{"train-images-idx3-ubyte", "train-images.idx3-ubyte"}
                    : std::vector<std::string>{"t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"};
    for (const std::string& name : names) {
        const fs::path path = fs::path(dir) / name;
        if (!fs::exists(path)) continue;
        std::vector<Array> images = load_mnist_images(path.string());
        if (limit > 0 && static_cast<int64_t>(images.size()) > limit)
            images.resize(static_cast<size_t>(limit));
        return std::make_shared<const std::vector<Array>>(std::move(images));
    }
    raise(Error::Kind::IoError,
          "no " + std::string(train_split ? "training" : "test") + " image file found under " +
              dir + " (expected " + names[0] + ")");
}

void require_regression(const ExperimentConfig& cfg) {
    if (cfg.dataset == Generator::Mnist)
        raise(Error::Kind::InvalidParams,
              command_name(cfg.command) + " supports regression datasets only");
}

void require_mnist_path(const ExperimentConfig& cfg) {
    if (cfg.mnist_path.empty())
        raise(Error::Kind::MissingRequired,
              "mnist_path is required for " + command_name(cfg.command) + " on this dataset");
}

void print_report(std::ostream& out, const std::string& label, const MetricsReport& r) {
    out << label << ": mse=" << csv_num(r.mse) << " ll=" << csv_num(r.ll);
    if (!r.inclusion.empty()) out << " inclusion@1=" << csv_num(r.inclusion[0]);
    out << " unc_increase=" << csv_num(r.unc_increase);
    out << " al=" << csv_num(r.mean_al) << " ep=" << csv_num(r.mean_ep) << "\n";
}

/// A trained evidential model for the analysis commands: loaded from the
/// configured checkpoint when given, trained from scratch otherwise.
ModelParams obtain_evidential(const ExperimentConfig& cfg, const TaskSource& source,
                              std::ostream& out) {
    if (!cfg.checkpoint.empty()) {
        TrainState state = load_checkpoint(cfg.checkpoint);
        out << "loaded checkpoint " << cfg.checkpoint << " (step " << state.step << ")\n";
        if (state.model.config.head != HeadKind::Evidential)
            raise(Error::Kind::InvalidParams, "checkpoint does not hold an evidential model");
        return std::move(state.model);
    }
    out << "no checkpoint given; training an evidential model for " << cfg.train.iterations
        << " steps first\n";
    TrainState state;
    state.model =
        ModelParams::create(model_config_for(cfg.dataset, HeadKind::Evidential), cfg.train.seed);
    state.seed = cfg.train.seed;
    std::ofstream log(cfg.out_dir + "/train_ecnp.log");
    meta_train(state, source, cfg.train, log ? &log : nullptr);
    save_checkpoint(cfg.out_dir + "/ckpt_ecnp.bin", state);
    return std::move(state.model);
}

}  // namespace

Command command_from_name(const std::string& name) {
    if (name == "train") return Command::Train;
    if (name == "eval") return Command::Eval;
    if (name == "headline") return Command::Headline;
    if (name == "outlier") return Command::Outlier;
    if (name == "epal") return Command::Epal;
    if (name == "active") return Command::Active;
    if (name == "ablate") return Command::Ablate;
    if (name == "trends") return Command::Trends;
    if (name == "selftest") return Command::Selftest;
    raise(Error::Kind::TypeError, "unknown command '" + name + "'");
}

std::string command_name(Command c) {
    switch (c) {
        case Command::Train: return "train";
        case Command::Eval: return "eval";
        case Command::Headline: return "headline";
        case Command::Outlier: return "outlier";
        case Command::Epal: return "epal";
        case Command::Active: return "active";
        case Command::Ablate: return "ablate";
        case Command::Trends: return "trends";
        case Command::Selftest: return "selftest";
    }
    raise(Error::Kind::InvalidParams, "invalid command value");
}

void ExperimentConfig::check() const {
    if (k < 1) raise(Error::Kind::InvalidParams, "k must be at least 1");
    if (runs < 1 || eval_tasks < 1 || epochs < 1)
        raise(Error::Kind::InvalidParams, "runs, eval_tasks, and epochs must be positive");
    if (mode != "random" && mode != "ep-greedy" && mode != "both")
        raise(Error::Kind::TypeError, "mode must be random, ep-greedy, or both");
    if (sweep != "lambda1" && sweep != "lambda2")
        raise(Error::Kind::TypeError, "sweep must be lambda1 or lambda2");
    if (budget < 0 || active_tasks < 1 || initial_context < 1)
        raise(Error::Kind::InvalidParams, "active-selection sizes must be positive");
    if (mnist_limit < 1 || mnist_test_limit < 1)
        raise(Error::Kind::InvalidParams, "image corpus limits must be positive");
    if (profile_tasks < 1 || trend_tasks < 1)
        raise(Error::Kind::InvalidParams, "task counts must be positive");
    train.check();
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "command") {
        cfg.command = command_from_name(value);
    } else if (key == "dataset") {
        cfg.dataset = generator_from_name(value);
    } else if (key == "k") {
        cfg.k = parse_i64(key, value);
    } else if (key == "head") {
        cfg.head = head_from_name(value);
    } else if (key == "iterations") {
        cfg.train.iterations = parse_i64(key, value);
        cfg.iterations_set = true;
    } else if (key == "epochs") {
        cfg.epochs = parse_i64(key, value);
    } else if (key == "batch") {
        cfg.train.batch_tasks = parse_i64(key, value);
    } else if (key == "lr") {
        cfg.train.adam.lr = parse_f64(key, value);
    } else if (key == "lambda1") {
        cfg.train.loss.lambda1 = parse_f64(key, value);
    } else if (key == "lambda2") {
        cfg.train.loss.lambda2 = parse_f64(key, value);
    } else if (key == "log_every") {
        cfg.train.log_every = parse_i64(key, value);
    } else if (key == "seed") {
        cfg.train.seed = parse_u64(key, value);
    } else if (key == "grad_clip") {
        cfg.train.grad_clip = parse_f64(key, value);
    } else if (key == "out") {
        cfg.out_dir = value;
    } else if (key == "runs") {
        cfg.runs = parse_i64(key, value);
    } else if (key == "eval_tasks") {
        cfg.eval_tasks = parse_i64(key, value);
    } else if (key == "mnist_path") {
        cfg.mnist_path = value;
    } else if (key == "mnist_limit") {
        cfg.mnist_limit = parse_i64(key, value);
    } else if (key == "mnist_test_limit") {
        cfg.mnist_test_limit = parse_i64(key, value);
    } else if (key == "severity") {
        cfg.severities = parse_f64_list(key, value);
    } else if (key == "zeta") {
        cfg.zetas = parse_f64_list(key, value);
    } else if (key == "budget") {
        cfg.budget = parse_i64(key, value);
    } else if (key == "active_tasks") {
        cfg.active_tasks = parse_i64(key, value);
    } else if (key == "initial_context") {
        cfg.initial_context = parse_i64(key, value);
    } else if (key == "mode") {
        cfg.mode = value;
    } else if (key == "checkpoint") {
        cfg.checkpoint = value;
    } else if (key == "sweep") {
        cfg.sweep = value;
    } else if (key == "grid") {
        cfg.grid = parse_f64_list(key, value);
    } else if (key == "profile_tasks") {
        cfg.profile_tasks = parse_i64(key, value);
    } else if (key == "trend_tasks") {
        cfg.trend_tasks = parse_i64(key, value);
    } else if (key == "context_sizes") {
        cfg.context_sizes = parse_i64_list(key, value);
    } else if (key == "use_variance") {
        cfg.use_variance = parse_bool(key, value);
    } else {
        raise(Error::Kind::UnknownKey, "unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config(const std::string& file_path,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
    ExperimentConfig cfg;

    // Environment (lowest precedence): ECNP_<KEY> per known key.
    for (const char* key : kKeys) {
        std::string env_name = "ECNP_";
        for (const char* c = key; *c; ++c)
            env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
        if (const char* value = std::getenv(env_name.c_str())) apply_setting(cfg, key, value);
    }

    if (!file_path.empty()) {
        std::ifstream in(file_path);
        if (!in) raise(Error::Kind::IoError, "cannot read config file " + file_path);
        std::string line;
        int64_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string stripped = trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                raise(Error::Kind::TypeError, file_path + ":" + std::to_string(line_no) +
                                                  ": expected key=value, got '" + stripped + "'");
            apply_setting(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
        }
    }

    for (const auto& [key, value] : overrides) apply_setting(cfg, key, value);
    return cfg;
}

std::string config_echo(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "command=" << command_name(cfg.command) << "\n";
    out << "dataset=" << generator_name(cfg.dataset) << "\n";
    out << "k=" << cfg.k << "\n";
    out << "head=" << head_name(cfg.head) << "\n";
    out << "iterations=" << cfg.train.iterations << "\n";
    out << "epochs=" << cfg.epochs << "\n";
    out << "batch=" << cfg.train.batch_tasks << "\n";
    out << "lr=" << num17(cfg.train.adam.lr) << "\n";
    out << "lambda1=" << num17(cfg.train.loss.lambda1) << "\n";
    out << "lambda2=" << num17(cfg.train.loss.lambda2) << "\n";
    out << "log_every=" << cfg.train.log_every << "\n";
    out << "seed=" << cfg.train.seed << "\n";
    out << "grad_clip=" << num17(cfg.train.grad_clip) << "\n";
    out << "out=" << cfg.out_dir << "\n";
    out << "runs=" << cfg.runs << "\n";
    out << "eval_tasks=" << cfg.eval_tasks << "\n";
    out << "mnist_path=" << cfg.mnist_path << "\n";
    out << "mnist_limit=" << cfg.mnist_limit << "\n";
    out << "mnist_test_limit=" << cfg.mnist_test_limit << "\n";
    out << "severity=" << join_list(cfg.severities) << "\n";
    out << "zeta=" << join_list(cfg.zetas) << "\n";
    out << "budget=" << cfg.budget << "\n";
    out << "active_tasks=" << cfg.active_tasks << "\n";
    out << "initial_context=" << cfg.initial_context << "\n";
    out << "mode=" << cfg.mode << "\n";
    out << "checkpoint=" << cfg.checkpoint << "\n";
    out << "sweep=" << cfg.sweep << "\n";
    out << "grid=" << join_list(cfg.grid) << "\n";
    out << "profile_tasks=" << cfg.profile_tasks << "\n";
    out << "trend_tasks=" << cfg.trend_tasks << "\n";
    out << "context_sizes=" << join_list(cfg.context_sizes) << "\n";
    out << "use_variance=" << (cfg.use_variance ? 1 : 0) << "\n";
    return out.str();
}

int dispatch(const ExperimentConfig& cfg_in, std::ostream& out) {
    ExperimentConfig cfg = cfg_in;
    cfg.check();
    ensure_dir(cfg.out_dir);
    write_manifest(cfg);

    MetricsConfig metrics;
    metrics.use_variance = cfg.use_variance;

    // Image corpora (and epoch-derived iteration counts) where needed.
    ImageCorpus train_images, test_images;
    const bool mnist = cfg.dataset == Generator::Mnist;
    const bool wants_train_images =
        (mnist && (cfg.command == Command::Train || cfg.command == Command::Headline)) ||
        (cfg.command == Command::Active && cfg.checkpoint.empty());
    const bool wants_test_images =
        (mnist && (cfg.command == Command::Eval || cfg.command == Command::Headline)) ||
        cfg.command == Command::Active;
    if (wants_train_images || wants_test_images) {
        if (cfg.command == Command::Active && !mnist)
            raise(Error::Kind::InvalidParams, "active selection runs on the image dataset");
        require_mnist_path(cfg);
        if (wants_train_images) {
            train_images = load_corpus(cfg.mnist_path, true, cfg.mnist_limit);
            if (!cfg.iterations_set) {
                cfg.train.iterations = std::max<int64_t>(
                    1, cfg.epochs * static_cast<int64_t>(train_images->size()) /
                           cfg.train.batch_tasks);
                cfg.iterations_set = true;
                write_manifest(cfg);  // echo the resolved iteration count
            }
        }
        if (wants_test_images)
            test_images = load_corpus(cfg.mnist_path, false, cfg.mnist_test_limit);
    }

    switch (cfg.command) {
        case Command::Selftest: {
            const std::vector<CheckResult> results =
                run_selftest(cfg.out_dir + "/selftest", out);
            const bool all_passed =
                std::all_of(results.begin(), results.end(),
                            [](const CheckResult& r) { return r.passed; });
            out << (all_passed ? "all checks passed\n" : "some checks FAILED\n");
            return all_passed ? 0 : 1;
        }

        case Command::Train: {
            TrainState state;
            if (!cfg.checkpoint.empty()) {
                state = load_checkpoint(cfg.checkpoint);
                out << "resuming from " << cfg.checkpoint << " at step " << state.step << "\n";
            } else {
                state.model =
                    ModelParams::create(model_config_for(cfg.dataset, cfg.head), cfg.train.seed);
                state.seed = cfg.train.seed;
            }
            const TaskSource source =
                mnist ? image_source(train_images, cfg.k, cfg.train.seed)
                      : regression_source(cfg.dataset, cfg.k, cfg.train.seed);
            std::ofstream log(cfg.out_dir + "/train.log");
            const TrainResult result = meta_train(state, source, cfg.train, log ? &log : nullptr);
            save_checkpoint(cfg.out_dir + "/checkpoint.bin", state);
            out << "trained " << head_name(state.model.config.head) << " on "
                << generator_name(cfg.dataset) << " to step " << state.step << " (skipped "
                << result.skipped_steps << " steps)";
            if (!result.entries.empty())
                out << ", final loss " << csv_num(result.entries.back().loss.total);
            out << "\ncheckpoint: " << cfg.out_dir << "/checkpoint.bin\n";
            return 0;
        }

        case Command::Eval: {
            if (cfg.checkpoint.empty())
                raise(Error::Kind::MissingRequired, "eval needs checkpoint=<path>");
            TrainState state = load_checkpoint(cfg.checkpoint);
            const std::vector<Task> tasks =
                mnist ? image_eval_tasks(test_images, cfg.k, cfg.train.seed, cfg.eval_tasks)
                      : regression_eval_tasks(cfg.dataset, cfg.k, cfg.train.seed, cfg.eval_tasks);
            const MetricsReport report = evaluate(state.model, tasks, metrics);

            std::ofstream csv(cfg.out_dir + "/eval.csv");
            csv << "dataset,k,head,seed,eval_tasks,mse,ll,inclusion1,inclusion2,inclusion3,"
                   "unc_increase,mean_al,mean_ep,mean_evidence\n";
            csv << generator_name(cfg.dataset) << ',' << cfg.k << ','
                << head_name(state.model.config.head) << ',' << cfg.train.seed << ','
                << tasks.size() << ',' << csv_num(report.mse) << ',' << csv_num(report.ll);
            for (double inc : report.inclusion) csv << ',' << csv_num(inc);
            csv << ',' << csv_num(report.unc_increase) << ',' << csv_num(report.mean_al) << ','
                << csv_num(report.mean_ep) << ',' << csv_num(report.mean_evidence) << '\n';
            print_report(out, head_name(state.model.config.head), report);
            return 0;
        }

        case Command::Headline: {
            HeadlineOptions opt;
            opt.dataset = cfg.dataset;
            opt.k = cfg.k;
            opt.train = cfg.train;
            opt.runs = cfg.runs;
            opt.eval_tasks = cfg.eval_tasks;
            opt.metrics = metrics;
            opt.train_images = train_images;
            opt.test_images = test_images;
            const HeadlineResult result = run_headline(opt, cfg.out_dir);
            print_report(out, "cnp ", result.cnp);
            print_report(out, "ecnp", result.ecnp);
            return 0;
        }

        case Command::Outlier: {
            require_regression(cfg);
            OutlierOptions opt;
            opt.dataset = cfg.dataset;
            opt.k = cfg.k;
            opt.train = cfg.train;
            opt.severities = cfg.severities;
            opt.eval_tasks = cfg.eval_tasks;
            opt.metrics = metrics;
            for (const OutlierCell& cell : run_outlier_sweep(opt, cfg.out_dir))
                out << "severity=" << csv_num(cell.severity)
                    << " cnp_mse=" << csv_num(cell.cnp_mse)
                    << " ecnp_mse=" << csv_num(cell.ecnp_mse) << "\n";
            return 0;
        }

        case Command::Epal: {
            require_regression(cfg);
            const ModelParams model = obtain_evidential(
                cfg, regression_source(cfg.dataset, cfg.k, cfg.train.seed), out);
            EpalOptions opt;
            opt.dataset = cfg.dataset;
            opt.k = cfg.k;
            opt.zetas = cfg.zetas;
            opt.eval_tasks = cfg.eval_tasks;
            opt.profile_tasks = cfg.profile_tasks;
            opt.seed = cfg.train.seed;
            opt.metrics = metrics;
            const EpalResult result = run_epal_analysis(model, opt, cfg.out_dir);
            for (size_t i = 0; i < result.al_by_zeta.size(); ++i)
                out << "zeta=" << csv_num(result.al_by_zeta[i].first)
                    << " mean_al=" << csv_num(result.al_by_zeta[i].second)
                    << " mse=" << csv_num(result.mse_by_zeta[i].second) << "\n";
            if (cfg.dataset == Generator::Sinusoid)
                out << "mean EP in train range=" << csv_num(result.ep_train_range)
                    << ", extrapolation=" << csv_num(result.ep_extrapolation) << "\n";
            return 0;
        }

        case Command::Active: {
            const ModelParams model = obtain_evidential(
                cfg, train_images ? image_source(train_images, cfg.k, cfg.train.seed)
                                  : TaskSource{},
                out);
            ActiveOptions opt;
            opt.n_tasks = cfg.active_tasks;
            opt.budget = cfg.budget;
            opt.initial_context = cfg.initial_context;
            opt.seed = cfg.train.seed;
            const std::vector<ActiveTaskResult> results =
                run_active_selection(model, test_images, opt, cfg.out_dir);
            int64_t wins = 0;
            for (const ActiveTaskResult& r : results) {
                if (r.ep_greedy_final < r.random_final) ++wins;
                if (cfg.mode != "both")
                    out << "task=" << r.task << " " << cfg.mode << "_final="
                        << csv_num(cfg.mode == "random" ? r.random_final : r.ep_greedy_final)
                        << "\n";
            }
            out << "ep-greedy beat random on " << wins << "/" << results.size() << " tasks\n";
            return 0;
        }

        case Command::Ablate: {
            require_regression(cfg);
            AblationOptions opt;
            opt.dataset = cfg.dataset;
            opt.k = cfg.k;
            opt.train = cfg.train;
            opt.sweep_lambda1 = cfg.sweep == "lambda1";
            opt.grid = cfg.grid;
            opt.eval_tasks = cfg.eval_tasks;
            opt.metrics = metrics;
            for (const AblationRow& row : run_lambda_ablation(opt, cfg.out_dir))
                out << cfg.sweep << "=" << csv_num(row.lambda) << " mse=" << csv_num(row.mse)
                    << " al=" << csv_num(row.mean_al) << " ep=" << csv_num(row.mean_ep)
                    << " evidence=" << csv_num(row.mean_evidence) << "\n";
            return 0;
        }

        case Command::Trends: {
            require_regression(cfg);
            const ModelParams model = obtain_evidential(
                cfg, regression_source(cfg.dataset, cfg.k, cfg.train.seed), out);
            TrendsOptions opt;
            opt.dataset = cfg.dataset;
            opt.context_sizes = cfg.context_sizes;
            opt.n_tasks = cfg.trend_tasks;
            opt.seed = cfg.train.seed;
            for (const TrendRow& row : run_evidence_trends(model, opt, cfg.out_dir))
                out << "n_context=" << row.n_context << " alpha=" << csv_num(row.mean_alpha)
                    << " v=" << csv_num(row.mean_v) << " beta=" << csv_num(row.mean_beta)
                    << " mse=" << csv_num(row.mse) << "\n";
            return 0;
        }
    }
    raise(Error::Kind::InvalidParams, "invalid command value");
}

}  // namespace ecnp
