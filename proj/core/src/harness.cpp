#include "ecnp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ecnp/error.hpp"

namespace ecnp {
namespace {

// Salts keeping evaluation / corruption streams disjoint from training
// task streams under the same base seed.
constexpr uint64_t kEvalSalt = 0xE7A1'5EED'0001ULL;
constexpr uint64_t kOutlierSalt = 0xE7A1'5EED'0002ULL;
constexpr uint64_t kNoiseSalt = 0xE7A1'5EED'0003ULL;
constexpr uint64_t kActiveSalt = 0xE7A1'5EED'0004ULL;
constexpr uint64_t kTrendsSalt = 0xE7A1'5EED'0005ULL;
constexpr uint64_t kImagePickSalt = 0xE7A1'5EED'0006ULL;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::vector<NodeId> param_node_ids(const ModelNodes& nodes) {
    std::vector<NodeId> ids;
    for (const MlpNodes* mlp : {&nodes.encoder, &nodes.decoder, &nodes.head}) {
        for (const auto& layer : mlp->layers) {
            ids.push_back(layer.weight);
            ids.push_back(layer.bias);
        }
    }
    return ids;
}

class Csv {
public:
    Csv(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) raise(Error::Kind::IoError, "cannot create " + path);
        out_ << header << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise(Error::Kind::IoError, "cannot create directory " + dir + ": " + ec.message());
}

// Forward pass + per-task loss on a shared tape.
Value task_loss(const ModelParams& params, const ModelNodes& nodes, Tape& tape, const Task& task,
                const LossConfig& loss_cfg, LossBreakdown& acc) {
    Value r = encode_aggregate(nodes, tape, task.xc, task.yc);
    Value raw = decode_raw(nodes, tape, r, task.xt);
    TracedLoss traced;
    if (params.config.head == HeadKind::Gaussian) {
        traced = gaussian_loss(to_gaussian_nodes(raw, params.config), tape, task, loss_cfg);
    } else {
        traced = ecnp_loss(to_nig_nodes(raw, params.config), tape, task, loss_cfg);
    }
    const LossBreakdown b = traced.breakdown();
    acc.nll += b.nll;
    acc.evid_reg += b.evid_reg;
    acc.kernel_reg += b.kernel_reg;
    acc.total += b.total;
    return traced.total;
}

MetricsReport mean_reports(const std::vector<MetricsReport>& reports) {
    MetricsReport mean;
    if (reports.empty()) return mean;
    mean.inclusion.assign(reports.front().inclusion.size(), 0.0);
    for (const MetricsReport& r : reports) {
        mean.mse += r.mse;
        mean.ll += r.ll;
        for (size_t i = 0; i < mean.inclusion.size(); ++i) mean.inclusion[i] += r.inclusion[i];
        mean.unc_increase += r.unc_increase;
        mean.mean_al += r.mean_al;
        mean.mean_ep += r.mean_ep;
        mean.mean_evidence += r.mean_evidence;
        mean.n_tasks += r.n_tasks;
    }
    const double n = static_cast<double>(reports.size());
    mean.mse /= n;
    mean.ll /= n;
    for (double& v : mean.inclusion) v /= n;
    mean.unc_increase /= n;
    mean.mean_al /= n;
    mean.mean_ep /= n;
    mean.mean_evidence /= n;
    return mean;
}

void metrics_cells(std::vector<std::string>& cells, const MetricsReport& r) {
    cells.push_back(csv_num(r.mse));
    cells.push_back(csv_num(r.ll));
    for (double inc : r.inclusion) cells.push_back(csv_num(inc));
    cells.push_back(csv_num(r.unc_increase));
    cells.push_back(csv_num(r.mean_al));
    cells.push_back(csv_num(r.mean_ep));
    cells.push_back(csv_num(r.mean_evidence));
}

constexpr const char* kMetricsHeader =
    "mse,ll,inclusion1,inclusion2,inclusion3,unc_increase,mean_al,mean_ep,mean_evidence";

}  // namespace

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void TrainConfig::check() const {
    if (iterations < 0 || batch_tasks < 1 || log_every < 1)
        raise(Error::Kind::InvalidParams, "train config counts must be positive");
    loss.check();
}

TrainResult meta_train(TrainState& state, const TaskSource& source, const TrainConfig& cfg,
                       std::ostream* log) {
    cfg.check();
    ModelParams& model = state.model;
    const std::vector<Array*> params = model.all_params();
    if (state.adam.m.empty()) {
        state.adam.config = cfg.adam;
        state.adam.reset(params);
    }

    TrainResult result;
    const double t_start = now_seconds();

    for (; state.step < cfg.iterations; ++state.step) {
        Tape tape;
        const ModelNodes nodes = stage_model(model, tape, /*trainable=*/true);
        const std::vector<NodeId> param_ids = param_node_ids(nodes);

        const uint64_t first_stream = state.task_cursor;
        LossBreakdown batch_acc;
        Value total;
        for (int64_t b = 0; b < cfg.batch_tasks; ++b) {
            const Task task = source(state.task_cursor++);
            Value one = task_loss(model, nodes, tape, task, cfg.loss, batch_acc);
            total = b == 0 ? one : total + one;
        }
        const double inv_batch = 1.0 / static_cast<double>(cfg.batch_tasks);
        Value loss = total * inv_batch;
        batch_acc.nll *= inv_batch;
        batch_acc.evid_reg *= inv_batch;
        batch_acc.kernel_reg *= inv_batch;
        batch_acc.total *= inv_batch;

        if (!std::isfinite(loss.scalar())) {
            raise(Error::Kind::NonFiniteLoss,
                  "non-finite loss at step " + std::to_string(state.step) + " (seed " +
                      std::to_string(cfg.seed) + ", task streams " +
                      std::to_string(first_stream) + ".." +
                      std::to_string(state.task_cursor - 1) + ")");
        }

        const std::vector<Array> adjoints = tape.backward(loss.id());
        std::vector<Array> grads;
        grads.reserve(params.size());
        for (size_t i = 0; i < param_ids.size(); ++i) {
            const Array& adj = adjoints[static_cast<size_t>(param_ids[i])];
            grads.push_back(adj.empty() ? Array::zeros(params[i]->shape()) : adj);
        }
        if (cfg.grad_clip > 0.0) clip_by_global_norm(grads, cfg.grad_clip);

        const bool applied = adam_step(params, grads, state.adam);
        const bool skipped = !applied;
        if (skipped) ++result.skipped_steps;

        const int64_t done = state.step + 1;
        if (done % cfg.log_every == 0 || done == cfg.iterations || skipped) {
            TrainLogEntry entry;
            entry.step = done;
            entry.loss = batch_acc;
            entry.wall_s = now_seconds() - t_start;
            entry.skipped = skipped;
            if (log) {
                *log << "step=" << entry.step << " total=" << csv_num(entry.loss.total)
                     << " nll=" << csv_num(entry.loss.nll)
                     << " evid_reg=" << csv_num(entry.loss.evid_reg)
                     << " kernel_reg=" << csv_num(entry.loss.kernel_reg)
                     << " skipped=" << (entry.skipped ? 1 : 0) << " wall_s=" << std::fixed
                     << entry.wall_s << "\n";
                log->flush();
                log->unsetf(std::ios_base::floatfield);
            }
            result.entries.push_back(std::move(entry));
        }
    }
    result.wall_s = now_seconds() - t_start;
    return result;
}

TrainResult meta_train(ModelParams& model, const TaskSource& source, const TrainConfig& cfg,
                       std::ostream* log) {
    TrainState state;
    state.model = std::move(model);
    state.seed = cfg.seed;
    TrainResult result = meta_train(state, source, cfg, log);
    model = std::move(state.model);
    return result;
}

TaskSource regression_source(Generator gen, int64_t k, uint64_t seed) {
    TaskGenConfig cfg;
    cfg.generator = gen;
    cfg.k = k;
    cfg.seed = seed;
    cfg.train = true;
    return [cfg](uint64_t index) { return gen_regression(cfg, index); };
}

TaskSource outlier_source(Generator gen, int64_t k, uint64_t seed, double severity) {
    TaskSource base = regression_source(gen, k, seed);
    return [base, seed, severity](uint64_t index) {
        Task task = base(index);
        CounterRng rng(seed ^ kOutlierSalt, index);
        return inject_outlier(task, severity, rng);
    };
}

TaskSource image_source(ImageCorpus corpus, int64_t k, uint64_t seed) {
    if (!corpus || corpus->empty())
        raise(Error::Kind::InvalidParams, "image_source needs a non-empty corpus");
    return [corpus, k, seed](uint64_t index) {
        CounterRng rng(seed ^ kImagePickSalt, index);
        const int64_t pick = rng.uniform_int(0, static_cast<int64_t>(corpus->size()) - 1);
        Task task = gen_image_task((*corpus)[static_cast<size_t>(pick)], k, rng);
        task.stream = index;
        return task;
    };
}

std::vector<Task> regression_eval_tasks(Generator gen, int64_t k, uint64_t seed, int64_t count) {
    TaskGenConfig cfg;
    cfg.generator = gen;
    cfg.k = k;
    cfg.seed = seed ^ kEvalSalt;
    cfg.train = false;
    std::vector<Task> tasks;
    tasks.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) tasks.push_back(gen_regression(cfg, static_cast<uint64_t>(i)));
    return tasks;
}

std::vector<Task> image_eval_tasks(const ImageCorpus& corpus, int64_t k, uint64_t seed,
                                   int64_t count) {
    if (!corpus || corpus->empty())
        raise(Error::Kind::InvalidParams, "image_eval_tasks needs a non-empty corpus");
    const int64_t n = std::min<int64_t>(count, static_cast<int64_t>(corpus->size()));
    std::vector<Task> tasks;
    tasks.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        CounterRng rng(seed ^ kEvalSalt, static_cast<uint64_t>(i));
        Task task = gen_image_task((*corpus)[static_cast<size_t>(i)], k, rng);
        task.stream = static_cast<uint64_t>(i);
        tasks.push_back(std::move(task));
    }
    return tasks;
}

ModelConfig model_config_for(Generator dataset, HeadKind head) {
    ModelConfig cfg;
    cfg.x_dim = dataset == Generator::Mnist ? 2 : 1;
    cfg.y_dim = 1;
    cfg.head = head;
    return cfg;
}

HeadlineResult run_headline(const HeadlineOptions& opt, const std::string& out_dir) {
    ensure_dir(out_dir);
    Csv csv(out_dir + "/headline.csv",
            std::string("dataset,k,head,seed,iterations,eval_tasks,") + kMetricsHeader);

    const std::string dataset = generator_name(opt.dataset);
    std::vector<MetricsReport> cnp_runs, ecnp_runs;

    for (int64_t run = 0; run < opt.runs; ++run) {
        const uint64_t seed = opt.train.seed + static_cast<uint64_t>(run);

        std::vector<Task> eval_tasks;
        TaskSource source;
        if (opt.dataset == Generator::Mnist) {
            source = image_source(opt.train_images, opt.k, seed);
            eval_tasks = image_eval_tasks(opt.test_images, opt.k, seed, opt.eval_tasks);
        } else {
            source = regression_source(opt.dataset, opt.k, seed);
            eval_tasks = regression_eval_tasks(opt.dataset, opt.k, seed, opt.eval_tasks);
        }

        for (HeadKind head : {HeadKind::Gaussian, HeadKind::Evidential}) {
            TrainConfig train = opt.train;
            train.seed = seed;
            TrainState state;
            state.model = ModelParams::create(model_config_for(opt.dataset, head), seed);
            state.seed = seed;

            const std::string tag = head_name(head) + "_s" + std::to_string(seed);
            std::ofstream log(out_dir + "/train_" + tag + ".log");
            meta_train(state, source, train, log ? &log : nullptr);
            if (opt.save_checkpoints) save_checkpoint(out_dir + "/ckpt_" + tag + ".bin", state);

            const MetricsReport report = evaluate(state.model, eval_tasks, opt.metrics);
            (head == HeadKind::Gaussian ? cnp_runs : ecnp_runs).push_back(report);

            std::vector<std::string> cells{dataset, std::to_string(opt.k), head_name(head),
                                           std::to_string(seed), std::to_string(train.iterations),
                                           std::to_string(opt.eval_tasks)};
            metrics_cells(cells, report);
            csv.row(cells);
        }
    }

    HeadlineResult result;
    result.cnp = mean_reports(cnp_runs);
    result.ecnp = mean_reports(ecnp_runs);
    for (HeadKind head : {HeadKind::Gaussian, HeadKind::Evidential}) {
        std::vector<std::string> cells{dataset, std::to_string(opt.k), head_name(head), "mean",
                                       std::to_string(opt.train.iterations),
                                       std::to_string(opt.eval_tasks)};
        metrics_cells(cells, head == HeadKind::Gaussian ? result.cnp : result.ecnp);
        csv.row(cells);
    }
    return result;
}

std::vector<OutlierCell> run_outlier_sweep(const OutlierOptions& opt, const std::string& out_dir) {
    ensure_dir(out_dir);
    Csv csv(out_dir + "/outlier.csv",
            std::string("dataset,k,severity,head,seed,iterations,eval_tasks,") + kMetricsHeader);
    const std::string dataset = generator_name(opt.dataset);
    const uint64_t seed = opt.train.seed;
    const std::vector<Task> eval_tasks =
        regression_eval_tasks(opt.dataset, opt.k, seed, opt.eval_tasks);

    std::vector<OutlierCell> cells_out;
    for (double severity : opt.severities) {
        OutlierCell cell;
        cell.severity = severity;
        const TaskSource source = outlier_source(opt.dataset, opt.k, seed, severity);
        for (HeadKind head : {HeadKind::Gaussian, HeadKind::Evidential}) {
            ModelParams model = ModelParams::create(model_config_for(opt.dataset, head), seed);
            std::ofstream log(out_dir + "/train_" + head_name(head) + "_o" + csv_num(severity) +
                              ".log");
            meta_train(model, source, opt.train, log ? &log : nullptr);
            const MetricsReport report = evaluate(model, eval_tasks, opt.metrics);
            (head == HeadKind::Gaussian ? cell.cnp_mse : cell.ecnp_mse) = report.mse;

            std::vector<std::string> cells{dataset,
                                           std::to_string(opt.k),
                                           csv_num(severity),
                                           head_name(head),
                                           std::to_string(seed),
                                           std::to_string(opt.train.iterations),
                                           std::to_string(opt.eval_tasks)};
            metrics_cells(cells, report);
            csv.row(cells);
        }
        cells_out.push_back(cell);
    }
    return cells_out;
}

EpalResult run_epal_analysis(const ModelParams& model, const EpalOptions& opt,
                             const std::string& out_dir) {
    if (model.config.head != HeadKind::Evidential)
        raise(Error::Kind::InvalidParams, "EP/AL analysis needs an evidential model");
    ensure_dir(out_dir);
    const std::string dataset = generator_name(opt.dataset);
    EpalResult result;

    // (a) Aleatoric response to context noise.
    {
        Csv csv(out_dir + "/epal_noise.csv", "dataset,zeta,eval_tasks,mse,ll,mean_al,mean_ep");
        const std::vector<Task> clean =
            regression_eval_tasks(opt.dataset, opt.k, opt.seed, opt.eval_tasks);
        for (size_t zi = 0; zi < opt.zetas.size(); ++zi) {
            const double zeta = opt.zetas[zi];
            std::vector<Task> noisy;
            noisy.reserve(clean.size());
            for (size_t t = 0; t < clean.size(); ++t) {
                CounterRng rng(opt.seed ^ (kNoiseSalt + zi), static_cast<uint64_t>(t));
                noisy.push_back(noisy_context(clean[t], zeta, rng));
            }
            const MetricsReport report = evaluate(model, noisy, opt.metrics);
            result.al_by_zeta.emplace_back(zeta, report.mean_al);
            result.mse_by_zeta.emplace_back(zeta, report.mse);
            csv.row({dataset, csv_num(zeta), std::to_string(opt.eval_tasks), csv_num(report.mse),
                     csv_num(report.ll), csv_num(report.mean_al), csv_num(report.mean_ep)});
        }
    }

    // (b) Extrapolation profile for the sinusoid family: dense x grid over
    // [-5, 10], averaged over test-task contexts.
    if (opt.dataset == Generator::Sinusoid) {
        constexpr double kLo = -5.0, kHi = 10.0, kStep = 0.1;
        const int64_t n_grid = static_cast<int64_t>(std::lround((kHi - kLo) / kStep)) + 1;
        Array grid = Array::zeros({n_grid, 1});
        for (int64_t i = 0; i < n_grid; ++i) grid[i] = kLo + kStep * static_cast<double>(i);

        std::vector<double> ep_sum(static_cast<size_t>(n_grid), 0.0);
        std::vector<double> al_sum(static_cast<size_t>(n_grid), 0.0);
        const std::vector<Task> tasks =
            regression_eval_tasks(opt.dataset, opt.k, opt.seed ^ kTrendsSalt, opt.profile_tasks);
        for (const Task& task : tasks) {
            const Prediction pred = forward(model, task.xc, task.yc, grid);
            for (int64_t i = 0; i < n_grid; ++i) {
                const UncertaintyReport u = decompose(pred.nig_at(i, 0));
                ep_sum[static_cast<size_t>(i)] += u.epistemic;
                al_sum[static_cast<size_t>(i)] += u.aleatoric;
            }
        }

        Csv profile(out_dir + "/epal_profile.csv", "x,mean_ep,mean_al");
        double in_sum = 0.0, out_sum = 0.0;
        int64_t in_count = 0, out_count = 0;
        const double inv_tasks = 1.0 / static_cast<double>(tasks.size());
        for (int64_t i = 0; i < n_grid; ++i) {
            const double x = grid[i];
            const double mean_ep = ep_sum[static_cast<size_t>(i)] * inv_tasks;
            const double mean_al = al_sum[static_cast<size_t>(i)] * inv_tasks;
            profile.row({csv_num(x), csv_num(mean_ep), csv_num(mean_al)});
            if (x <= 5.0) {
                in_sum += mean_ep;
                ++in_count;
            } else if (x >= 6.0) {
                out_sum += mean_ep;
                ++out_count;
            }
        }
        result.ep_train_range = in_sum / static_cast<double>(in_count);
        result.ep_extrapolation = out_sum / static_cast<double>(out_count);

        Csv regions(out_dir + "/epal_regions.csv",
                    "dataset,profile_tasks,ep_train_range,ep_extrapolation,ratio");
        regions.row({dataset, std::to_string(opt.profile_tasks), csv_num(result.ep_train_range),
                     csv_num(result.ep_extrapolation),
                     csv_num(result.ep_extrapolation / result.ep_train_range)});
    }
    return result;
}

std::vector<ActiveTaskResult> run_active_selection(const ModelParams& model,
                                                   const ImageCorpus& test_images,
                                                   const ActiveOptions& opt,
                                                   const std::string& out_dir) {
    if (model.config.head != HeadKind::Evidential)
        raise(Error::Kind::InvalidParams, "active selection needs an evidential model");
    if (!test_images || static_cast<int64_t>(test_images->size()) < opt.n_tasks)
        raise(Error::Kind::InvalidParams, "active selection needs at least n_tasks images");
    ensure_dir(out_dir);
    Csv csv(out_dir + "/active.csv", "task,mode,additions,mse");

    std::vector<ActiveTaskResult> results;
    for (int64_t t = 0; t < opt.n_tasks; ++t) {
        const Array& image = (*test_images)[static_cast<size_t>(t)];
        const int64_t h = image.dim(0), w = image.dim(1);
        const int64_t n_pixels = h * w;
        if (opt.initial_context + opt.budget > n_pixels)
            raise(Error::Kind::KTooLarge, "budget exceeds available pixels");

        // Shared initial context for both modes.
        CounterRng init_rng(opt.seed ^ kActiveSalt, static_cast<uint64_t>(t));
        std::vector<int64_t> order(static_cast<size_t>(n_pixels));
        for (int64_t i = 0; i < n_pixels; ++i) order[static_cast<size_t>(i)] = i;
        for (int64_t i = 0; i < opt.initial_context; ++i) {
            const int64_t j = init_rng.uniform_int(i, n_pixels - 1);
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }
        const std::vector<int64_t> initial(order.begin(), order.begin() + opt.initial_context);
        std::vector<int64_t> pool;  // fixed evaluation set = complement of initial
        {
            std::vector<bool> used(static_cast<size_t>(n_pixels), false);
            for (int64_t p : initial) used[static_cast<size_t>(p)] = true;
            for (int64_t p = 0; p < n_pixels; ++p)
                if (!used[static_cast<size_t>(p)]) pool.push_back(p);
        }

        const double row_den = h > 1 ? static_cast<double>(h - 1) : 1.0;
        const double col_den = w > 1 ? static_cast<double>(w - 1) : 1.0;
        auto coord = [&](int64_t pixel, double* xy) {
            xy[0] = static_cast<double>(pixel / w) / row_den;
            xy[1] = static_cast<double>(pixel % w) / col_den;
        };
        Array x_eval = Array::zeros({static_cast<int64_t>(pool.size()), 2});
        Array y_eval = Array::zeros({static_cast<int64_t>(pool.size()), 1});
        for (size_t i = 0; i < pool.size(); ++i) {
            coord(pool[i], x_eval.data() + 2 * static_cast<int64_t>(i));
            y_eval[static_cast<int64_t>(i)] = image[pool[i]];
        }

        ActiveTaskResult task_result;
        task_result.task = t;

        for (const bool greedy : {false, true}) {
            std::vector<int64_t> context = initial;
            std::vector<bool> taken(pool.size(), false);
            CounterRng pick_rng(opt.seed ^ (kActiveSalt + 1), static_cast<uint64_t>(t));
            const char* mode = greedy ? "ep-greedy" : "random";

            double final_mse = 0.0;
            for (int64_t added = 0; added <= opt.budget; ++added) {
                Array xc = Array::zeros({static_cast<int64_t>(context.size()), 2});
                Array yc = Array::zeros({static_cast<int64_t>(context.size()), 1});
                for (size_t i = 0; i < context.size(); ++i) {
                    coord(context[i], xc.data() + 2 * static_cast<int64_t>(i));
                    yc[static_cast<int64_t>(i)] = image[context[i]];
                }
                const Prediction pred = forward(model, xc, yc, x_eval);

                double se = 0.0;
                for (int64_t i = 0; i < y_eval.size(); ++i) {
                    const double diff = pred.mean_at(i, 0) - y_eval[i];
                    se += diff * diff;
                }
                final_mse = se / static_cast<double>(y_eval.size());
                csv.row({std::to_string(t), mode, std::to_string(added), csv_num(final_mse)});
                if (added == 0 && !greedy) task_result.initial_mse = final_mse;
                if (added == opt.budget) break;

                int64_t chosen = -1;
                if (greedy) {
                    double best_ep = -1.0;
                    for (size_t i = 0; i < pool.size(); ++i) {
                        if (taken[i]) continue;
                        const double ep = decompose(pred.nig_at(static_cast<int64_t>(i), 0)).epistemic;
                        if (ep > best_ep) {
                            best_ep = ep;
                            chosen = static_cast<int64_t>(i);
                        }
                    }
                } else {
                    int64_t remaining = static_cast<int64_t>(pool.size()) - added;
                    int64_t skip = pick_rng.uniform_int(0, remaining - 1);
                    for (size_t i = 0; i < pool.size(); ++i) {
                        if (taken[i]) continue;
                        if (skip-- == 0) {
                            chosen = static_cast<int64_t>(i);
                            break;
                        }
                    }
                }
                taken[static_cast<size_t>(chosen)] = true;
                context.push_back(pool[static_cast<size_t>(chosen)]);
            }
            (greedy ? task_result.ep_greedy_final : task_result.random_final) = final_mse;
        }
        results.push_back(task_result);
    }
    return results;
}

std::vector<AblationRow> run_lambda_ablation(const AblationOptions& opt,
                                             const std::string& out_dir) {
    ensure_dir(out_dir);
    Csv csv(out_dir + "/ablation.csv",
            std::string("dataset,k,which,lambda,seed,iterations,eval_tasks,") + kMetricsHeader);
    const std::string dataset = generator_name(opt.dataset);
    const std::string which = opt.sweep_lambda1 ? "lambda1" : "lambda2";
    const uint64_t seed = opt.train.seed;
    const TaskSource source = regression_source(opt.dataset, opt.k, seed);
    const std::vector<Task> eval_tasks =
        regression_eval_tasks(opt.dataset, opt.k, seed, opt.eval_tasks);

    std::vector<AblationRow> rows;
    for (double lambda : opt.grid) {
        TrainConfig train = opt.train;
        (opt.sweep_lambda1 ? train.loss.lambda1 : train.loss.lambda2) = lambda;
        ModelParams model =
            ModelParams::create(model_config_for(opt.dataset, HeadKind::Evidential), seed);
        std::ofstream log(out_dir + "/train_" + which + "_" + csv_num(lambda) + ".log");
        meta_train(model, source, train, log ? &log : nullptr);
        const MetricsReport report = evaluate(model, eval_tasks, opt.metrics);

        AblationRow row{lambda,        report.mse,     report.ll,
                        report.mean_al, report.mean_ep, report.mean_evidence};
        rows.push_back(row);
        std::vector<std::string> cells{dataset,
                                       std::to_string(opt.k),
                                       which,
                                       csv_num(lambda),
                                       std::to_string(seed),
                                       std::to_string(opt.train.iterations),
                                       std::to_string(opt.eval_tasks)};
        metrics_cells(cells, report);
        csv.row(cells);
    }
    return rows;
}

std::vector<TrendRow> run_evidence_trends(const ModelParams& model, const TrendsOptions& opt,
                                          const std::string& out_dir) {
    if (model.config.head != HeadKind::Evidential)
        raise(Error::Kind::InvalidParams, "evidence trends need an evidential model");
    if (opt.context_sizes.empty())
        raise(Error::Kind::InvalidParams, "evidence trends need at least one context size");
    ensure_dir(out_dir);
    Csv csv(out_dir + "/trends.csv",
            "dataset,n_context,n_tasks,mean_alpha,mean_v,mean_beta,mse,mean_evidence");
    const std::string dataset = generator_name(opt.dataset);
    const int64_t k_max = *std::max_element(opt.context_sizes.begin(), opt.context_sizes.end());
    const std::vector<Task> tasks =
        regression_eval_tasks(opt.dataset, k_max, opt.seed ^ kTrendsSalt, opt.n_tasks);

    std::vector<TrendRow> rows;
    for (int64_t n_context : opt.context_sizes) {
        if (n_context < 1 || n_context > k_max)
            raise(Error::Kind::InvalidParams, "context sizes must lie in [1, max]");
        TrendRow row;
        row.n_context = n_context;
        for (const Task& task : tasks) {
            // Nested subsets: the first n_context support points.
            Array xc = Array::zeros({n_context, task.x_dim()});
            Array yc = Array::zeros({n_context, task.y_dim()});
            for (int64_t i = 0; i < n_context * task.x_dim(); ++i) xc[i] = task.xc[i];
            for (int64_t i = 0; i < n_context * task.y_dim(); ++i) yc[i] = task.yc[i];
            const Prediction pred = forward(model, xc, yc, task.xt);

            double se = 0.0, a_sum = 0.0, v_sum = 0.0, b_sum = 0.0, e_sum = 0.0;
            const int64_t n_points = task.n_target() * task.y_dim();
            for (int64_t i = 0; i < task.n_target(); ++i) {
                for (int64_t c = 0; c < task.y_dim(); ++c) {
                    const NIGParams p = pred.nig_at(i, c);
                    const double diff = p.gamma - task.yt[i * task.y_dim() + c];
                    se += diff * diff;
                    a_sum += p.alpha;
                    v_sum += p.v;
                    b_sum += p.beta;
                    e_sum += p.v + p.alpha + 1.0 / p.beta;
                }
            }
            row.mse += se / static_cast<double>(n_points);
            row.mean_alpha += a_sum / static_cast<double>(n_points);
            row.mean_v += v_sum / static_cast<double>(n_points);
            row.mean_beta += b_sum / static_cast<double>(n_points);
            row.mean_evidence += e_sum / static_cast<double>(n_points);
        }
        const double inv = 1.0 / static_cast<double>(tasks.size());
        row.mse *= inv;
        row.mean_alpha *= inv;
        row.mean_v *= inv;
        row.mean_beta *= inv;
        row.mean_evidence *= inv;
        rows.push_back(row);
        csv.row({dataset, std::to_string(n_context), std::to_string(opt.n_tasks),
                 csv_num(row.mean_alpha), csv_num(row.mean_v), csv_num(row.mean_beta),
                 csv_num(row.mse), csv_num(row.mean_evidence)});
    }
    return rows;
}

}  // namespace ecnp
