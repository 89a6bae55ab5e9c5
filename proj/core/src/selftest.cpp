#include "ecnp/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "ecnp/error.hpp"
#include "ecnp/harness.hpp"
#include "ecnp/model.hpp"
#include "ecnp/objective.hpp"
#include "ecnp/rng.hpp"
#include "ecnp/special.hpp"
#include "ecnp/tape.hpp"
#include "ecnp/tasks.hpp"

namespace ecnp {
namespace {

/// Composite Simpson's rule with n (even) intervals.
template <typename F>
double simpson(const F& f, double a, double b, int64_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double sum = f(a) + f(b);
    for (int64_t i = 1; i < n; ++i) sum += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Distance from the recorded computation to the nearest non-smooth point:
/// relu/abs inputs near 0, clamp inputs near the threshold, and near-ties in
/// min reductions. Central differences only estimate the derivative when the
/// whole stencil stays on one smooth piece, so gradient checks must test at
/// points with a healthy margin.
double kink_margin(const Tape& tape) {
    double margin = std::numeric_limits<double>::infinity();
    for (NodeId id = 0; id < tape.size(); ++id) {
        const Node& n = tape.node(id);
        if (!n.requires_grad) continue;  // input cannot move under perturbation
        switch (n.op) {
            case Op::Relu:
            case Op::Abs: {
                const Array& x = tape.value(n.a);
                for (int64_t j = 0; j < x.size(); ++j)
                    margin = std::min(margin, std::abs(x[j]));
                break;
            }
            case Op::ClampMax: {
                const Array& x = tape.value(n.a);
                for (int64_t j = 0; j < x.size(); ++j)
                    margin = std::min(margin, std::abs(x[j] - n.scalar));
                break;
            }
            case Op::MinAxis: {
                const Array& x = tape.value(n.a);
                const Shape& shape = x.shape();
                const int64_t axis = n.axis;
                const int64_t extent = shape[static_cast<size_t>(axis)];
                if (extent < 2) break;
                int64_t inner = 1;
                for (size_t d = static_cast<size_t>(axis) + 1; d < shape.size(); ++d)
                    inner *= shape[d];
                const int64_t outer = x.size() / (extent * inner);
                for (int64_t o = 0; o < outer; ++o)
                    for (int64_t in = 0; in < inner; ++in) {
                        double lo = std::numeric_limits<double>::infinity(), second = lo;
                        for (int64_t e = 0; e < extent; ++e) {
                            const double xv = x[(o * extent + e) * inner + in];
                            if (xv < lo) {
                                second = lo;
                                lo = xv;
                            } else {
                                second = std::min(second, xv);
                            }
                        }
                        margin = std::min(margin, second - lo);
                    }
                break;
            }
            default:
                break;
        }
    }
    return margin;
}

}  // namespace

double quad_student_t_density(const NIGParams& p, double y) {
    p.check();
    const double v = p.v, al = p.alpha, be = p.beta, ga = p.gamma;
    const double log_ig_norm = al * std::log(be) - lgamma_pos(al);

    // Inner integral over mu at fixed sigma^2 = e^t: the product of the two
    // Gaussian kernels has precision (1 + v)/sigma^2, so +-12 sd covers it.
    auto inner = [&](double t) {
        const double s2 = std::exp(t);
        const double sd = std::sqrt(s2 / (1.0 + v));
        const double mu_star = (y + v * ga) / (1.0 + v);
        auto f = [&](double mu) {
            const double d1 = y - mu, d2 = mu - ga;
            return std::exp(-(d1 * d1 + v * d2 * d2) / (2.0 * s2));
        };
        const double raw = simpson(f, mu_star - 12.0 * sd, mu_star + 12.0 * sd, 400);
        return raw * std::sqrt(v) / (2.0 * std::numbers::pi * s2);
    };
    auto outer = [&](double t) {
        return std::exp(log_ig_norm - al * t - be * std::exp(-t)) * inner(t);
    };

    // The outer log-integrand behaves like -(alpha + 1/2) t - c e^{-t}; start
    // at its maximizer and expand until the shape falls 80 nats below peak.
    const double c = be + 0.5 * v * (y - ga) * (y - ga) / (1.0 + v);
    const double t_star = std::log(c / (al + 0.5));
    auto shape = [&](double t) { return -(al + 0.5) * t - c * std::exp(-t); };
    const double peak = shape(t_star);
    double lo = t_star, hi = t_star;
    while (shape(lo) > peak - 80.0 && t_star - lo < 200.0) lo -= 0.5;
    while (shape(hi) > peak - 80.0 && hi - t_star < 400.0) hi += 0.5;
    return simpson(outer, lo, hi, 6400);
}

double log_nig_density(const NIGParams& p, double mu, double sigma_sq) {
    p.check();
    if (!(sigma_sq > 0.0)) raise(Error::Kind::DomainError, "sigma_sq must be positive");
    const double d = mu - p.gamma;
    return 0.5 * std::log(p.v / (2.0 * std::numbers::pi * sigma_sq)) +
           p.alpha * std::log(p.beta) - lgamma_pos(p.alpha) -
           (p.alpha + 1.0) * std::log(sigma_sq) -
           (2.0 * p.beta + p.v * d * d) / (2.0 * sigma_sq);
}

double log_joint_nig_likelihood(const NIGParams& prior, std::span<const double> ys, double mu,
                                double sigma_sq) {
    double log_lik = 0.0;
    for (double yv : ys) {
        const double d = yv - mu;
        log_lik += -0.5 * std::log(2.0 * std::numbers::pi * sigma_sq) - d * d / (2.0 * sigma_sq);
    }
    return log_nig_density(prior, mu, sigma_sq) + log_lik;
}

CheckResult check_loss_gradient(int64_t instances, uint64_t seed) {
    constexpr double kTol = 1e-4;
    // Clearance required between the test point and the nearest kink. A +-h
    // parameter step moves any intermediate by well under 1e-4 here.
    constexpr double kMargin = 1e-3;
    CheckResult res{"loss_gradient_fd", false, 0.0, kTol, ""};
    const LossConfig loss_cfg;  // both regularizer weights at 0.1
    for (int64_t i = 0; i < instances; ++i) {
        ModelConfig mc;
        mc.x_dim = 1 + i % 2;
        mc.y_dim = 1 + (i / 2) % 2;
        mc.repr_dim = mc.hidden_dim = 6 + 2 * (i % 3);
        mc.encoder_layers = 3;
        mc.decoder_layers = 2;
        mc.evid_head_hidden = 6;
        mc.head = HeadKind::Evidential;

        // Draw (model, task) pairs until the loss is smooth around the test
        // point; finite differences are meaningless astride a relu kink.
        std::optional<ModelParams> accepted;
        Task task;
        for (int64_t attempt = 0; attempt < 1000; ++attempt) {
            const uint64_t draw = static_cast<uint64_t>(i * 1000 + attempt);
            ModelParams candidate = ModelParams::create(mc, seed + draw);
            CounterRng rng(seed ^ 0xF0D1ULL, draw);
            const int64_t nc = rng.uniform_int(3, 5);
            const int64_t nt = nc + rng.uniform_int(0, 3);
            task.generator = "synthetic";
            task.stream = draw;
            task.xc = Array::zeros({nc, mc.x_dim});
            task.yc = Array::zeros({nc, mc.y_dim});
            task.xt = Array::zeros({nt, mc.x_dim});
            task.yt = Array::zeros({nt, mc.y_dim});
            for (int64_t j = 0; j < task.xc.size(); ++j) task.xc[j] = rng.uniform(-2.0, 2.0);
            for (int64_t j = 0; j < task.yc.size(); ++j) task.yc[j] = rng.gaussian();
            for (int64_t j = 0; j < task.xt.size(); ++j) task.xt[j] = rng.uniform(-2.0, 2.0);
            for (int64_t j = 0; j < task.yt.size(); ++j) task.yt[j] = rng.gaussian();

            Tape probe;
            const ModelNodes nodes = stage_model(candidate, probe, /*trainable=*/true);
            Value r = encode_aggregate(nodes, probe, task.xc, task.yc);
            Value raw = decode_raw(nodes, probe, r, task.xt);
            ecnp_loss(to_nig_nodes(raw, mc), probe, task, loss_cfg);
            if (kink_margin(probe) >= kMargin) {
                accepted = std::move(candidate);
                break;
            }
        }
        if (!accepted)
            raise(Error::Kind::DomainError, "no smooth test point found in 1000 draws");
        ModelParams& model = *accepted;

        auto loss_value = [&]() {
            Tape tape;
            const ModelNodes nodes = stage_model(model, tape, /*trainable=*/false);
            Value r = encode_aggregate(nodes, tape, task.xc, task.yc);
            Value raw = decode_raw(nodes, tape, r, task.xt);
            return ecnp_loss(to_nig_nodes(raw, mc), tape, task, loss_cfg).total.scalar();
        };

        std::vector<double> g_ad;
        {
            Tape tape;
            const ModelNodes nodes = stage_model(model, tape, /*trainable=*/true);
            Value r = encode_aggregate(nodes, tape, task.xc, task.yc);
            Value raw = decode_raw(nodes, tape, r, task.xt);
            const TracedLoss traced = ecnp_loss(to_nig_nodes(raw, mc), tape, task, loss_cfg);
            const std::vector<Array> adj = tape.backward(traced.total.id());
            for (const MlpNodes* mlp : {&nodes.encoder, &nodes.decoder, &nodes.head}) {
                for (const auto& layer : mlp->layers) {
                    for (NodeId id : {layer.weight, layer.bias}) {
                        const Array& a = adj[static_cast<size_t>(id)];
                        if (a.empty()) {
                            g_ad.insert(g_ad.end(),
                                        static_cast<size_t>(tape.value(id).size()), 0.0);
                        } else {
                            for (int64_t j = 0; j < a.size(); ++j) g_ad.push_back(a[j]);
                        }
                    }
                }
            }
        }

        std::vector<double> g_fd;
        for (Array* param : model.all_params()) {
            for (int64_t j = 0; j < param->size(); ++j) {
                double& theta = param->data()[j];
                const double orig = theta;
                const double h = 1e-5 * std::max(1.0, std::abs(orig));
                theta = orig + h;
                const double up = loss_value();
                theta = orig - h;
                const double down = loss_value();
                theta = orig;
                g_fd.push_back((up - down) / (2.0 * h));
            }
        }

        double diff_sq = 0.0, ad_sq = 0.0, fd_sq = 0.0;
        for (size_t j = 0; j < g_ad.size(); ++j) {
            const double d = g_ad[j] - g_fd[j];
            diff_sq += d * d;
            ad_sq += g_ad[j] * g_ad[j];
            fd_sq += g_fd[j] * g_fd[j];
        }
        const double rel =
            std::sqrt(diff_sq) / std::max({std::sqrt(ad_sq), std::sqrt(fd_sq), 1e-12});
        res.worst = std::max(res.worst, rel);
    }
    res.passed = res.worst <= kTol;
    res.detail = std::to_string(instances) +
                 " random models/tasks, every parameter, L2-relative; "
                 "test points resampled to clear kinks by 1e-3";
    return res;
}

CheckResult check_student_t_marginal(int64_t cases, uint64_t seed) {
    constexpr double kTol = 1e-6;
    CheckResult res{"student_t_quadrature", false, 0.0, kTol, ""};
    CounterRng rng(seed ^ 0x57D7ULL, 0);
    for (int64_t i = 0; i < cases; ++i) {
        NIGParams p;
        p.gamma = rng.uniform(-3.0, 3.0);
        p.v = rng.uniform(0.3, 4.0);
        p.alpha = rng.uniform(1.3, 5.0);
        p.beta = rng.uniform(0.4, 3.0);
        const StudentT st = predictive(p);
        const double y = p.gamma + rng.uniform(-4.0, 4.0) * std::sqrt(st.scale_sq);
        const double closed = std::exp(student_t_log_density(st, y));
        const double quad = quad_student_t_density(p, y);
        res.worst = std::max(res.worst, std::abs(closed - quad));
    }
    res.passed = res.worst <= kTol;
    res.detail = std::to_string(cases) + " parameter sets, absolute density error";
    return res;
}

CheckResult check_conjugacy(int64_t cases, uint64_t seed) {
    constexpr double kTol = 1e-4;
    constexpr int64_t kGrid = 200;
    CheckResult res{"conjugacy_grid", false, 0.0, kTol, ""};
    CounterRng rng(seed ^ 0xC0A7ULL, 0);
    std::vector<double> pj(kGrid * kGrid), pc(kGrid * kGrid);
    for (int64_t i = 0; i < cases; ++i) {
        NIGParams prior;
        prior.gamma = rng.uniform(-2.0, 2.0);
        prior.v = rng.uniform(0.5, 3.0);
        prior.alpha = rng.uniform(1.2, 4.0);
        prior.beta = rng.uniform(0.5, 3.0);
        const int64_t n = rng.uniform_int(1, 10);
        std::vector<double> ys(static_cast<size_t>(n));
        for (double& yv : ys) yv = prior.gamma + 1.5 * rng.gaussian();
        const NIGParams post = nig_posterior_update(prior, ys);

        // Grid in (mu, log sigma^2) centered on the closed-form posterior.
        const double mu_sd = std::sqrt(post.beta / (post.v * std::max(post.alpha - 1.0, 0.5)));
        const double mu_lo = post.gamma - 8.0 * mu_sd;
        const double mu_step = 16.0 * mu_sd / (kGrid - 1.0);
        const double t_half = 6.0 / std::sqrt(post.alpha) + 2.5;
        const double t_lo = std::log(post.beta / (post.alpha + 1.0)) - t_half;
        const double t_step = 2.0 * t_half / (kGrid - 1.0);

        double max_j = -std::numeric_limits<double>::infinity();
        double max_c = -std::numeric_limits<double>::infinity();
        for (int64_t a = 0; a < kGrid; ++a) {
            const double mu = mu_lo + mu_step * static_cast<double>(a);
            for (int64_t b = 0; b < kGrid; ++b) {
                const double s2 = std::exp(t_lo + t_step * static_cast<double>(b));
                const size_t k = static_cast<size_t>(a * kGrid + b);
                pj[k] = log_joint_nig_likelihood(prior, ys, mu, s2);
                pc[k] = log_nig_density(post, mu, s2);
                max_j = std::max(max_j, pj[k]);
                max_c = std::max(max_c, pc[k]);
            }
        }
        double sum_j = 0.0, sum_c = 0.0;
        for (size_t k = 0; k < pj.size(); ++k) {
            pj[k] = std::exp(pj[k] - max_j);
            pc[k] = std::exp(pc[k] - max_c);
            sum_j += pj[k];
            sum_c += pc[k];
        }
        double c_peak = 0.0;
        for (size_t k = 0; k < pj.size(); ++k) {
            pj[k] /= sum_j;
            pc[k] /= sum_c;
            c_peak = std::max(c_peak, pc[k]);
        }
        for (size_t k = 0; k < pj.size(); ++k) {
            if (pc[k] < 1e-12 * c_peak) continue;  // tail cells, relative error unstable
            res.worst = std::max(res.worst, std::abs(pj[k] - pc[k]) / pc[k]);
        }
    }
    res.passed = res.worst <= kTol;
    res.detail = std::to_string(cases) + " priors/datasets, 200x200 grid, max relative";
    return res;
}

CheckResult check_gradient_weight(int64_t cases, uint64_t seed) {
    constexpr double kTol = 1e-8;
    CheckResult res{"gradient_weight_closed_form", false, 0.0, kTol, ""};
    CounterRng rng(seed ^ 0x63ADULL, 0);
    for (int64_t i = 0; i < cases; ++i) {
        NIGParams p;
        p.gamma = rng.uniform(-2.0, 2.0);
        p.v = rng.uniform(0.2, 4.0);
        p.alpha = rng.uniform(0.6, 5.0);
        p.beta = rng.uniform(0.3, 3.0);
        const StudentT st = predictive(p);
        const double offset = rng.uniform(-6.0, 6.0) * std::sqrt(st.scale_sq);
        const double y = i % 25 == 0 ? p.gamma : p.gamma + offset;  // exercise the y == gamma path
        const double d = y - p.gamma;
        const double delta_sq = d * d / st.scale_sq;
        const double diff =
            std::abs(gradient_weight_empirical(p, y) - outlier_weight(p.alpha, delta_sq));
        res.worst = std::max(res.worst, diff);
    }
    res.passed = res.worst <= kTol;
    res.detail = std::to_string(cases) + " random cases, absolute weight error";
    return res;
}

CheckResult check_gradient_boundedness() {
    // Fixed setting: v = 1, alpha = 2, beta = 1 evidential head vs sigma = 1
    // Gaussian head; gradient of the per-point NLL w.r.t. the location.
    auto make_task = [](double r) {
        Task task;
        task.generator = "synthetic";
        task.xc = Array::zeros({1, 1});
        task.yc = Array::zeros({1, 1});
        task.xt = Array::zeros({1, 1});
        task.yt = Array::full({1, 1}, r);
        return task;
    };
    LossConfig cfg;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;

    auto evid_grad = [&](double r) {
        const Task task = make_task(r);
        Tape tape;
        const NodeId loc = tape.leaf(Array::zeros({1, 1}));
        NigNodes nig;
        nig.gamma = Value(&tape, loc);
        nig.v = Value(&tape, tape.constant(Array::full({1, 1}, 1.0)));
        nig.alpha = Value(&tape, tape.constant(Array::full({1, 1}, 2.0)));
        nig.beta = Value(&tape, tape.constant(Array::full({1, 1}, 1.0)));
        const TracedLoss traced = ecnp_loss(nig, tape, task, cfg);
        const std::vector<Array> adj = tape.backward(traced.total.id());
        return std::abs(adj[static_cast<size_t>(loc)][0]);
    };
    auto gauss_grad = [&](double r) {
        const Task task = make_task(r);
        Tape tape;
        const NodeId loc = tape.leaf(Array::zeros({1, 1}));
        GaussianNodes g;
        g.mu = Value(&tape, loc);
        g.sigma = Value(&tape, tape.constant(Array::full({1, 1}, 1.0)));
        const TracedLoss traced = gaussian_loss(g, tape, task, cfg);
        const std::vector<Array> adj = tape.backward(traced.total.id());
        return std::abs(adj[static_cast<size_t>(loc)][0]);
    };

    const double e1 = evid_grad(1.0), e10 = evid_grad(10.0), e100 = evid_grad(100.0);
    const double g1 = gauss_grad(1.0), g10 = gauss_grad(10.0), g100 = gauss_grad(100.0);

    CheckResult res{"gradient_boundedness", false, 0.0, 1.2, ""};
    res.worst = e100 / e10;  // must stay below 1.2; here it actually shrinks
    res.passed = e1 > 0.0 && e100 <= 1.2 * e10 && g100 == 10.0 * g10 && g10 == 10.0 * g1;
    res.detail = "evidential |grad| at r=10,100: " + csv_num(e10) + "," + csv_num(e100) +
                 "; gaussian exactly linear: " + csv_num(g10) + "," + csv_num(g100);
    return res;
}

CheckResult check_gaussian_limit() {
    constexpr double kTol = 1e-3;
    const double g10 = gaussian_limit_gap(10.0, 1.0, 0.0);
    const double g100 = gaussian_limit_gap(100.0, 1.0, 0.0);
    const double g1000 = gaussian_limit_gap(1000.0, 1.0, 0.0);
    CheckResult res{"gaussian_limit", false, g1000, kTol, ""};
    res.passed = g10 > g100 && g100 > g1000 && g1000 < kTol;
    res.detail = "sup-gaps at alpha=10,100,1000: " + csv_num(g10) + "," + csv_num(g100) + "," +
                 csv_num(g1000);
    return res;
}

CheckResult check_variance_identity(int64_t cases, uint64_t seed) {
    constexpr double kTol = 1e-12;
    CheckResult res{"variance_identity", false, 0.0, kTol, ""};
    CounterRng rng(seed ^ 0x7A21ULL, 0);
    for (int64_t i = 0; i < cases; ++i) {
        NIGParams p;
        p.gamma = rng.uniform(-3.0, 3.0);
        p.v = rng.uniform(0.1, 5.0);
        p.alpha = rng.uniform(1.1, 6.0);
        p.beta = rng.uniform(0.1, 5.0);
        const double var = student_t_variance(predictive(p));
        const UncertaintyReport u = decompose(p);
        res.worst = std::max(res.worst, std::abs(var - (u.aleatoric + u.epistemic)));
    }
    res.passed = res.worst <= kTol;
    res.detail = std::to_string(cases) + " random parameters, |Var - (AL + EP)|";
    return res;
}

CheckResult check_determinism(const std::string& scratch_dir) {
    HeadlineOptions opt;
    opt.dataset = Generator::Sinusoid;
    opt.k = 5;
    opt.train.iterations = 200;
    opt.train.log_every = 100;
    opt.train.seed = 7;
    opt.runs = 1;
    opt.eval_tasks = 100;
    opt.save_checkpoints = false;
    run_headline(opt, scratch_dir + "/determinism_rep1");
    run_headline(opt, scratch_dir + "/determinism_rep2");
    const std::string a = read_file(scratch_dir + "/determinism_rep1/headline.csv");
    const std::string b = read_file(scratch_dir + "/determinism_rep2/headline.csv");

    CheckResult res{"determinism", false, 0.0, 0.0, ""};
    res.passed = !a.empty() && a == b;
    res.worst = res.passed ? 0.0 : 1.0;
    res.detail = "two seeded 200-iteration headline runs, " + std::to_string(a.size()) +
                 "-byte CSV comparison";
    return res;
}

std::vector<CheckResult> run_selftest(const std::string& scratch_dir, std::ostream& out) {
    std::vector<CheckResult> results;
    auto report = [&](CheckResult r) {
        out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << " worst=" << csv_num(r.worst)
            << " tol=" << csv_num(r.tolerance) << " (" << r.detail << ")\n";
        out.flush();
        results.push_back(std::move(r));
    };
    report(check_loss_gradient());
    report(check_student_t_marginal());
    report(check_conjugacy());
    report(check_gradient_weight());
    report(check_gradient_boundedness());
    report(check_gaussian_limit());
    report(check_variance_identity());
    report(check_determinism(scratch_dir));
    return results;
}

}  // namespace ecnp
