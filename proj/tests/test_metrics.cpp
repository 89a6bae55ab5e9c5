#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "ecnp/metrics.hpp"
#include "ecnp/model.hpp"
#include "ecnp/tasks.hpp"
#include "testing.hpp"

using namespace ecnp;

namespace {

ModelParams tiny_model(HeadKind head, uint64_t seed) {
    ModelConfig mc;
    mc.repr_dim = mc.hidden_dim = 16;
    mc.encoder_layers = 3;
    mc.decoder_layers = 2;
    mc.evid_head_hidden = 8;
    mc.head = head;
    return ModelParams::create(mc, seed);
}

Task gp_task(uint64_t stream) {
    TaskGenConfig cfg;
    cfg.generator = Generator::Gp;
    cfg.seed = 404;
    cfg.train = false;
    return gen_gp(cfg, stream);
}

}  // namespace

TEST_CASE("mse closed forms") {
    const std::vector<double> p{1.0, 2.0, 3.0}, t{1.0, 2.0, 3.0};
    CHECK(mse(p, t) == 0.0);
    const std::vector<double> q{0.0, 4.0, 1.0};
    CHECK(mse(p, q) == doctest::Approx((1.0 + 4.0 + 4.0) / 3.0).epsilon(1e-15));
    CHECK(mse(p, q) == mse(q, p));
}

TEST_CASE("inclusion: strict interval membership") {
    const std::vector<double> preds{0.0, 0.0, 0.0, 0.0};
    const std::vector<double> uncs{1.0, 1.0, 1.0, 1.0};
    const std::vector<double> truths{0.5, -0.5, 1.0, 3.0};
    // |t| < k: at k=1 only +-0.5 qualify (1.0 is on the boundary, excluded).
    CHECK(inclusion_at_k(preds, uncs, truths, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(inclusion_at_k(preds, uncs, truths, 2.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(inclusion_at_k(preds, uncs, truths, 4.0) == 1.0);
    CHECK(inclusion_at_k(preds, uncs, truths, 0.0) == 0.0);  // strict: nothing inside

    // Monotone in k.
    double prev = 0.0;
    for (double k : {0.5, 1.0, 1.5, 2.0, 3.0, 5.0}) {
        const double f = inclusion_at_k(preds, uncs, truths, k);
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("uncertainty increase: strict pairwise comparison") {
    const std::vector<double> query{2.0, 1.0, 3.0, 0.5};
    const std::vector<double> support{1.0, 1.0, 2.0, 1.0};
    // Strictly greater at indices 0 and 2 only.
    CHECK(uncertainty_increase(query, support) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(uncertainty_increase(support, support) == 0.0);

    // Squaring positive uncertainties preserves every strict comparison, so
    // the fraction is invariant under the std -> variance map.
    std::vector<double> q2(query.size()), s2(support.size());
    for (size_t i = 0; i < query.size(); ++i) {
        q2[i] = query[i] * query[i];
        s2[i] = support[i] * support[i];
    }
    CHECK(uncertainty_increase(q2, s2) == uncertainty_increase(query, support));
}

TEST_CASE("evaluate_task populates head-specific fields") {
    const Task task = gp_task(0);
    MetricsConfig cfg;

    const ModelParams evid = tiny_model(HeadKind::Evidential, 9);
    const MetricsReport er = evaluate_task(evid, task, cfg);
    CHECK(er.n_tasks == 1);
    REQUIRE(er.inclusion.size() == cfg.inclusion_ks.size());
    CHECK(std::isfinite(er.mse));
    CHECK(er.mse > 0.0);
    CHECK(std::isfinite(er.ll));
    CHECK(er.mean_al > 0.0);
    CHECK(er.mean_ep > 0.0);
    CHECK(er.mean_evidence > 0.0);
    for (double f : er.inclusion) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
    CHECK(er.unc_increase >= 0.0);
    CHECK(er.unc_increase <= 1.0);

    const ModelParams gauss = tiny_model(HeadKind::Gaussian, 9);
    const MetricsReport gr = evaluate_task(gauss, task, cfg);
    CHECK(gr.mean_al == 0.0);
    CHECK(gr.mean_ep == 0.0);
    CHECK(gr.mean_evidence == 0.0);
    CHECK(std::isfinite(gr.mse));
}

TEST_CASE("evaluate averages per-task reports with equal weight") {
    const ModelParams model = tiny_model(HeadKind::Evidential, 3);
    MetricsConfig cfg;

    const Task a = gp_task(1);
    const MetricsReport ra = evaluate_task(model, a, cfg);
    const MetricsReport rboth = evaluate(model, {a, a}, cfg);
    CHECK(rboth.n_tasks == 2);
    CHECK(rboth.mse == doctest::Approx(ra.mse).epsilon(1e-14));
    CHECK(rboth.ll == doctest::Approx(ra.ll).epsilon(1e-14));
    CHECK(rboth.unc_increase == doctest::Approx(ra.unc_increase).epsilon(1e-14));
    CHECK(rboth.mean_al == doctest::Approx(ra.mean_al).epsilon(1e-14));
    for (size_t i = 0; i < ra.inclusion.size(); ++i)
        CHECK(rboth.inclusion[i] == doctest::Approx(ra.inclusion[i]).epsilon(1e-14));

    const Task b = gp_task(2);
    const MetricsReport rb = evaluate_task(model, b, cfg);
    const MetricsReport rab = evaluate(model, {a, b}, cfg);
    CHECK(rab.mse == doctest::Approx(0.5 * (ra.mse + rb.mse)).epsilon(1e-12));
    CHECK(rab.mean_ep == doctest::Approx(0.5 * (ra.mean_ep + rb.mean_ep)).epsilon(1e-12));
}

TEST_CASE("evaluation is bitwise deterministic") {
    const ModelParams model = tiny_model(HeadKind::Evidential, 12);
    const std::vector<Task> tasks{gp_task(5), gp_task(6), gp_task(7)};
    MetricsConfig cfg;
    const MetricsReport r1 = evaluate(model, tasks, cfg);
    const MetricsReport r2 = evaluate(model, tasks, cfg);
    CHECK(std::memcmp(&r1.mse, &r2.mse, sizeof(double)) == 0);
    CHECK(std::memcmp(&r1.ll, &r2.ll, sizeof(double)) == 0);
    CHECK(std::memcmp(&r1.unc_increase, &r2.unc_increase, sizeof(double)) == 0);
    REQUIRE(r1.inclusion.size() == r2.inclusion.size());
    for (size_t i = 0; i < r1.inclusion.size(); ++i)
        CHECK(std::memcmp(&r1.inclusion[i], &r2.inclusion[i], sizeof(double)) == 0);
}

TEST_CASE("variance mode changes inclusion but not mse") {
    const ModelParams model = tiny_model(HeadKind::Evidential, 21);
    const Task task = gp_task(9);
    MetricsConfig std_cfg, var_cfg;
    var_cfg.use_variance = true;
    const MetricsReport rs = evaluate_task(model, task, std_cfg);
    const MetricsReport rv = evaluate_task(model, task, var_cfg);
    CHECK(rs.mse == rv.mse);
    CHECK(rs.ll == rv.ll);
}
