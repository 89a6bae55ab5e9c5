#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "ecnp/checkpoint.hpp"
#include "ecnp/error.hpp"
#include "ecnp/harness.hpp"
#include "ecnp/rng.hpp"
#include "testing.hpp"

using namespace ecnp;
using ecnp::testing::TempDir;
using ecnp::testing::thrown_kind;

namespace {

ModelConfig small_config(HeadKind head, int64_t x_dim = 1) {
    ModelConfig mc;
    mc.x_dim = x_dim;
    mc.repr_dim = mc.hidden_dim = 16;
    mc.encoder_layers = 3;
    mc.decoder_layers = 2;
    mc.evid_head_hidden = 8;
    mc.head = head;
    return mc;
}

TrainConfig small_train(int64_t iterations, uint64_t seed) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.batch_tasks = 2;
    cfg.log_every = 1;
    cfg.seed = seed;
    return cfg;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
    const auto na = a.named_params();
    const auto nb = b.named_params();
    if (na.size() != nb.size()) return false;
    for (size_t i = 0; i < na.size(); ++i) {
        const Array& x = *na[i].second;
        const Array& y = *nb[i].second;
        if (x.shape() != y.shape()) return false;
        if (std::memcmp(x.data(), y.data(), static_cast<size_t>(x.size()) * sizeof(double)) != 0)
            return false;
    }
    return true;
}

bool same_bytes(const Array& a, const Array& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), static_cast<size_t>(a.size()) * sizeof(double)) == 0;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ImageCorpus toy_corpus(int64_t count, int64_t h, int64_t w) {
    auto images = std::make_shared<std::vector<Array>>();
    CounterRng rng(0x1347ULL, 0);
    for (int64_t k = 0; k < count; ++k) {
        Array img = Array::zeros({h, w});
        for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform(0.0, 1.0);
        images->push_back(std::move(img));
    }
    return images;
}

}  // namespace

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.batch_tasks = 0;
    CHECK(thrown_kind([&] { cfg.check(); }) == Error::Kind::InvalidParams);
    cfg = TrainConfig{};
    cfg.log_every = 0;
    CHECK(thrown_kind([&] { cfg.check(); }) == Error::Kind::InvalidParams);
    cfg = TrainConfig{};
    cfg.loss.lambda2 = -1.0;
    CHECK(thrown_kind([&] { cfg.check(); }) == Error::Kind::InvalidParams);
    TrainConfig{}.check();  // defaults are valid
}

TEST_CASE("meta_train drives the loss down on sinusoids") {
    for (HeadKind head : {HeadKind::Gaussian, HeadKind::Evidential}) {
        ModelParams model = ModelParams::create(small_config(head), 77);
        const TaskSource source = regression_source(Generator::Sinusoid, 5, 77);
        const TrainConfig cfg = small_train(150, 77);
        const TrainResult result = meta_train(model, source, cfg, nullptr);

        REQUIRE(result.entries.size() == 150);
        CHECK(result.entries.back().step == 150);
        CHECK(result.skipped_steps == 0);
        double head_mean = 0.0, tail_mean = 0.0;
        for (int i = 0; i < 10; ++i) {
            head_mean += result.entries[static_cast<size_t>(i)].loss.total / 10.0;
            tail_mean += result.entries[result.entries.size() - 1 - static_cast<size_t>(i)]
                             .loss.total / 10.0;
        }
        CHECK(tail_mean < head_mean);
    }
}

TEST_CASE("zero lambdas train pure NLL and log zero regularizers") {
    ModelParams model = ModelParams::create(small_config(HeadKind::Evidential), 3);
    TrainConfig cfg = small_train(10, 3);
    cfg.loss.lambda1 = cfg.loss.lambda2 = 0.0;
    const TrainResult result =
        meta_train(model, regression_source(Generator::Sinusoid, 5, 3), cfg, nullptr);
    for (const TrainLogEntry& e : result.entries) {
        CHECK(e.loss.evid_reg == 0.0);
        CHECK(e.loss.kernel_reg == 0.0);
        CHECK(e.loss.total == e.loss.nll);
    }
}

TEST_CASE("identical seeds reproduce the trajectory bitwise") {
    auto run = [] {
        ModelParams model = ModelParams::create(small_config(HeadKind::Evidential), 11);
        const TrainConfig cfg = small_train(25, 11);
        const TrainResult r =
            meta_train(model, regression_source(Generator::Gp, 5, 11), cfg, nullptr);
        return std::make_pair(std::move(model), r);
    };
    const auto [m1, r1] = run();
    const auto [m2, r2] = run();
    CHECK(same_params(m1, m2));
    REQUIRE(r1.entries.size() == r2.entries.size());
    for (size_t i = 0; i < r1.entries.size(); ++i) {
        CHECK(std::memcmp(&r1.entries[i].loss.total, &r2.entries[i].loss.total,
                          sizeof(double)) == 0);
        CHECK(std::memcmp(&r1.entries[i].loss.nll, &r2.entries[i].loss.nll, sizeof(double)) == 0);
    }
}

TEST_CASE("training continues bitwise through a checkpoint") {
    const TaskSource source = regression_source(Generator::Sinusoid, 5, 21);
    TempDir dir("resume");

    // Reference: 12 uninterrupted iterations.
    TrainState straight;
    straight.model = ModelParams::create(small_config(HeadKind::Evidential), 21);
    straight.seed = 21;
    meta_train(straight, source, small_train(12, 21), nullptr);

    // Same run split 7 + 5 around a save/load cycle.
    TrainState first;
    first.model = ModelParams::create(small_config(HeadKind::Evidential), 21);
    first.seed = 21;
    meta_train(first, source, small_train(7, 21), nullptr);
    const std::string path = dir.file("mid.bin");
    save_checkpoint(path, first);

    TrainState resumed = load_checkpoint(path);
    CHECK(resumed.step == 7);
    meta_train(resumed, source, small_train(12, 21), nullptr);

    CHECK(resumed.step == straight.step);
    CHECK(resumed.task_cursor == straight.task_cursor);
    CHECK(same_params(resumed.model, straight.model));
}

TEST_CASE("non-finite loss aborts with the offending task streams") {
    ModelParams model = ModelParams::create(small_config(HeadKind::Evidential), 5);
    const TaskSource source = [](uint64_t index) {
        TaskGenConfig cfg;
        cfg.seed = 5;
        Task task = gen_sinusoid(cfg, index);
        task.yt[0] = 1e308;  // residual squares to inf
        return task;
    };
    try {
        meta_train(model, source, small_train(3, 5), nullptr);
        FAIL("expected NonFiniteLoss");
    } catch (const Error& e) {
        CHECK(e.kind() == Error::Kind::NonFiniteLoss);
        CHECK(std::string(e.what()).find("task streams") != std::string::npos);
    }
}

TEST_CASE("task sources are index-deterministic and properly salted") {
    const TaskSource clean = regression_source(Generator::Gp, 5, 9);
    const TaskSource zero_sev = outlier_source(Generator::Gp, 5, 9, 0.0);
    for (uint64_t i : {0ULL, 3ULL, 17ULL}) {
        const Task a = clean(i), b = clean(i), c = zero_sev(i);
        CHECK(same_bytes(a.xc, b.xc));
        CHECK(same_bytes(a.yt, b.yt));
        CHECK(same_bytes(a.yt, c.yt));  // severity 0 leaves the stream unchanged
    }
    const Task shifted = outlier_source(Generator::Gp, 5, 9, 10.0)(3);
    CHECK_FALSE(same_bytes(clean(3).yt, shifted.yt));

    // Evaluation tasks use a salted seed: fresh draws, not training tasks.
    const std::vector<Task> evals = regression_eval_tasks(Generator::Gp, 5, 9, 4);
    REQUIRE(evals.size() == 4);
    for (const Task& t : evals) CHECK(t.n_target() == 400);
    CHECK_FALSE(same_bytes(evals[0].xc, clean(0).xc));

    ImageCorpus corpus = toy_corpus(6, 8, 8);
    const TaskSource imgs = image_source(corpus, 10, 9);
    CHECK(same_bytes(imgs(2).yc, imgs(2).yc));
    CHECK_FALSE(same_bytes(imgs(2).xc, imgs(3).xc));
    const std::vector<Task> ievals = image_eval_tasks(corpus, 10, 9, 100);
    CHECK(ievals.size() == 6);  // capped at the corpus size
    for (const Task& t : ievals) CHECK(t.n_context() == 10);

    CHECK(thrown_kind([&] { image_source(nullptr, 5, 1); }) == Error::Kind::InvalidParams);
}

TEST_CASE("model_config_for picks input dims per dataset") {
    CHECK(model_config_for(Generator::Sinusoid, HeadKind::Gaussian).x_dim == 1);
    CHECK(model_config_for(Generator::Gp, HeadKind::Evidential).x_dim == 1);
    CHECK(model_config_for(Generator::Mnist, HeadKind::Evidential).x_dim == 2);
    CHECK(model_config_for(Generator::Mnist, HeadKind::Gaussian).head == HeadKind::Gaussian);
    CHECK(model_config_for(Generator::Gp, HeadKind::Evidential).repr_dim == 128);
}

TEST_CASE("headline mini-run writes artifacts and is rerun-identical") {
    HeadlineOptions opt;
    opt.dataset = Generator::Sinusoid;
    opt.k = 5;
    opt.train = small_train(25, 300);
    opt.train.log_every = 5;
    opt.eval_tasks = 10;

    TempDir dir("headline");
    const std::string out1 = dir.file("run1");
    const HeadlineResult res = run_headline(opt, out1);
    CHECK(std::isfinite(res.cnp.mse));
    CHECK(std::isfinite(res.ecnp.mse));
    CHECK(res.cnp.n_tasks == 10);
    CHECK(res.ecnp.mean_al > 0.0);
    CHECK(res.cnp.mean_al == 0.0);

    namespace fs = std::filesystem;
    CHECK(fs::exists(out1 + "/headline.csv"));
    for (const char* tag : {"cnp_s300", "ecnp_s300"}) {
        CHECK(fs::exists(out1 + "/train_" + std::string(tag) + ".log"));
        CHECK(fs::exists(out1 + "/ckpt_" + std::string(tag) + ".bin"));
    }
    const std::string csv = slurp(out1 + "/headline.csv");
    CHECK(csv.rfind("dataset,k,head,seed,iterations,eval_tasks,mse,ll,", 0) == 0);
    CHECK(csv.find("\nsinusoid,5,cnp,300,") != std::string::npos);
    CHECK(csv.find("\nsinusoid,5,ecnp,mean,") != std::string::npos);

    // The saved checkpoint evaluates exactly like the in-memory model did.
    const TrainState ecnp_state = load_checkpoint(out1 + "/ckpt_ecnp_s300.bin");
    const std::vector<Task> evals = regression_eval_tasks(opt.dataset, opt.k, 300, opt.eval_tasks);
    const MetricsReport re = evaluate(ecnp_state.model, evals, opt.metrics);
    CHECK(std::memcmp(&re.mse, &res.ecnp.mse, sizeof(double)) == 0);

    const std::string out2 = dir.file("run2");
    run_headline(opt, out2);
    CHECK(slurp(out1 + "/headline.csv") == slurp(out2 + "/headline.csv"));
}

TEST_CASE("outlier mini-sweep covers each severity for both heads") {
    OutlierOptions opt;
    opt.dataset = Generator::Sinusoid;
    opt.train = small_train(12, 41);
    opt.train.log_every = 4;
    opt.severities = {0.0, 5.0};
    opt.eval_tasks = 6;

    TempDir dir("outlier");
    const std::string out = dir.file("sweep");
    const std::vector<OutlierCell> cells = run_outlier_sweep(opt, out);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].severity == 0.0);
    CHECK(cells[1].severity == 5.0);
    for (const OutlierCell& c : cells) {
        CHECK(std::isfinite(c.cnp_mse));
        CHECK(std::isfinite(c.ecnp_mse));
        CHECK(c.cnp_mse > 0.0);
        CHECK(c.ecnp_mse > 0.0);
    }
    CHECK(std::filesystem::exists(out + "/outlier.csv"));
    CHECK(std::filesystem::exists(out + "/train_ecnp_o5.log"));
}

TEST_CASE("epal analysis profiles an evidential model and rejects gaussian") {
    const ModelParams model = ModelParams::create(small_config(HeadKind::Evidential), 50);
    EpalOptions opt;
    opt.dataset = Generator::Sinusoid;
    opt.eval_tasks = 8;
    opt.profile_tasks = 4;

    TempDir dir("epal");
    const std::string out = dir.file("a");
    const EpalResult res = run_epal_analysis(model, opt, out);
    REQUIRE(res.al_by_zeta.size() == 4);
    CHECK(res.al_by_zeta[0].first == 0.0);
    CHECK(res.al_by_zeta[3].first == 1.0);
    for (const auto& [zeta, al] : res.al_by_zeta) CHECK(al > 0.0);
    CHECK(res.ep_train_range > 0.0);
    CHECK(res.ep_extrapolation > 0.0);
    namespace fs = std::filesystem;
    CHECK(fs::exists(out + "/epal_noise.csv"));
    CHECK(fs::exists(out + "/epal_profile.csv"));
    CHECK(fs::exists(out + "/epal_regions.csv"));

    // GP datasets get the noise response but no extrapolation profile.
    EpalOptions gp_opt = opt;
    gp_opt.dataset = Generator::Gp;
    const std::string gp_out = dir.file("b");
    const EpalResult gp_res = run_epal_analysis(model, gp_opt, gp_out);
    CHECK(gp_res.ep_train_range == 0.0);
    CHECK(fs::exists(gp_out + "/epal_noise.csv"));
    CHECK_FALSE(fs::exists(gp_out + "/epal_profile.csv"));

    const ModelParams gauss = ModelParams::create(small_config(HeadKind::Gaussian), 50);
    CHECK(thrown_kind([&] { run_epal_analysis(gauss, opt, dir.file("c")); }) ==
          Error::Kind::InvalidParams);
}

TEST_CASE("active selection runs both modes on held-out images") {
    const ModelParams model = ModelParams::create(small_config(HeadKind::Evidential, 2), 60);
    ImageCorpus corpus = toy_corpus(3, 8, 8);
    ActiveOptions opt;
    opt.n_tasks = 2;
    opt.budget = 5;
    opt.initial_context = 4;

    TempDir dir("active");
    const std::string out = dir.file("a");
    const std::vector<ActiveTaskResult> res = run_active_selection(model, corpus, opt, out);
    REQUIRE(res.size() == 2);
    for (const ActiveTaskResult& r : res) {
        CHECK(std::isfinite(r.initial_mse));
        CHECK(r.initial_mse > 0.0);
        CHECK(std::isfinite(r.random_final));
        CHECK(std::isfinite(r.ep_greedy_final));
    }
    const std::string csv = slurp(out + "/active.csv");
    CHECK(csv.rfind("task,mode,additions,mse", 0) == 0);
    CHECK(csv.find("ep-greedy") != std::string::npos);
    CHECK(csv.find("random") != std::string::npos);

    ActiveOptions too_big = opt;
    too_big.budget = 100;  // 4 + 100 > 64 pixels
    CHECK(thrown_kind([&] { run_active_selection(model, corpus, too_big, dir.file("b")); }) ==
          Error::Kind::KTooLarge);

    const ModelParams gauss = ModelParams::create(small_config(HeadKind::Gaussian, 2), 60);
    CHECK(thrown_kind([&] { run_active_selection(gauss, corpus, opt, dir.file("c")); }) ==
          Error::Kind::InvalidParams);
}

TEST_CASE("lambda ablation trains one model per grid point") {
    AblationOptions opt;
    opt.dataset = Generator::Sinusoid;
    opt.train = small_train(8, 70);
    opt.train.log_every = 4;
    opt.grid = {0.0, 0.1};
    opt.eval_tasks = 4;

    TempDir dir("ablate");
    const std::string out = dir.file("l1");
    const std::vector<AblationRow> rows = run_lambda_ablation(opt, out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].lambda == 0.0);
    CHECK(rows[1].lambda == 0.1);
    for (const AblationRow& r : rows) {
        CHECK(std::isfinite(r.mse));
        CHECK(r.mean_evidence > 0.0);
    }
    CHECK(std::filesystem::exists(out + "/ablation.csv"));
    // The zero-weight run trains pure NLL: its log never shows a nonzero
    // evidence term.
    const std::string log0 = slurp(out + "/train_lambda1_0.log");
    CHECK(log0.find("evid_reg=0 ") != std::string::npos);

    AblationOptions l2 = opt;
    l2.sweep_lambda1 = false;
    const std::string out2 = dir.file("l2");
    run_lambda_ablation(l2, out2);
    CHECK(slurp(out2 + "/ablation.csv").find("lambda2") != std::string::npos);
}

TEST_CASE("evidence trends sweep nested context subsets") {
    const ModelParams model = ModelParams::create(small_config(HeadKind::Evidential), 80);
    TrendsOptions opt;
    opt.dataset = Generator::Gp;
    opt.context_sizes = {1, 3, 5};
    opt.n_tasks = 5;

    TempDir dir("trends");
    const std::string out = dir.file("a");
    const std::vector<TrendRow> rows = run_evidence_trends(model, opt, out);
    REQUIRE(rows.size() == 3);
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].n_context == opt.context_sizes[i]);
        CHECK(rows[i].mean_alpha > 1.0);
        CHECK(rows[i].mean_v > 0.0);
        CHECK(rows[i].mean_beta > 0.0);
        CHECK(std::isfinite(rows[i].mse));
    }
    CHECK(std::filesystem::exists(out + "/trends.csv"));

    TrendsOptions bad = opt;
    bad.context_sizes = {0};
    CHECK(thrown_kind([&] { run_evidence_trends(model, bad, dir.file("b")); }) ==
          Error::Kind::InvalidParams);

    const ModelParams gauss = ModelParams::create(small_config(HeadKind::Gaussian), 80);
    CHECK(thrown_kind([&] { run_evidence_trends(gauss, opt, dir.file("c")); }) ==
          Error::Kind::InvalidParams);
}

TEST_CASE("csv numbers are compact and deterministic") {
    CHECK(csv_num(0.0) == "0");
    CHECK(csv_num(1.5) == "1.5");
    CHECK(csv_num(0.1) == "0.1");
    CHECK(csv_num(1e-12) == "1e-12");
    CHECK(csv_num(123456789012.0) == "1.23456789e+11");
}
