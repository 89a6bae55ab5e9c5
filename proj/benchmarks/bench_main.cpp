#include <benchmark/benchmark.h>

#include "ecnp/harness.hpp"
#include "ecnp/model.hpp"
#include "ecnp/objective.hpp"
#include "ecnp/tape.hpp"
#include "ecnp/tasks.hpp"

namespace {

using namespace ecnp;

void BM_TapeMatmul(benchmark::State& state) {
    const int64_t n = state.range(0);
    CounterRng rng(1, 0);
    Array a = Array::zeros({16, n});
    Array b = Array::zeros({n, n});
    for (int64_t i = 0; i < a.size(); ++i) a[i] = rng.gaussian();
    for (int64_t i = 0; i < b.size(); ++i) b[i] = rng.gaussian();
    for (auto _ : state) {
        Tape tape;
        Value va(&tape, tape.leaf(a));
        Value vb(&tape, tape.leaf(b));
        Value out = sum_all(matmul(va, vb));
        benchmark::DoNotOptimize(tape.backward(out.id()));
    }
    state.SetItemsProcessed(state.iterations() * 16 * n * n);
}
BENCHMARK(BM_TapeMatmul)->Arg(64)->Arg(128)->Arg(256);

void BM_SinusoidTask(benchmark::State& state) {
    TaskGenConfig cfg;
    cfg.generator = Generator::Sinusoid;
    cfg.k = 5;
    uint64_t stream = 0;
    for (auto _ : state) benchmark::DoNotOptimize(gen_regression(cfg, stream++));
}
BENCHMARK(BM_SinusoidTask);

void BM_GpTask(benchmark::State& state) {
    TaskGenConfig cfg;
    cfg.generator = Generator::Gp;
    cfg.k = 5;
    cfg.train = false;  // 405-point covariance factorization dominates
    uint64_t stream = 0;
    for (auto _ : state) benchmark::DoNotOptimize(gen_regression(cfg, stream++));
}
BENCHMARK(BM_GpTask);

void BM_ModelForward(benchmark::State& state) {
    const ModelParams params =
        ModelParams::create(model_config_for(Generator::Sinusoid, HeadKind::Evidential), 1);
    TaskGenConfig cfg;
    cfg.generator = Generator::Sinusoid;
    cfg.k = 5;
    cfg.train = false;  // 400 target points
    const Task task = gen_regression(cfg, 0);
    for (auto _ : state) benchmark::DoNotOptimize(forward(params, task));
}
BENCHMARK(BM_ModelForward);

void BM_TrainStep(benchmark::State& state) {
    TrainConfig cfg;
    cfg.iterations = 0;  // advanced per measured step below
    cfg.batch_tasks = 8;
    cfg.log_every = 1u << 30;
    TrainState train_state;
    train_state.model =
        ModelParams::create(model_config_for(Generator::Sinusoid, HeadKind::Evidential), 1);
    const TaskSource source = regression_source(Generator::Sinusoid, 5, 1);
    for (auto _ : state) {
        cfg.iterations = train_state.step + 1;
        meta_train(train_state, source, cfg, nullptr);
    }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
