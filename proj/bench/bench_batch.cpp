// Serial reference vs OpenMP fan-out on the default model.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "acm/batch.hpp"
#include "acm/config.hpp"

using namespace acm;

namespace {

struct Setup {
    RunConfig cfg;
    ModelParams params;
    Dataset data;
    std::vector<const SyntheticSample*> batch;

    Setup() {
        cfg.task.kind = TaskKind::presence_pair;
        cfg.task.train_size = 128;
        cfg.finalize();
        params = model_init(cfg.model, 1);
        data = gen_split(cfg.task, Split::train);
        for (std::size_t i = 0; i < cfg.train.batch_size; ++i) batch.push_back(&data[i]);
    }
};

const Setup& setup() {
    static const Setup s;
    return s;
}

void BM_batch_gradients_serial(benchmark::State& state) {
    const Setup& s = setup();
    for (auto _ : state)
        benchmark::DoNotOptimize(batch_gradients_serial(s.params, s.cfg.model, s.batch, s.cfg.train.lambda));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch.size()));
}

void BM_batch_gradients_omp(benchmark::State& state) {
    const Setup& s = setup();
    for (auto _ : state)
        benchmark::DoNotOptimize(batch_gradients(s.params, s.cfg.model, s.batch, s.cfg.train.lambda));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.batch.size()));
}

void BM_predict_serial(benchmark::State& state) {
    const Setup& s = setup();
    for (auto _ : state) benchmark::DoNotOptimize(predict_serial(s.params, s.cfg.model, s.data, s.cfg.train.lambda));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.data.size()));
}

void BM_predict_omp(benchmark::State& state) {
    const Setup& s = setup();
    for (auto _ : state) benchmark::DoNotOptimize(predict(s.params, s.cfg.model, s.data, s.cfg.train.lambda));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.data.size()));
}

}  // namespace

BENCHMARK(BM_batch_gradients_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_batch_gradients_omp)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_predict_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_predict_omp)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
