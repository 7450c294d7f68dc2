#include <benchmark/benchmark.h>

#include <vector>

#include "nfl/flow.hpp"
#include "nfl/workloads.hpp"

namespace {

std::vector<nfl::Key> bench_keys() {
  nfl::DatasetSpec spec;
  spec.kind = nfl::DatasetKind::Lognormal;
  spec.n = 1 << 17;
  spec.seed = 42;
  static std::vector<nfl::Key> keys = nfl::gen_dataset(spec);
  return keys;
}

// Per-key transform cost across batch sizes (the batching amortization the
// inspect subcommand reports).
void BM_TransformKeys(benchmark::State& state) {
  std::vector<nfl::Key> keys = bench_keys();
  nfl::FlowConfig cfg;
  cfg.batch_size = static_cast<std::uint32_t>(state.range(0));
  nfl::FlowParams params = nfl::init_flow(cfg, nfl::fit_codec(keys, cfg.theta, cfg.dims));
  for (auto _ : state) {
    std::vector<double> z = nfl::transform_keys(keys, params);
    benchmark::DoNotOptimize(z.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * keys.size());
}

void BM_TrainFlow(benchmark::State& state) {
  std::vector<nfl::Key> keys = bench_keys();
  nfl::FlowConfig cfg;
  cfg.epochs = 1;
  cfg.sample_fraction = 0.1;
  for (auto _ : state) {
    nfl::FlowParams p = nfl::train_flow(keys, cfg);
    benchmark::DoNotOptimize(p.weights.data());
  }
}

}  // namespace

BENCHMARK(BM_TransformKeys)->Arg(1)->Arg(8)->Arg(32)->Arg(128)->Arg(256)->Arg(1024)->Arg(2048);
BENCHMARK(BM_TrainFlow)->Unit(benchmark::kMillisecond);
