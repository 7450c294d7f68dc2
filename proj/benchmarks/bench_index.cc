#include <benchmark/benchmark.h>

#include <vector>

#include "nfl/afli.hpp"
#include "nfl/ref_map.hpp"
#include "nfl/rng.hpp"
#include "nfl/workloads.hpp"

namespace {

struct LoadedIndex {
  std::vector<nfl::Key> keys;
  std::vector<nfl::KeyValue> pairs;

  explicit LoadedIndex(std::uint64_t n) {
    nfl::DatasetSpec spec;
    spec.kind = nfl::DatasetKind::Uniform;
    spec.n = n;
    spec.seed = 7;
    keys = nfl::gen_dataset(spec);
    pairs.reserve(keys.size());
    for (nfl::Key k : keys) pairs.push_back({k, nfl::payload_of(k)});
  }
};

void BM_AfliLookup(benchmark::State& state) {
  LoadedIndex data(static_cast<std::uint64_t>(state.range(0)));
  nfl::Index index;
  index.bulkload(data.pairs);
  nfl::Rng rng(3);
  for (auto _ : state) {
    nfl::Key k = data.keys[rng.next_below(data.keys.size())];
    benchmark::DoNotOptimize(index.lookup(k));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_RefMapLookup(benchmark::State& state) {
  LoadedIndex data(static_cast<std::uint64_t>(state.range(0)));
  nfl::RefMap ref;
  ref.bulkload(data.pairs);
  nfl::Rng rng(3);
  for (auto _ : state) {
    nfl::Key k = data.keys[rng.next_below(data.keys.size())];
    benchmark::DoNotOptimize(ref.lookup(k));
  }
  state.SetItemsProcessed(state.iterations());
}

void BM_AfliBulkload(benchmark::State& state) {
  LoadedIndex data(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) {
    nfl::Index index;
    index.bulkload(data.pairs);
    benchmark::DoNotOptimize(index.size());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

}  // namespace

BENCHMARK(BM_AfliLookup)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_RefMapLookup)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_AfliBulkload)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
