#include "nfl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nfl/conflict.hpp"
#include "nfl/ref_map.hpp"

namespace nfl {

Engine engine_from_string(const std::string& s) {
  if (s == "nfl") return Engine::Nfl;
  if (s == "afli") return Engine::Afli;
  if (s == "oracle") return Engine::Oracle;
  throw InvalidArgument("unknown engine: " + s);
}

const char* to_string(Engine e) {
  switch (e) {
    case Engine::Nfl: return "nfl";
    case Engine::Afli: return "afli";
    case Engine::Oracle: return "oracle";
  }
  return "unknown";
}

const char* to_string(FlowMode m) {
  switch (m) {
    case FlowMode::Auto: return "auto";
    case FlowMode::On: return "on";
    case FlowMode::Off: return "off";
  }
  return "unknown";
}

double percentile_per_op_ns(std::span<const BatchSample> samples, double q) {
  if (samples.empty()) return 0.0;
  std::vector<BatchSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const BatchSample& a, const BatchSample& b) { return a.latency_ns < b.latency_ns; });
  std::size_t t = static_cast<std::size_t>(
      std::floor(static_cast<double>(sorted.size()) * q));
  t = std::clamp<std::size_t>(t, 1, sorted.size());
  const BatchSample& s = sorted[t - 1];
  return static_cast<double>(s.latency_ns) / static_cast<double>(s.ops);
}

double max_per_op_ns(std::span<const BatchSample> samples) {
  double mx = 0.0;
  for (const BatchSample& s : samples)
    mx = std::max(mx, static_cast<double>(s.latency_ns) / static_cast<double>(s.ops));
  return mx;
}

namespace {

void execute_on_ref(RefMap& ref, RequestBatch& batch) {
  batch.results.assign(batch.ops.size(), OpResult{OpStatus::NotFound, 0});
  for (std::size_t i = 0; i < batch.ops.size(); ++i) {
    const Request& op = batch.ops[i];
    OpResult& res = batch.results[i];
    switch (op.kind) {
      case OpKind::Lookup: {
        auto p = ref.lookup(op.key);
        if (p) {
          res.status = OpStatus::Found;
          res.payload = *p;
        }
        break;
      }
      case OpKind::Insert:
        res.status = ref.insert(op.key, op.payload);
        break;
      case OpKind::Update:
        res.status = ref.update(op.key, op.payload);
        break;
      case OpKind::Delete:
        res.status = ref.erase(op.key);
        break;
    }
  }
}

void execute_on_afli(Index& index, RequestBatch& batch) {
  batch.results.assign(batch.ops.size(), OpResult{OpStatus::NotFound, 0});
  for (std::size_t i = 0; i < batch.ops.size(); ++i) {
    const Request& op = batch.ops[i];
    OpResult& res = batch.results[i];
    switch (op.kind) {
      case OpKind::Lookup: {
        auto p = index.lookup(op.key);
        if (p) {
          res.status = OpStatus::Found;
          res.payload = *p;
        }
        break;
      }
      case OpKind::Insert:
        res.status = index.insert(op.key, op.payload);
        break;
      case OpKind::Update:
        res.status = index.update(op.key, op.payload);
        break;
      case OpKind::Delete:
        res.status = index.erase(op.key);
        break;
    }
  }
}

// Rough red-black-tree footprint for the oracle engine so the size column is
// comparable in spirit; documented as an estimate.
std::uint64_t ref_map_bytes(std::size_t entries) {
  return static_cast<std::uint64_t>(entries) * (sizeof(KeyValue) + 40);
}

}  // namespace

BenchReport run_benchmark(std::span<const Key> keys, const FlowParams& flow,
                          const BenchOptions& opt) {
  WorkloadSpec wspec;
  wspec.mix = opt.mix;
  wspec.bulk_fraction = opt.bulk_fraction;
  wspec.op_count = opt.op_count;
  wspec.zipf_s = opt.zipf_s;
  wspec.seed = opt.seed;
  wspec.batch_size = opt.batch_size;
  Workload w = gen_ops(keys, wspec);

  BenchReport r;
  r.engine = to_string(opt.engine);
  r.workload = to_string(opt.mix);
  r.dataset = opt.dataset_name;
  r.n = keys.size();
  r.ops = w.op_count;
  r.flow_mode = to_string(opt.flow_mode);
  r.seed = opt.seed;
  r.read_ops = w.read_ops;
  r.insert_ops = w.insert_ops;

  // Engine state.
  NflConfig ncfg{opt.index, opt.flow_mode};
  NflIndex nfl_index(flow, ncfg);
  Index afli_index(opt.index);
  RefMap oracle_map;

  std::vector<Key> bulk_keys(w.bulk_pairs.size());
  for (std::size_t i = 0; i < w.bulk_pairs.size(); ++i) bulk_keys[i] = w.bulk_pairs[i].key;

  auto t0 = std::chrono::steady_clock::now();
  switch (opt.engine) {
    case Engine::Nfl:
      nfl_index.bulkload(w.bulk_pairs);
      r.use_flow = nfl_index.use_flow();
      r.tail_before = nfl_index.tail_before();
      r.tail_after = nfl_index.tail_after();
      r.bulk_transform_s = nfl_index.bulk_transform_seconds();
      r.bulk_build_s = nfl_index.bulk_build_seconds();
      break;
    case Engine::Afli:
      afli_index.bulkload(w.bulk_pairs);
      r.bulk_build_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (bulk_keys.size() >= 2)
        r.tail_before = r.tail_after = tail_conflict_of(bulk_keys, opt.index.gamma, opt.index.alpha);
      break;
    case Engine::Oracle:
      oracle_map.bulkload(w.bulk_pairs);
      r.bulk_build_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (bulk_keys.size() >= 2)
        r.tail_before = r.tail_after = tail_conflict_of(bulk_keys, opt.index.gamma, opt.index.alpha);
      break;
  }

  auto execute = [&](RequestBatch& batch) {
    switch (opt.engine) {
      case Engine::Nfl:
        nfl_index.execute(batch);
        break;
      case Engine::Afli:
        execute_on_afli(afli_index, batch);
        break;
      case Engine::Oracle:
        execute_on_ref(oracle_map, batch);
        break;
    }
  };

  // Untimed warm-up: lookup-only copies of the first ~1% of batches, so the
  // timed pass sees warmed caches but unchanged state.
  std::size_t warm_batches = (w.batches.size() + 99) / 100;
  for (std::size_t i = 0; i < warm_batches && i < w.batches.size(); ++i) {
    RequestBatch warm;
    warm.ops.reserve(w.batches[i].ops.size());
    for (const Request& op : w.batches[i].ops) warm.ops.push_back({OpKind::Lookup, op.key, 0});
    execute(warm);
  }

  r.batch_samples.reserve(w.batches.size());
  std::uint64_t total_ns = 0;
  for (RequestBatch& batch : w.batches) {
    auto b0 = std::chrono::steady_clock::now();
    execute(batch);
    auto b1 = std::chrono::steady_clock::now();
    std::uint64_t ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(b1 - b0).count());
    r.batch_samples.push_back({ns, static_cast<std::uint32_t>(batch.ops.size())});
    total_ns += ns;
  }

  r.throughput_mops =
      total_ns ? static_cast<double>(r.ops) * 1e3 / static_cast<double>(total_ns) : 0.0;
  r.p99_ns = percentile_per_op_ns(r.batch_samples, 0.99);
  r.p9999_ns = percentile_per_op_ns(r.batch_samples, 0.9999);
  r.max_ns = max_per_op_ns(r.batch_samples);

  // Final footprint after the running phase, gaps included.
  switch (opt.engine) {
    case Engine::Nfl:
      r.index_bytes = nfl_index.index().stats().size_bytes;
      break;
    case Engine::Afli:
      r.index_bytes = afli_index.stats().size_bytes;
      break;
    case Engine::Oracle:
      r.index_bytes = ref_map_bytes(oracle_map.size());
      break;
  }

  if (opt.verify) {
    RefMap ref;
    ref.bulkload(w.bulk_pairs);
    Workload replay = gen_ops(keys, wspec);
    std::size_t bi = 0;
    for (RequestBatch& batch : replay.batches) {
      execute_on_ref(ref, batch);
      const RequestBatch& got = w.batches[bi++];
      for (std::size_t i = 0; i < batch.results.size(); ++i)
        if (!(batch.results[i] == got.results[i])) ++r.verify_mismatches;
    }
  }
  return r;
}

const char* kCsvHeader =
    "engine,workload,dataset,n,ops,flow_mode,use_flow,throughput_mops,p99_ns,p9999_ns,max_ns,"
    "bulk_transform_s,bulk_build_s,index_bytes,tail_before,tail_after,seed";

std::string to_csv_row(const BenchReport& r) {
  std::ostringstream os;
  os.precision(8);
  os << r.engine << ',' << r.workload << ',' << r.dataset << ',' << r.n << ',' << r.ops << ','
     << r.flow_mode << ',' << (r.use_flow ? 1 : 0) << ',' << r.throughput_mops << ',' << r.p99_ns
     << ',' << r.p9999_ns << ',' << r.max_ns << ',' << r.bulk_transform_s << ',' << r.bulk_build_s
     << ',' << r.index_bytes << ',' << r.tail_before << ',' << r.tail_after << ',' << r.seed;
  return os.str();
}

void write_csv(const std::string& path, std::span<const BenchReport> reports) {
  std::ofstream os(path);
  if (!os) throw Error("write_csv: cannot open " + path);
  os << kCsvHeader << '\n';
  for (const BenchReport& r : reports) os << to_csv_row(r) << '\n';
  if (!os) throw Error("write_csv: write failed");
}

BenchReport mean_report(std::span<const BenchReport> runs) {
  if (runs.empty()) throw InvalidArgument("mean_report: no runs");
  BenchReport m = runs.front();
  if (runs.size() == 1) return m;
  double inv = 1.0 / static_cast<double>(runs.size());
  m.throughput_mops = m.p99_ns = m.p9999_ns = m.max_ns = 0.0;
  m.bulk_transform_s = m.bulk_build_s = 0.0;
  double bytes = 0.0, mism = 0.0;
  for (const BenchReport& r : runs) {
    m.throughput_mops += r.throughput_mops * inv;
    m.p99_ns += r.p99_ns * inv;
    m.p9999_ns += r.p9999_ns * inv;
    m.max_ns += r.max_ns * inv;
    m.bulk_transform_s += r.bulk_transform_s * inv;
    m.bulk_build_s += r.bulk_build_s * inv;
    bytes += static_cast<double>(r.index_bytes) * inv;
    mism += static_cast<double>(r.verify_mismatches) * inv;
  }
  m.index_bytes = static_cast<std::uint64_t>(bytes);
  m.verify_mismatches = static_cast<std::uint64_t>(std::llround(mism * runs.size()));
  m.batch_samples.clear();
  return m;
}

}  // namespace nfl
