#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nfl/flow.hpp"
#include "nfl/nfl_index.hpp"
#include "nfl/workloads.hpp"

namespace nfl {

enum class Engine : std::uint8_t { Nfl, Afli, Oracle };

Engine engine_from_string(const std::string& s);
const char* to_string(Engine e);
const char* to_string(FlowMode m);

struct BatchSample {
  std::uint64_t latency_ns;
  std::uint32_t ops;
};

struct BenchReport {
  std::string engine;
  std::string workload;
  std::string dataset;
  std::uint64_t n = 0;
  std::uint64_t ops = 0;
  std::string flow_mode;
  bool use_flow = false;
  double throughput_mops = 0.0;
  double p99_ns = 0.0;
  double p9999_ns = 0.0;
  double max_ns = 0.0;
  double bulk_transform_s = 0.0;
  double bulk_build_s = 0.0;
  std::uint64_t index_bytes = 0;
  std::uint64_t tail_before = 0;
  std::uint64_t tail_after = 0;
  std::uint64_t seed = 0;
  std::uint64_t read_ops = 0;
  std::uint64_t insert_ops = 0;
  std::uint64_t verify_mismatches = 0;
  std::vector<BatchSample> batch_samples;  // retained per-batch latencies
};

// Batch-latency percentile: sort batch latencies ascending, take the
// INT(count * q) ranked batch (1-indexed, clamped to [1, count]) and divide
// its latency by its op count.
double percentile_per_op_ns(std::span<const BatchSample> samples, double q);
double max_per_op_ns(std::span<const BatchSample> samples);

struct BenchOptions {
  Engine engine = Engine::Nfl;
  Mix mix = Mix::ReadOnly;
  double bulk_fraction = 0.5;
  std::uint64_t op_count = 0;
  double zipf_s = 0.99;
  std::uint32_t batch_size = 256;
  FlowMode flow_mode = FlowMode::Auto;
  IndexConfig index;
  std::uint64_t seed = 42;
  bool verify = false;
  std::string dataset_name = "keys";
};

// One measured run: bulkload, untimed lookup-only warm-up over ~1% of the
// ops, then the timed batch loop. With verify set, the same stream is
// replayed against the reference map and mismatches are counted.
BenchReport run_benchmark(std::span<const Key> keys, const FlowParams& flow,
                          const BenchOptions& opt);

// CSV with a fixed schema, one row per report. The header row is always
// written.
extern const char* kCsvHeader;
std::string to_csv_row(const BenchReport& r);
void write_csv(const std::string& path, std::span<const BenchReport> reports);

// Field-wise mean over runs (timings and sizes); identity fields come from
// the first report.
BenchReport mean_report(std::span<const BenchReport> runs);

}  // namespace nfl
