#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "nfl/bench.hpp"
#include "nfl/rng.hpp"

using namespace nfl;

TEST_CASE("percentile rule picks the INT(count*q) ranked batch") {
  std::vector<BatchSample> samples;
  for (std::uint64_t i = 1; i <= 100; ++i) samples.push_back({i * 1000, 10});
  // t = INT(100 * 0.99) = 99 -> ascending rank 99 -> 99000ns / 10 ops.
  CHECK(percentile_per_op_ns(samples, 0.99) == doctest::Approx(9900.0));
  CHECK(percentile_per_op_ns(samples, 1.0) == doctest::Approx(10000.0));
  CHECK(max_per_op_ns(samples) == doctest::Approx(10000.0));

  std::vector<BatchSample> one{{500, 5}};
  CHECK(percentile_per_op_ns(one, 0.99) == doctest::Approx(100.0));
}

TEST_CASE("bench run produces a consistent report") {
  DatasetSpec dspec;
  dspec.kind = DatasetKind::Uniform;
  dspec.n = 20000;
  dspec.seed = 12;
  std::vector<Key> keys = gen_dataset(dspec);

  FlowConfig fcfg;
  FlowParams flow = bypass_flow(fcfg, fit_codec(keys, fcfg.theta, fcfg.dims));

  BenchOptions opt;
  opt.engine = Engine::Nfl;
  opt.mix = Mix::ReadHeavy;
  opt.op_count = 4096;
  opt.batch_size = 256;
  opt.flow_mode = FlowMode::Auto;
  opt.seed = 77;
  opt.verify = true;

  BenchReport r = run_benchmark(keys, flow, opt);
  CHECK(r.verify_mismatches == 0);
  CHECK(r.ops == 4096);
  CHECK(r.batch_samples.size() == 16);
  CHECK(r.p99_ns <= r.p9999_ns);
  CHECK(r.p9999_ns <= r.max_ns);
  CHECK(r.throughput_mops > 0.0);
  CHECK(r.index_bytes > 0);

  // The reported P99 must equal an independent recomputation from the
  // retained samples.
  CHECK(r.p99_ns == percentile_per_op_ns(r.batch_samples, 0.99));
  CHECK(r.p9999_ns == percentile_per_op_ns(r.batch_samples, 0.9999));

  SUBCASE("read-only runs report zero inserts") {
    opt.mix = Mix::ReadOnly;
    BenchReport ro = run_benchmark(keys, flow, opt);
    CHECK(ro.insert_ops == 0);
    CHECK(ro.verify_mismatches == 0);
  }

  SUBCASE("oracle engine agrees with nfl on the same seed") {
    BenchOptions o2 = opt;
    o2.engine = Engine::Oracle;
    BenchReport oracle = run_benchmark(keys, flow, o2);
    CHECK(oracle.verify_mismatches == 0);

    BenchOptions o3 = opt;
    o3.engine = Engine::Afli;
    BenchReport afli = run_benchmark(keys, flow, o3);
    CHECK(afli.verify_mismatches == 0);
  }
}

TEST_CASE("csv schema is stable") {
  BenchReport r;
  r.engine = "nfl";
  r.workload = "read-only";
  r.dataset = "x.bin";
  r.n = 10;
  r.ops = 20;
  r.flow_mode = "auto";
  r.use_flow = true;
  r.throughput_mops = 1.5;
  r.seed = 3;

  std::string row = to_csv_row(r);
  std::string header(kCsvHeader);
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));

  std::string path = (std::filesystem::temp_directory_path() / "nfl_report.csv").string();
  std::vector<BenchReport> rows{r, r};
  write_csv(path, rows);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  CHECK(line == kCsvHeader);
  int data_rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++data_rows;
  CHECK(data_rows == 2);
  std::remove(path.c_str());
}

TEST_CASE("mean report averages numeric fields") {
  BenchReport a, b;
  a.engine = b.engine = "nfl";
  a.throughput_mops = 1.0;
  b.throughput_mops = 3.0;
  a.p99_ns = 100;
  b.p9999_ns = 0;
  a.p9999_ns = 200;
  b.p99_ns = 300;
  std::vector<BenchReport> runs{a, b};
  BenchReport m = mean_report(runs);
  CHECK(m.throughput_mops == doctest::Approx(2.0));
  CHECK(m.p99_ns == doctest::Approx(200.0));
}
