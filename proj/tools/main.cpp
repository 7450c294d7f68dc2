#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nfl/bench.hpp"
#include "nfl/conflict.hpp"
#include "nfl/flow.hpp"
#include "nfl/nfl_index.hpp"
#include "nfl/workloads.hpp"

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("NFL_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 42;
}

nfl::DatasetKind dist_from_string(const std::string& s) {
  if (s == "lognormal") return nfl::DatasetKind::Lognormal;
  if (s == "longlat") return nfl::DatasetKind::Longlat;
  if (s == "uniform") return nfl::DatasetKind::Uniform;
  throw nfl::InvalidArgument("unknown distribution: " + s);
}

nfl::HeaderMode header_from_string(const std::string& s) {
  if (s == "auto") return nfl::HeaderMode::Auto;
  if (s == "require") return nfl::HeaderMode::Require;
  if (s == "forbid") return nfl::HeaderMode::Forbid;
  throw nfl::InvalidArgument("unknown key-header mode: " + s);
}

int cmd_gen(const std::string& dist, std::uint64_t n, std::uint64_t seed, const std::string& out,
            double umin, double umax, bool no_header) {
  nfl::DatasetSpec spec;
  spec.kind = dist_from_string(dist);
  spec.n = n;
  spec.seed = seed;
  spec.uniform_lo = umin;
  spec.uniform_hi = umax;
  std::vector<nfl::Key> keys = nfl::gen_dataset(spec);
  nfl::write_key_file(out, keys, !no_header);
  std::printf("wrote %zu keys to %s\n", keys.size(), out.c_str());
  std::printf("span [%.17g, %.17g]\n", keys.front(), keys.back());
  return 0;
}

int cmd_train_flow(const std::string& keys_path, const std::string& out, nfl::FlowConfig cfg,
                   double gamma, double alpha, bool bypass, nfl::HeaderMode header) {
  std::vector<nfl::Key> keys = nfl::read_key_file(keys_path, header);
  if (keys.size() < 2) throw nfl::InvalidArgument("train-flow: need at least 2 keys");

  nfl::FlowParams params;
  if (bypass) {
    params = nfl::bypass_flow(cfg, nfl::fit_codec(keys, cfg.theta, cfg.dims));
  } else {
    nfl::FlowConfig init_cfg = cfg;
    init_cfg.epochs = 0;
    nfl::FlowParams initial = nfl::train_flow(keys, init_cfg);
    double ll_init = nfl::evaluate_log_likelihood(keys, initial);

    auto t0 = std::chrono::steady_clock::now();
    params = nfl::train_flow(keys, cfg);
    double train_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double ll_final = nfl::evaluate_log_likelihood(keys, params);
    std::printf("log-likelihood initial %.6f final %.6f (train %.2fs)\n", ll_init, ll_final,
                train_s);
  }

  std::vector<double> transformed = nfl::transform_keys(keys, params);
  std::vector<double> sorted_z = transformed;
  std::sort(sorted_z.begin(), sorted_z.end());
  std::uint64_t tail_before = nfl::tail_conflict_of(keys, gamma, alpha);
  std::uint64_t tail_after = nfl::tail_conflict_of(sorted_z, gamma, alpha);
  bool use_flow = nfl::switch_decision(keys, transformed, gamma, alpha);
  std::printf("tail conflict before %llu after %llu -> flow %s\n",
              static_cast<unsigned long long>(tail_before),
              static_cast<unsigned long long>(tail_after), use_flow ? "on" : "off");

  nfl::save_flow(params, out);
  std::printf("wrote flow parameters to %s\n", out.c_str());
  return 0;
}

int cmd_bench(const std::string& keys_path, const std::string& flow_path, nfl::BenchOptions opt,
              nfl::FlowConfig flow_cfg, std::uint32_t repeat, const std::string& report_path,
              nfl::HeaderMode header) {
  std::vector<nfl::Key> keys = nfl::read_key_file(keys_path, header);
  opt.dataset_name = keys_path;

  nfl::FlowParams flow;
  if (!flow_path.empty()) {
    flow = nfl::load_flow(flow_path);
  } else if (opt.engine == nfl::Engine::Nfl && opt.flow_mode != nfl::FlowMode::Off) {
    std::fprintf(stderr, "no --flow-file given; training flow with defaults\n");
    flow = nfl::train_flow(keys, flow_cfg);
  } else {
    flow = nfl::bypass_flow(flow_cfg, nfl::fit_codec(keys, flow_cfg.theta, flow_cfg.dims));
  }

  std::vector<nfl::BenchReport> runs;
  runs.reserve(repeat);
  for (std::uint32_t i = 0; i < repeat; ++i) {
    nfl::BenchOptions run_opt = opt;
    runs.push_back(nfl::run_benchmark(keys, flow, run_opt));
  }
  nfl::BenchReport mean = nfl::mean_report(runs);

  std::printf("%-8s %-12s flow=%-4s use_flow=%d n=%llu ops=%llu (reads %llu, inserts %llu)\n",
              mean.engine.c_str(), mean.workload.c_str(), mean.flow_mode.c_str(),
              mean.use_flow ? 1 : 0, static_cast<unsigned long long>(mean.n),
              static_cast<unsigned long long>(mean.ops),
              static_cast<unsigned long long>(mean.read_ops),
              static_cast<unsigned long long>(mean.insert_ops));
  std::printf("throughput %.3f Mops/s | p99 %.1f ns | p99.99 %.1f ns | max %.1f ns\n",
              mean.throughput_mops, mean.p99_ns, mean.p9999_ns, mean.max_ns);
  std::printf("bulk: transform %.3fs build %.3fs | index %.2f MiB | tail %llu -> %llu\n",
              mean.bulk_transform_s, mean.bulk_build_s,
              static_cast<double>(mean.index_bytes) / (1024.0 * 1024.0),
              static_cast<unsigned long long>(mean.tail_before),
              static_cast<unsigned long long>(mean.tail_after));

  if (!report_path.empty()) {
    nfl::write_csv(report_path, runs);
    std::printf("wrote %zu run rows to %s\n", runs.size(), report_path.c_str());
  }

  std::uint64_t mismatches = 0;
  for (const nfl::BenchReport& r : runs) mismatches += r.verify_mismatches;
  if (opt.verify) {
    std::printf("verify: %llu mismatches\n", static_cast<unsigned long long>(mismatches));
    if (mismatches) return 1;
  }
  return 0;
}

int cmd_inspect(const std::string& keys_path, const std::string& flow_path, double gamma,
                double alpha, bool do_bulkload, std::uint64_t sweep_cap,
                const std::string& csv_path, nfl::HeaderMode header) {
  std::vector<nfl::Key> keys = nfl::read_key_file(keys_path, header);
  if (keys.size() < 2) throw nfl::InvalidArgument("inspect: need at least 2 keys");

  std::vector<std::pair<std::string, double>> csv_rows;
  auto emit = [&csv_rows](const std::string& metric, double value) {
    csv_rows.emplace_back(metric, value);
  };

  nfl::LinearModel fit = nfl::fit_linear_scaled_ranks(keys, alpha);
  std::vector<std::uint64_t> degrees = nfl::sorted_degrees(keys, fit);
  std::uint64_t tail = nfl::tail_from_degrees(degrees, gamma);
  std::printf("original keys: n=%zu occupied=%zu min_deg=%llu max_deg=%llu tail(%.2f)=%llu\n",
              keys.size(), degrees.size(), static_cast<unsigned long long>(degrees.front()),
              static_cast<unsigned long long>(degrees.back()), gamma,
              static_cast<unsigned long long>(tail));
  emit("original_occupied", static_cast<double>(degrees.size()));
  emit("original_max_degree", static_cast<double>(degrees.back()));
  emit("original_tail_degree", static_cast<double>(tail));

  nfl::FlowParams flow;
  bool have_flow = !flow_path.empty();
  if (have_flow) {
    flow = nfl::load_flow(flow_path);
    std::vector<double> transformed = nfl::transform_keys(keys, flow);
    bool use_flow = nfl::switch_decision(keys, transformed, gamma, alpha);
    std::sort(transformed.begin(), transformed.end());
    nfl::LinearModel tfit = nfl::fit_linear_scaled_ranks(transformed, alpha);
    std::vector<std::uint64_t> tdeg = nfl::sorted_degrees(transformed, tfit);
    std::uint64_t ttail = nfl::tail_from_degrees(tdeg, gamma);
    std::printf("transformed:   occupied=%zu max_deg=%llu tail(%.2f)=%llu -> flow %s\n",
                tdeg.size(), static_cast<unsigned long long>(tdeg.back()), gamma,
                static_cast<unsigned long long>(ttail), use_flow ? "on" : "off");
    emit("transformed_occupied", static_cast<double>(tdeg.size()));
    emit("transformed_max_degree", static_cast<double>(tdeg.back()));
    emit("transformed_tail_degree", static_cast<double>(ttail));
    emit("switch_use_flow", use_flow ? 1.0 : 0.0);
  } else {
    nfl::FlowConfig cfg;
    flow = nfl::init_flow(cfg, nfl::fit_codec(keys, cfg.theta, cfg.dims));
    std::printf("no flow file: latency sweep uses seeded initial parameters\n");
  }

  // Per-key transform latency across batch sizes.
  std::vector<nfl::Key> sweep_keys = keys;
  if (sweep_keys.size() > sweep_cap) sweep_keys.resize(sweep_cap);
  std::printf("%-10s %s\n", "batch", "transform ns/key");
  for (std::uint32_t batch : {1u, 8u, 32u, 128u, 256u, 1024u, 2048u}) {
    nfl::FlowParams sweep_flow = flow;
    sweep_flow.config.batch_size = batch;
    double best = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      volatile double sink = nfl::transform_keys(sweep_keys, sweep_flow).back();
      (void)sink;
      double ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0)
                      .count() /
                  static_cast<double>(sweep_keys.size());
      best = (rep == 0) ? ns : std::min(best, ns);
    }
    std::printf("%-10u %.2f\n", batch, best);
    emit("transform_ns_per_key_batch_" + std::to_string(batch), best);
  }

  if (do_bulkload) {
    std::vector<nfl::KeyValue> pairs(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) pairs[i] = {keys[i], nfl::payload_of(keys[i])};
    nfl::NflConfig ncfg;
    ncfg.index.gamma = gamma;
    ncfg.index.alpha = alpha;
    ncfg.mode = have_flow ? nfl::FlowMode::Auto : nfl::FlowMode::Off;
    nfl::NflIndex index(flow, ncfg);
    index.bulkload(pairs);
    nfl::IndexStats st = index.index().stats();
    std::printf("bulkload: use_flow=%d keys=%llu model_nodes=%llu dense_nodes=%llu buckets=%llu\n",
                index.use_flow() ? 1 : 0, static_cast<unsigned long long>(st.key_count),
                static_cast<unsigned long long>(st.model_nodes),
                static_cast<unsigned long long>(st.dense_nodes),
                static_cast<unsigned long long>(st.buckets));
    std::printf("          max_height=%u avg_height=%.3f size=%.2f MiB\n", st.max_height,
                st.avg_height, static_cast<double>(st.size_bytes) / (1024.0 * 1024.0));
    emit("index_key_count", static_cast<double>(st.key_count));
    emit("index_model_nodes", static_cast<double>(st.model_nodes));
    emit("index_dense_nodes", static_cast<double>(st.dense_nodes));
    emit("index_buckets", static_cast<double>(st.buckets));
    emit("index_max_height", static_cast<double>(st.max_height));
    emit("index_size_bytes", static_cast<double>(st.size_bytes));
  }

  if (!csv_path.empty()) {
    std::FILE* f = std::fopen(csv_path.c_str(), "w");
    if (!f) throw nfl::Error("inspect: cannot open " + csv_path);
    std::fprintf(f, "metric,value\n");
    for (const auto& [metric, value] : csv_rows)
      std::fprintf(f, "%s,%.17g\n", metric.c_str(), value);
    std::fclose(f);
    std::printf("wrote %zu metric rows to %s\n", csv_rows.size(), csv_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NFL learned-index benchmark harness"};
  app.require_subcommand(1);
  const std::uint64_t env_seed = default_seed();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a binary key file");
  std::string gen_dist = "lognormal", gen_out;
  std::uint64_t gen_n = 1000000, gen_seed = env_seed;
  double gen_umin = 0.0, gen_umax = 1e9;
  bool gen_no_header = false;
  gen->add_option("--dist", gen_dist, "lognormal|longlat|uniform");
  gen->add_option("--n", gen_n, "number of unique keys");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output key file")->required();
  gen->add_option("--umin", gen_umin, "uniform span low");
  gen->add_option("--umax", gen_umax, "uniform span high");
  gen->add_flag("--no-header", gen_no_header, "write a headerless key file");

  // train-flow
  auto* train = app.add_subcommand("train-flow", "train flow parameters on a key file");
  std::string train_keys, train_out;
  nfl::FlowConfig train_cfg;
  train_cfg.seed = env_seed;
  double train_gamma = 0.99, train_alpha = 2.0;
  bool train_bypass = false;
  train->add_option("--keys", train_keys, "input key file")->required();
  train->add_option("--out", train_out, "output flow file")->required();
  train->add_option("--dims", train_cfg.dims, "feature dimensions");
  train->add_option("--layers", train_cfg.layers, "flow layers");
  train->add_option("--hidden", train_cfg.hidden_mult, "hidden units per dimension");
  train->add_option("--sigma-latent", train_cfg.sigma_latent, "latent std-dev");
  train->add_option("--theta", train_cfg.theta, "codec scale factor");
  train->add_option("--sample-frac", train_cfg.sample_fraction, "training sample fraction");
  train->add_option("--epochs", train_cfg.epochs, "training epochs");
  train->add_option("--batch", train_cfg.batch_size, "minibatch size");
  train->add_option("--lr", train_cfg.learning_rate, "learning rate");
  train->add_option("--seed", train_cfg.seed, "training seed");
  train->add_option("--gamma", train_gamma, "tail percent");
  train->add_option("--alpha", train_alpha, "space amplification for tail metric");
  train->add_flag("--bypass", train_bypass, "write an identity flow");
  std::string train_header = "auto";
  train->add_option("--key-header", train_header, "key file header: auto|require|forbid");

  // bench
  auto* bench = app.add_subcommand("bench", "run a workload benchmark");
  std::string bench_keys, bench_flow_file, bench_workload = "read-only", bench_flow_mode = "auto";
  std::string bench_engine = "nfl", bench_report;
  nfl::BenchOptions bopt;
  nfl::FlowConfig bench_flow_cfg;
  std::uint32_t bench_repeat = 5;
  bopt.seed = env_seed;
  bench_flow_cfg.seed = env_seed;
  bench->add_option("--keys", bench_keys, "input key file")->required();
  bench->add_option("--flow-file", bench_flow_file, "trained flow file");
  bench->add_option("--workload", bench_workload, "read-only|read-heavy|write-heavy|write-only");
  bench->add_option("--bulk-frac", bopt.bulk_fraction, "bulk-loaded fraction");
  bench->add_option("--ops", bopt.op_count, "operation count")->required();
  bench->add_option("--zipf", bopt.zipf_s, "zipfian skew (0 = uniform)");
  bench->add_option("--batch", bopt.batch_size, "request batch size");
  bench->add_option("--flow", bench_flow_mode, "auto|on|off");
  bench->add_option("--engine", bench_engine, "nfl|afli|oracle");
  bench->add_option("--repeat", bench_repeat, "runs to average");
  bench->add_option("--report", bench_report, "CSV output path");
  bench->add_option("--seed", bopt.seed, "workload seed");
  bench->add_option("--alpha", bopt.index.alpha, "space amplification factor");
  bench->add_option("--gamma", bopt.index.gamma, "tail percent");
  bench->add_option("--bucket-cap", bopt.index.bucket_cap, "bucket capacity cap");
  bench->add_flag("--verify", bopt.verify, "differential-check against the reference map");
  std::string bench_header = "auto";
  bench->add_option("--key-header", bench_header, "key file header: auto|require|forbid");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "conflict histograms and latency sweep");
  std::string ins_keys, ins_flow, ins_csv;
  double ins_gamma = 0.99, ins_alpha = 2.0;
  bool ins_bulkload = false;
  std::uint64_t ins_sweep_cap = 262144;
  inspect->add_option("--keys", ins_keys, "input key file")->required();
  inspect->add_option("--flow-file", ins_flow, "trained flow file");
  inspect->add_option("--gamma", ins_gamma, "tail percent");
  inspect->add_option("--alpha", ins_alpha, "space amplification factor");
  inspect->add_option("--sweep-keys", ins_sweep_cap, "max keys used in the latency sweep");
  inspect->add_option("--csv", ins_csv, "CSV output path");
  inspect->add_flag("--bulkload", ins_bulkload, "bulkload an index and print stats");
  std::string ins_header = "auto";
  inspect->add_option("--key-header", ins_header, "key file header: auto|require|forbid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen(gen_dist, gen_n, gen_seed, gen_out, gen_umin, gen_umax, gen_no_header);
    if (train->parsed())
      return cmd_train_flow(train_keys, train_out, train_cfg, train_gamma, train_alpha,
                            train_bypass, header_from_string(train_header));
    if (bench->parsed()) {
      bopt.engine = nfl::engine_from_string(bench_engine);
      bopt.mix = nfl::mix_from_string(bench_workload);
      if (bench_flow_mode == "auto")
        bopt.flow_mode = nfl::FlowMode::Auto;
      else if (bench_flow_mode == "on")
        bopt.flow_mode = nfl::FlowMode::On;
      else if (bench_flow_mode == "off")
        bopt.flow_mode = nfl::FlowMode::Off;
      else
        throw nfl::InvalidArgument("unknown flow mode: " + bench_flow_mode);
      return cmd_bench(bench_keys, bench_flow_file, bopt, bench_flow_cfg, bench_repeat,
                       bench_report, header_from_string(bench_header));
    }
    if (inspect->parsed())
      return cmd_inspect(ins_keys, ins_flow, ins_gamma, ins_alpha, ins_bulkload, ins_sweep_cap,
                         ins_csv, header_from_string(ins_header));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
