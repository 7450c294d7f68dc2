#include "nfl/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "nfl/rng.hpp"

namespace nfl {

Mix mix_from_string(const std::string& s) {
  if (s == "read-only") return Mix::ReadOnly;
  if (s == "read-heavy") return Mix::ReadHeavy;
  if (s == "write-heavy") return Mix::WriteHeavy;
  if (s == "write-only") return Mix::WriteOnly;
  throw InvalidArgument("unknown workload mix: " + s);
}

const char* to_string(Mix m) {
  switch (m) {
    case Mix::ReadOnly: return "read-only";
    case Mix::ReadHeavy: return "read-heavy";
    case Mix::WriteHeavy: return "write-heavy";
    case Mix::WriteOnly: return "write-only";
  }
  return "unknown";
}

double read_fraction(Mix m) {
  switch (m) {
    case Mix::ReadOnly: return 1.0;
    case Mix::ReadHeavy: return 0.8;
    case Mix::WriteHeavy: return 0.2;
    case Mix::WriteOnly: return 0.0;
  }
  return 1.0;
}

namespace {

// Draw until n unique keys exist. Collisions are simply redrawn, so the kept
// sample stays distribution-faithful.
template <typename Gen>
std::vector<Key> dedup_generate(std::uint64_t n, Gen gen) {
  std::unordered_set<Key> seen;
  seen.reserve(n * 2);
  const std::uint64_t max_attempts = 64 * n + 1024;
  std::uint64_t attempts = 0;
  while (seen.size() < n) {
    if (++attempts > max_attempts)
      throw InsufficientUnique("gen_dataset: could not reach n unique keys");
    Key k = gen();
    if (std::isfinite(k)) seen.insert(k);
  }
  std::vector<Key> keys(seen.begin(), seen.end());
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

std::vector<Key> gen_dataset(const DatasetSpec& spec) {
  if (spec.kind == DatasetKind::File) return read_key_file(spec.path);
  if (spec.n < 2) throw InvalidArgument("gen_dataset: n must be >= 2");
  Rng rng(spec.seed);
  switch (spec.kind) {
    case DatasetKind::Lognormal:
      return dedup_generate(spec.n, [&rng] {
        return std::floor(std::exp(rng.next_normal() * 2.0) * 1e9);
      });
    case DatasetKind::Longlat:
      return dedup_generate(spec.n, [&rng] {
        double lon = rng.next_double(-180.0, 180.0);
        double lat = rng.next_double(-90.0, 90.0);
        return combine_longlat(lon, lat);
      });
    case DatasetKind::Uniform: {
      if (!(spec.uniform_hi > spec.uniform_lo))
        throw InvalidArgument("gen_dataset: empty uniform span");
      return dedup_generate(spec.n, [&rng, &spec] {
        return rng.next_double(spec.uniform_lo, spec.uniform_hi);
      });
    }
    case DatasetKind::File:
      break;
  }
  throw InvalidArgument("gen_dataset: unknown kind");
}

Workload gen_ops(std::span<const Key> keys, const WorkloadSpec& spec) {
  const std::uint64_t n = keys.size();
  if (n < 2) throw InvalidArgument("gen_ops: need at least 2 keys");
  if (!(spec.bulk_fraction > 0.0) || spec.bulk_fraction > 1.0)
    throw InvalidArgument("gen_ops: bulk_fraction must be in (0, 1]");
  if (spec.batch_size < 1) throw InvalidArgument("gen_ops: batch_size must be >= 1");

  Rng root(spec.seed);
  Rng shuffle_rng(root.fork_seed());
  Rng mix_rng(root.fork_seed());
  std::uint64_t zipf_seed = root.fork_seed();

  std::uint64_t bulk_count = static_cast<std::uint64_t>(
      std::floor(spec.bulk_fraction * static_cast<double>(n)));
  bulk_count = std::clamp<std::uint64_t>(bulk_count, 2, n);

  std::vector<std::uint64_t> idx(n);
  for (std::uint64_t i = 0; i < n; ++i) idx[i] = i;
  shuffle_rng.shuffle(idx);

  // The span endpoints must be bulk-loaded so reserved inserts stay inside
  // the known key space.
  auto move_to_front = [&idx](std::uint64_t value, std::uint64_t slot) {
    for (std::uint64_t i = 0; i < idx.size(); ++i) {
      if (idx[i] == value) {
        std::swap(idx[i], idx[slot]);
        return;
      }
    }
  };
  move_to_front(0, 0);
  move_to_front(n - 1, 1);

  Workload w;
  std::vector<std::uint64_t> bulk_idx(idx.begin(), idx.begin() + bulk_count);
  std::sort(bulk_idx.begin(), bulk_idx.end());
  w.bulk_pairs.reserve(bulk_count);
  for (std::uint64_t i : bulk_idx) w.bulk_pairs.push_back({keys[i], payload_of(keys[i])});

  // Choose op kinds first so insert demand is known up front.
  std::uint64_t op_count = spec.op_count;
  if (op_count > spec.batch_size) op_count -= op_count % spec.batch_size;
  const double rf = read_fraction(spec.mix);
  std::vector<bool> is_read(op_count);
  std::uint64_t inserts = 0;
  for (std::uint64_t t = 0; t < op_count; ++t) {
    bool r = rf >= 1.0 ? true : (rf <= 0.0 ? false : mix_rng.next_double() < rf);
    is_read[t] = r;
    if (!r) ++inserts;
  }
  if (inserts > n - bulk_count)
    throw ExhaustedInserts("gen_ops: insert demand exceeds reserved remainder");

  // Reads target the loaded-so-far key list: bulk keys in sorted order, then
  // inserted keys in insertion order.
  std::vector<Key> loaded;
  loaded.reserve(bulk_count + inserts);
  for (const KeyValue& kv : w.bulk_pairs) loaded.push_back(kv.key);
  ZipfSampler zipf(loaded.size(), spec.zipf_s, zipf_seed);

  std::uint64_t next_insert = bulk_count;
  RequestBatch batch;
  batch.ops.reserve(spec.batch_size);
  for (std::uint64_t t = 0; t < op_count; ++t) {
    Request op;
    if (is_read[t]) {
      op.kind = OpKind::Lookup;
      op.key = loaded[zipf.next()];
      ++w.read_ops;
    } else {
      Key k = keys[idx[next_insert++]];
      op.kind = OpKind::Insert;
      op.key = k;
      op.payload = payload_of(k);
      loaded.push_back(k);
      zipf.grow(loaded.size());
      ++w.insert_ops;
    }
    batch.ops.push_back(op);
    if (batch.ops.size() == spec.batch_size) {
      w.batches.push_back(std::move(batch));
      batch = RequestBatch{};
      batch.ops.reserve(spec.batch_size);
    }
  }
  if (!batch.ops.empty()) w.batches.push_back(std::move(batch));
  w.op_count = op_count;
  return w;
}

// --- key file I/O ---

void write_key_file(const std::string& path, std::span<const Key> keys, bool with_header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_key_file: cannot open " + path);
  auto put_u64 = [&os](std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>(v >> (8 * i));
    os.write(b, 8);
  };
  if (with_header) put_u64(keys.size());
  for (Key k : keys) put_u64(std::bit_cast<std::uint64_t>(k));
  if (!os) throw Error("write_key_file: write failed");
}

std::vector<Key> read_key_file(const std::string& path, HeaderMode header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_key_file: cannot open " + path);
  std::uintmax_t fsize = std::filesystem::file_size(path);
  if (fsize % 8 != 0) throw FileFormat("read_key_file: size not a multiple of 8");

  auto get_u64 = [&is, &path]() {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (is.gcount() != 8) throw TruncatedFile("read_key_file: short read in " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  };

  std::uint64_t count = 0;
  bool has_header = false;
  switch (header) {
    case HeaderMode::Require:
      has_header = true;
      break;
    case HeaderMode::Forbid:
      has_header = false;
      break;
    case HeaderMode::Auto: {
      if (fsize >= 8) {
        std::uint64_t first = get_u64();
        is.seekg(0);
        has_header = (fsize == 8 + 8 * first);
      }
      break;
    }
  }
  if (has_header) {
    if (fsize < 8) throw TruncatedFile("read_key_file: missing header");
    count = get_u64();
    if (fsize != 8 + 8 * count)
      throw FileFormat("read_key_file: header count does not match file size");
  } else {
    count = fsize / 8;
  }

  std::vector<Key> keys(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    keys[i] = std::bit_cast<double>(get_u64());
    if (!std::isfinite(keys[i])) throw FileFormat("read_key_file: non-finite key");
  }
  std::sort(keys.begin(), keys.end());
  if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
    throw FileFormat("read_key_file: duplicate keys");
  return keys;
}

// --- zipf ---

ZipfSampler::ZipfSampler(std::uint64_t items, double skew, std::uint64_t seed)
    : n_(items), skew_(skew), state_(seed) {
  if (items == 0) throw InvalidArgument("ZipfSampler: empty item set");
  if (skew != 0.0 && (skew <= 0.0 || skew >= 1.0))
    throw InvalidArgument("ZipfSampler: skew must be 0 or in (0, 1)");
  if (skew_ > 0.0) {
    zeta2_ = 1.0 + std::pow(0.5, skew_);
    zeta_ = 0.0;
    for (std::uint64_t i = 1; i <= n_; ++i) zeta_ += 1.0 / std::pow(double(i), skew_);
    alpha_ = 1.0 / (1.0 - skew_);
    refresh();
  }
}

void ZipfSampler::grow(std::uint64_t items) {
  if (items < n_) throw InvalidArgument("ZipfSampler: item count cannot shrink");
  if (items == n_) return;
  if (skew_ > 0.0) {
    for (std::uint64_t i = n_ + 1; i <= items; ++i) zeta_ += 1.0 / std::pow(double(i), skew_);
  }
  n_ = items;
  if (skew_ > 0.0) refresh();
}

void ZipfSampler::refresh() {
  eta_ = (1.0 - std::pow(2.0 / double(n_), 1.0 - skew_)) / (1.0 - zeta2_ / zeta_);
}

double ZipfSampler::next_u01() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

std::uint64_t ZipfSampler::next() {
  if (skew_ == 0.0) {
    return static_cast<std::uint64_t>(next_u01() * static_cast<double>(n_)) % n_;
  }
  // Gray et al. quickly-computable Zipfian; ranks 0 and 1 handled exactly.
  double u = next_u01();
  double uz = u * zeta_;
  if (uz < 1.0) return 0;
  if (n_ >= 2 && uz < 1.0 + std::pow(0.5, skew_)) return 1;
  std::uint64_t rank = static_cast<std::uint64_t>(
      static_cast<double>(n_) * std::pow(eta_ * u - eta_ + 1.0, alpha_));
  return std::min<std::uint64_t>(rank, n_ - 1);
}

}  // namespace nfl
