#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nfl/common.hpp"
#include "nfl/nfl_index.hpp"

namespace nfl {

enum class DatasetKind : std::uint8_t { Lognormal, Longlat, Uniform, File };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Lognormal;
  std::uint64_t n = 0;
  std::uint64_t seed = 42;
  std::string path;             // kind == File
  double uniform_lo = 0.0;      // kind == Uniform
  double uniform_hi = 1e9;
};

enum class Mix : std::uint8_t { ReadOnly, ReadHeavy, WriteHeavy, WriteOnly };

Mix mix_from_string(const std::string& s);
const char* to_string(Mix m);
double read_fraction(Mix m);

struct WorkloadSpec {
  Mix mix = Mix::ReadOnly;
  double bulk_fraction = 0.5;
  std::uint64_t op_count = 0;
  double zipf_s = 0.99;
  std::uint64_t seed = 42;
  std::uint32_t batch_size = 256;
};

// Emits sorted, unique, finite keys. Deterministic per (kind, n, seed).
std::vector<Key> gen_dataset(const DatasetSpec& spec);

// Compound key rule for the longlat dataset.
inline double combine_longlat(double lon, double lat) {
  return 180.0 * std::floor(lon) + lat;
}

// Deterministic payload for a key; bulkload and insert agree on it.
inline Payload payload_of(Key key) {
  std::uint64_t z = std::bit_cast<std::uint64_t>(key) + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return z ^ (z >> 31);
}

struct Workload {
  std::vector<KeyValue> bulk_pairs;     // sorted; the bulkload set
  std::vector<RequestBatch> batches;    // full fixed-size request batches
  std::uint64_t op_count = 0;
  std::uint64_t read_ops = 0;
  std::uint64_t insert_ops = 0;
};

// Splits the dataset into a seeded bulkload subset (always containing the
// global min and max, so every reserved insert is a known-key-space insert)
// and draws the request stream: reads Zipf-sampled over the loaded-so-far
// keys, inserts without replacement from the remainder. The op count is
// rounded down to whole batches when it exceeds one batch.
Workload gen_ops(std::span<const Key> keys, const WorkloadSpec& spec);

// Binary key file: optional 8-byte little-endian count header followed by
// 64-bit little-endian floats. Header presence is auto-detected from length
// arithmetic unless forced.
enum class HeaderMode : std::uint8_t { Auto, Require, Forbid };

void write_key_file(const std::string& path, std::span<const Key> keys, bool with_header = true);
std::vector<Key> read_key_file(const std::string& path, HeaderMode header = HeaderMode::Auto);

// Seeded Zipfian rank sampler over a growing item count; skew 0 degenerates
// to uniform.
class ZipfSampler {
 public:
  ZipfSampler(std::uint64_t items, double skew, std::uint64_t seed);

  std::uint64_t next();           // rank in [0, items)
  void grow(std::uint64_t items); // extend the item count

  std::uint64_t items() const { return n_; }

 private:
  std::uint64_t n_;
  double skew_;
  double zeta_ = 0.0;
  double eta_ = 0.0;
  double zeta2_ = 0.0;
  double alpha_ = 0.0;
  std::uint64_t state_;

  double next_u01();
  void refresh();
};

}  // namespace nfl
