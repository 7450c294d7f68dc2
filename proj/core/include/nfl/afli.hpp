#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfl/common.hpp"
#include "nfl/conflict.hpp"

namespace nfl {

enum class BucketMode : std::uint8_t { Linear, Ordered };

struct IndexConfig {
  double alpha = 2.0;       // space amplification factor
  double gamma = 0.99;      // tail percent for the conflict quantile
  std::uint32_t bucket_cap = 6;
  std::uint32_t max_depth = 64;
  BucketMode bucket_mode = BucketMode::Linear;
};

enum class OpStatus : std::uint8_t {
  Found,
  NotFound,
  Inserted,
  AlreadyExists,
  Updated,
  Deleted,
  OutOfKeySpace,
};

const char* to_string(OpStatus s);

struct IndexStats {
  std::uint64_t key_count = 0;
  std::uint64_t model_nodes = 0;
  std::uint64_t dense_nodes = 0;
  std::uint64_t buckets = 0;
  std::uint32_t max_height = 0;
  double avg_height = 0.0;
  std::uint64_t size_bytes = 0;
};

namespace detail {
struct Node;
}

// Tree of model nodes (precise placement), buckets (small conflict buffers)
// and dense nodes (ordered gapped arrays for indistinguishable keys). Single
// writer, no internal synchronization.
class Index {
 public:
  explicit Index(IndexConfig cfg = {});
  ~Index();
  Index(Index&&) noexcept;
  Index& operator=(Index&&) noexcept;
  Index(const Index&) = delete;
  Index& operator=(const Index&) = delete;

  // Replaces the whole index with the given sorted, strictly-increasing
  // pairs. Computes the tail conflict degree from a whole-set fit and freezes
  // it for the index lifetime. Throws DuplicateKey on non-unique keys.
  void bulkload(std::span<const KeyValue> pairs);

  std::optional<Payload> lookup(Key key) const;

  // Keys outside the bulk-loaded span are rejected with OutOfKeySpace.
  OpStatus insert(Key key, Payload payload);
  // Insert without the span check, for callers that enforce their own
  // key-space contract (the flow pipeline checks original keys before
  // transforming them).
  OpStatus insert_unchecked(Key key, Payload payload);
  OpStatus update(Key key, Payload payload);
  OpStatus erase(Key key);

  IndexStats stats() const;

  // Frozen tail conflict degree D^gamma from the last bulkload.
  std::uint64_t tail_conflict() const { return dgamma_; }
  std::uint64_t size() const { return key_count_; }
  const IndexConfig& config() const { return cfg_; }

  // Full structural check: precise placement, bucket capacities, dense-node
  // ordering and gap fills, duplicated-link contiguity, depth bound. Returns
  // a description of the first violation, or nullopt when clean.
  std::optional<std::string> audit() const;

 private:
  IndexConfig cfg_;
  detail::Node* root_ = nullptr;
  std::uint64_t dgamma_ = 1;
  std::uint32_t bucket_capacity_ = 1;
  std::uint64_t key_count_ = 0;
  Key span_lo_ = 0.0;
  Key span_hi_ = 0.0;
  bool has_span_ = false;

  void reset();
};

}  // namespace nfl
