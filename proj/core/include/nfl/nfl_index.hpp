#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nfl/afli.hpp"
#include "nfl/common.hpp"
#include "nfl/flow.hpp"

namespace nfl {

enum class FlowMode : std::uint8_t { Auto, On, Off };

enum class OpKind : std::uint8_t { Lookup, Insert, Update, Delete };

struct Request {
  OpKind kind;
  Key key;
  Payload payload = 0;
};

struct OpResult {
  OpStatus status;
  Payload payload = 0;  // valid when status == Found

  bool operator==(const OpResult& o) const {
    return status == o.status && (status != OpStatus::Found || payload == o.payload);
  }
};

// One batch of requests with positionally aligned outcomes.
struct RequestBatch {
  std::vector<Request> ops;
  std::vector<OpResult> results;
};

struct NflConfig {
  IndexConfig index;
  FlowMode mode = FlowMode::Auto;
};

// Two-stage pipeline: keys flow through the trained transform (or not, per
// the switching decision) before reaching the learned index. Keys stored in
// the index are transformed keys iff use_flow().
class NflIndex {
 public:
  NflIndex(FlowParams flow, NflConfig config);

  // Transforms the sorted unique pairs, runs the switching decision, and
  // bulkloads the index on transformed or original keys.
  void bulkload(std::span<const KeyValue> pairs);

  // Extracts all batch keys, transforms them in one flow pass when the flow
  // is on, then dispatches each op in order. Per-op errors land in results;
  // the batch never aborts.
  void execute(RequestBatch& batch);

  std::optional<Payload> lookup(Key key);
  OpStatus insert(Key key, Payload payload);
  OpStatus update(Key key, Payload payload);
  OpStatus erase(Key key);

  bool use_flow() const { return use_flow_; }
  const Index& index() const { return index_; }
  const FlowParams& flow() const { return flow_; }

  // Tail conflict degrees measured at bulkload over original and transformed
  // keys (equal when the flow is off).
  std::uint64_t tail_before() const { return tail_before_; }
  std::uint64_t tail_after() const { return tail_after_; }

  double bulk_transform_seconds() const { return bulk_transform_s_; }
  double bulk_build_seconds() const { return bulk_build_s_; }

 private:
  FlowParams flow_;
  NflConfig config_;
  Index index_;
  bool use_flow_ = false;
  Key span_lo_ = 0.0, span_hi_ = 0.0;
  bool has_span_ = false;
  std::uint64_t tail_before_ = 0, tail_after_ = 0;
  double bulk_transform_s_ = 0.0, bulk_build_s_ = 0.0;
};

}  // namespace nfl
