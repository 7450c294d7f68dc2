#include "nfl/nfl_index.hpp"

#include <algorithm>
#include <chrono>

#include "nfl/conflict.hpp"

namespace nfl {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

NflIndex::NflIndex(FlowParams flow, NflConfig config)
    : flow_(std::move(flow)), config_(config), index_(config.index) {}

void NflIndex::bulkload(std::span<const KeyValue> pairs) {
  has_span_ = false;
  use_flow_ = false;
  tail_before_ = tail_after_ = 0;
  bulk_transform_s_ = bulk_build_s_ = 0.0;

  if (pairs.empty()) {
    index_.bulkload(pairs);
    return;
  }

  std::vector<Key> keys(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) keys[i] = pairs[i].key;

  std::vector<Key> transformed;
  if (config_.mode != FlowMode::Off) {
    auto t0 = std::chrono::steady_clock::now();
    transformed = transform_keys(keys, flow_);
    bulk_transform_s_ = seconds_since(t0);
  }

  if (keys.size() >= 2) {
    tail_before_ = tail_conflict_of(keys, config_.index.gamma, config_.index.alpha);
    tail_after_ = tail_before_;
  }

  switch (config_.mode) {
    case FlowMode::Off:
      use_flow_ = false;
      break;
    case FlowMode::On:
      use_flow_ = true;
      break;
    case FlowMode::Auto:
      use_flow_ = keys.size() >= 2 &&
                  switch_decision(keys, transformed, config_.index.gamma, config_.index.alpha);
      break;
  }

  auto t0 = std::chrono::steady_clock::now();
  if (use_flow_) {
    std::vector<KeyValue> zpairs(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
      zpairs[i] = {transformed[i], pairs[i].payload};
    // Auto mode only enables the flow when the transform kept key order; a
    // forced-on flow may reorder, so sort before loading.
    if (config_.mode == FlowMode::On)
      std::sort(zpairs.begin(), zpairs.end(),
                [](const KeyValue& a, const KeyValue& b) { return a.key < b.key; });
    index_.bulkload(zpairs);
    std::sort(transformed.begin(), transformed.end());
    if (transformed.size() >= 2)
      tail_after_ = tail_conflict_of(transformed, config_.index.gamma, config_.index.alpha);
  } else {
    index_.bulkload(pairs);
  }
  bulk_build_s_ = seconds_since(t0);

  span_lo_ = keys.front();
  span_hi_ = keys.back();
  has_span_ = true;
}

void NflIndex::execute(RequestBatch& batch) {
  batch.results.assign(batch.ops.size(), OpResult{OpStatus::NotFound, 0});
  if (batch.ops.empty()) return;

  std::vector<Key> keys(batch.ops.size());
  for (std::size_t i = 0; i < batch.ops.size(); ++i) keys[i] = batch.ops[i].key;
  std::vector<Key> zkeys;
  if (use_flow_) zkeys = transform_keys(keys, flow_);

  for (std::size_t i = 0; i < batch.ops.size(); ++i) {
    const Request& op = batch.ops[i];
    OpResult& res = batch.results[i];
    // Inserts are only defined inside the bulk-loaded key span.
    if (op.kind == OpKind::Insert && (!has_span_ || op.key < span_lo_ || op.key > span_hi_)) {
      res.status = OpStatus::OutOfKeySpace;
      continue;
    }
    const Key k = use_flow_ ? zkeys[i] : keys[i];
    switch (op.kind) {
      case OpKind::Lookup: {
        std::optional<Payload> p = index_.lookup(k);
        if (p) {
          res.status = OpStatus::Found;
          res.payload = *p;
        } else {
          res.status = OpStatus::NotFound;
        }
        break;
      }
      case OpKind::Insert:
        res.status = index_.insert_unchecked(k, op.payload);
        break;
      case OpKind::Update:
        res.status = index_.update(k, op.payload);
        break;
      case OpKind::Delete:
        res.status = index_.erase(k);
        break;
    }
  }
}

std::optional<Payload> NflIndex::lookup(Key key) {
  RequestBatch b;
  b.ops.push_back({OpKind::Lookup, key, 0});
  execute(b);
  if (b.results[0].status == OpStatus::Found) return b.results[0].payload;
  return std::nullopt;
}

OpStatus NflIndex::insert(Key key, Payload payload) {
  RequestBatch b;
  b.ops.push_back({OpKind::Insert, key, payload});
  execute(b);
  return b.results[0].status;
}

OpStatus NflIndex::update(Key key, Payload payload) {
  RequestBatch b;
  b.ops.push_back({OpKind::Update, key, payload});
  execute(b);
  return b.results[0].status;
}

OpStatus NflIndex::erase(Key key) {
  RequestBatch b;
  b.ops.push_back({OpKind::Delete, key, 0});
  execute(b);
  return b.results[0].status;
}

}  // namespace nfl
