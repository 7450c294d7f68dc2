#pragma once

#include <map>
#include <optional>
#include <span>

#include "nfl/afli.hpp"
#include "nfl/common.hpp"

namespace nfl {

// Reference ordered map with the index operation vocabulary. Ground truth for
// every differential test and the comparison-based baseline engine.
class RefMap {
 public:
  void bulkload(std::span<const KeyValue> pairs) {
    map_.clear();
    for (const KeyValue& kv : pairs) map_.emplace_hint(map_.end(), kv.key, kv.payload);
    if (map_.size() != pairs.size()) throw DuplicateKey("RefMap::bulkload: duplicate key");
  }

  std::optional<Payload> lookup(Key key) const {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  OpStatus insert(Key key, Payload payload) {
    auto [it, fresh] = map_.emplace(key, payload);
    return fresh ? OpStatus::Inserted : OpStatus::AlreadyExists;
  }

  OpStatus update(Key key, Payload payload) {
    auto it = map_.find(key);
    if (it == map_.end()) return OpStatus::NotFound;
    it->second = payload;
    return OpStatus::Updated;
  }

  OpStatus erase(Key key) { return map_.erase(key) ? OpStatus::Deleted : OpStatus::NotFound; }

  std::size_t size() const { return map_.size(); }

 private:
  std::map<Key, Payload> map_;
};

}  // namespace nfl
