#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "nfl/afli.hpp"
#include "nfl/ref_map.hpp"
#include "nfl/rng.hpp"

using namespace nfl;

namespace {

std::vector<KeyValue> make_pairs(const std::vector<Key>& keys) {
  std::vector<KeyValue> pairs;
  pairs.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i)
    pairs.push_back({keys[i], static_cast<Payload>(i * 10 + 10)});
  return pairs;
}

void require_clean(const Index& index) {
  auto failure = index.audit();
  if (failure) FAIL_CHECK("audit: " << *failure);
}

}  // namespace

TEST_CASE("empty bulkload gives an empty index") {
  Index index;
  index.bulkload({});
  CHECK_FALSE(index.lookup(0.0).has_value());
  CHECK_FALSE(index.lookup(123.0).has_value());
  CHECK(index.stats().key_count == 0);
  CHECK(index.insert(1.0, 1) == OpStatus::OutOfKeySpace);
  require_clean(index);
}

TEST_CASE("three-key bulkload walkthrough") {
  // Hand-executed build: fit over keys [1,2,3] against scaled ranks [0,2,4]
  // gives slope 2, intercept -2; size = min(floor(3*2), 4-0+1) = 5; data
  // slots at 0, 2, 4.
  Index index(IndexConfig{});
  std::vector<KeyValue> pairs{{1, 10}, {2, 20}, {3, 30}};
  index.bulkload(pairs);

  IndexStats st = index.stats();
  CHECK(st.key_count == 3);
  CHECK(st.model_nodes == 1);
  CHECK(st.dense_nodes == 0);
  CHECK(st.buckets == 0);
  CHECK(st.max_height == 1);
  CHECK(index.tail_conflict() == 1);

  CHECK(index.lookup(1).value() == 10);
  CHECK(index.lookup(2).value() == 20);
  CHECK(index.lookup(3).value() == 30);
  // 2.5 predicts round(2*2.5-2) = 3: an empty slot.
  CHECK_FALSE(index.lookup(2.5).has_value());
  CHECK_FALSE(index.lookup(0.0).has_value());
  require_clean(index);

  SUBCASE("insert into the empty slot, then collide on it") {
    CHECK(index.insert(2.5, 25) == OpStatus::Inserted);
    CHECK(index.lookup(2.5).value() == 25);
    require_clean(index);

    // 2.6 predicts slot 3 as well; both pairs stay retrievable.
    CHECK(index.insert(2.6, 26) == OpStatus::Inserted);
    CHECK(index.lookup(2.5).value() == 25);
    CHECK(index.lookup(2.6).value() == 26);
    CHECK(index.stats().key_count == 5);
    require_clean(index);
  }

  SUBCASE("duplicate insert leaves the index unchanged") {
    CHECK(index.insert(2.0, 99) == OpStatus::AlreadyExists);
    CHECK(index.lookup(2).value() == 20);
    CHECK(index.stats().key_count == 3);
  }

  SUBCASE("out-of-span inserts are rejected") {
    CHECK(index.insert(0.5, 5) == OpStatus::OutOfKeySpace);
    CHECK(index.insert(3.5, 35) == OpStatus::OutOfKeySpace);
    CHECK(index.stats().key_count == 3);
  }

  SUBCASE("update roundtrip and structural no-op") {
    IndexStats before = index.stats();
    CHECK(index.update(2, 99) == OpStatus::Updated);
    CHECK(index.lookup(2).value() == 99);
    CHECK(index.update(7, 1) == OpStatus::NotFound);
    IndexStats after = index.stats();
    CHECK(before.size_bytes == after.size_bytes);
    CHECK(before.max_height == after.max_height);
    CHECK(before.key_count == after.key_count);
  }

  SUBCASE("delete isolates the removed key") {
    CHECK(index.erase(2) == OpStatus::Deleted);
    CHECK_FALSE(index.lookup(2).has_value());
    CHECK(index.lookup(1).value() == 10);
    CHECK(index.lookup(3).value() == 30);
    CHECK(index.erase(2) == OpStatus::NotFound);
    require_clean(index);
  }
}

TEST_CASE("bulkload rejects duplicate keys") {
  Index index;
  std::vector<KeyValue> pairs{{1, 1}, {1, 2}, {3, 3}};
  CHECK_THROWS_AS(index.bulkload(pairs), DuplicateKey);
}

TEST_CASE("indistinguishable keys build a dense node") {
  // Key spacing small enough that the centered sum of squares underflows:
  // the fit degenerates to slope 0 and the node becomes a gapped array.
  Index index;
  std::vector<Key> keys{1e-320, 2e-320, 3e-320};
  index.bulkload(make_pairs(keys));

  IndexStats st = index.stats();
  CHECK(st.dense_nodes == 1);
  CHECK(st.model_nodes == 0);
  CHECK(st.key_count == 3);
  for (std::size_t i = 0; i < keys.size(); ++i)
    CHECK(index.lookup(keys[i]).value() == i * 10 + 10);
  require_clean(index);

  SUBCASE("dense insert uses gaps, then rebuilds when full") {
    // D^gamma is 1 here, so the dense node has exactly one gap.
    CHECK(index.insert(1.5e-320, 99) == OpStatus::Inserted);
    CHECK(index.lookup(1.5e-320).value() == 99);
    require_clean(index);

    CHECK(index.insert(2.5e-320, 98) == OpStatus::Inserted);
    CHECK(index.lookup(2.5e-320).value() == 98);
    CHECK(index.stats().key_count == 5);
    for (std::size_t i = 0; i < keys.size(); ++i)
      CHECK(index.lookup(keys[i]).value() == i * 10 + 10);
    require_clean(index);
  }

  SUBCASE("dense delete keeps order and gap fills") {
    CHECK(index.erase(2e-320) == OpStatus::Deleted);
    CHECK_FALSE(index.lookup(2e-320).has_value());
    CHECK(index.lookup(1e-320).value() == 10);
    CHECK(index.lookup(3e-320).value() == 30);
    require_clean(index);

    CHECK(index.erase(1e-320) == OpStatus::Deleted);  // delete the minimum
    CHECK(index.erase(3e-320) == OpStatus::Deleted);  // delete the last key
    CHECK(index.stats().key_count == 0);
    CHECK_FALSE(index.lookup(3e-320).has_value());
    require_clean(index);
  }

  SUBCASE("dense update is in place") {
    CHECK(index.update(2e-320, 77) == OpStatus::Updated);
    CHECK(index.lookup(2e-320).value() == 77);
    require_clean(index);
  }
}

TEST_CASE("buckets buffer small conflicts") {
  // 800 singles, 100 close pairs, 100 close triples: tail degree 3, so pairs
  // land in buckets (degree 2 < 3) and triples go to children.
  std::vector<Key> keys;
  for (int i = 0; i < 800; ++i) keys.push_back(i);
  for (int i = 0; i < 100; ++i) {
    double base = 1000 + i;
    keys.push_back(base);
    keys.push_back(base + 1e-4);
  }
  for (int i = 0; i < 100; ++i) {
    double base = 2000 + i;
    keys.push_back(base);
    keys.push_back(base + 1e-4);
    keys.push_back(base + 2e-4);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<KeyValue> pairs = make_pairs(keys);

  Index index;
  index.bulkload(pairs);
  REQUIRE(index.tail_conflict() == 3);
  IndexStats st = index.stats();
  CHECK(st.buckets > 0);
  for (const KeyValue& kv : pairs) CHECK(index.lookup(kv.key).value() == kv.payload);
  require_clean(index);

  SUBCASE("bucket overflow converts to a child node") {
    // Fill one bucket to capacity (3) and overflow it.
    double base = 1000;
    CHECK(index.insert(base + 2e-4, 1) == OpStatus::Inserted);
    require_clean(index);
    CHECK(index.insert(base + 3e-4, 2) == OpStatus::Inserted);
    CHECK(index.lookup(base).has_value());
    CHECK(index.lookup(base + 1e-4).has_value());
    CHECK(index.lookup(base + 2e-4).value() == 1);
    CHECK(index.lookup(base + 3e-4).value() == 2);
    require_clean(index);
  }

  SUBCASE("bucket delete overwrites with the trailing element") {
    double base = 1000;
    CHECK(index.erase(base) == OpStatus::Deleted);
    CHECK_FALSE(index.lookup(base).has_value());
    CHECK(index.lookup(base + 1e-4).has_value());
    require_clean(index);
  }
}

TEST_CASE("clustered keys produce duplicated child links") {
  std::vector<Key> keys;
  for (int i = 0; i < 1000; ++i) keys.push_back(i);
  for (int i = 0; i < 60; ++i) keys.push_back(500.1 + i * 1e-3);
  std::sort(keys.begin(), keys.end());

  Index index;
  index.bulkload(make_pairs(keys));
  IndexStats st = index.stats();
  CHECK(st.max_height >= 2);
  for (Key k : keys) CHECK(index.lookup(k).has_value());
  require_clean(index);
}

TEST_CASE("ordered bucket mode") {
  IndexConfig cfg;
  cfg.bucket_mode = BucketMode::Ordered;
  std::vector<Key> keys;
  for (int i = 0; i < 200; ++i) {
    keys.push_back(i);
    keys.push_back(i + 1e-4);
  }
  for (int i = 200; i < 260; ++i) {
    keys.push_back(i);
    keys.push_back(i + 1e-4);
    keys.push_back(i + 2e-4);
  }
  std::sort(keys.begin(), keys.end());
  Index index(cfg);
  index.bulkload(make_pairs(keys));
  for (Key k : keys) CHECK(index.lookup(k).has_value());
  CHECK(index.erase(0.0) == OpStatus::Deleted);
  CHECK(index.lookup(1e-4).has_value());
  require_clean(index);
}

TEST_CASE("differential fuzz against the reference map") {
  Rng rng(4242);

  // Mixed density key pool: uniform spread plus tight clusters.
  std::set<Key> pool_set;
  while (pool_set.size() < 6000) pool_set.insert(rng.next_double(0.0, 1e6));
  for (int c = 0; c < 40; ++c) {
    double base = rng.next_double(1e5, 9e5);
    for (int i = 0; i < 25; ++i) pool_set.insert(base + i * 1e-5);
  }
  std::vector<Key> pool(pool_set.begin(), pool_set.end());

  // Bulkload half; keep the span endpoints loaded.
  std::vector<Key> bulk, reserve;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (i == 0 || i + 1 == pool.size() || rng.next_below(2) == 0)
      bulk.push_back(pool[i]);
    else
      reserve.push_back(pool[i]);
  }

  std::vector<KeyValue> pairs;
  for (Key k : bulk) pairs.push_back({k, static_cast<Payload>(rng.next_u64())});

  Index index;
  index.bulkload(pairs);
  RefMap ref;
  ref.bulkload(pairs);
  require_clean(index);

  std::vector<Key> live(bulk);
  std::size_t next_reserve = 0;
  const int kOps = 100000;
  for (int t = 0; t < kOps; ++t) {
    std::uint64_t dice = rng.next_below(100);
    if (dice < 40) {
      Key k = live[rng.next_below(live.size())];
      auto a = index.lookup(k);
      auto b = ref.lookup(k);
      REQUIRE(a.has_value() == b.has_value());
      if (a) REQUIRE(*a == *b);
    } else if (dice < 60 && next_reserve < reserve.size()) {
      Key k = reserve[next_reserve++];
      Payload p = rng.next_u64();
      REQUIRE(index.insert(k, p) == ref.insert(k, p));
      live.push_back(k);
    } else if (dice < 75) {
      Key k = live[rng.next_below(live.size())];
      Payload p = rng.next_u64();
      REQUIRE(index.insert(k, p) == ref.insert(k, p));
    } else if (dice < 90) {
      Key k = live[rng.next_below(live.size())];
      Payload p = rng.next_u64();
      REQUIRE(index.update(k, p) == ref.update(k, p));
    } else {
      Key k = live[rng.next_below(live.size())];
      REQUIRE(index.erase(k) == ref.erase(k));
    }
    if (t % 20000 == 19999) require_clean(index);
  }
  require_clean(index);
  CHECK(index.stats().key_count == ref.size());

  // Full sweep at the end.
  for (Key k : live) {
    auto a = index.lookup(k);
    auto b = ref.lookup(k);
    REQUIRE(a.has_value() == b.has_value());
    if (a) REQUIRE(*a == *b);
  }
}

TEST_CASE("size accounting grows when a bucket is allocated") {
  std::vector<Key> keys;
  for (int i = 0; i < 400; ++i) {
    keys.push_back(i);
    keys.push_back(i + 1e-4);
  }
  for (int i = 400; i < 460; ++i) {
    keys.push_back(i);
    keys.push_back(i + 1e-4);
    keys.push_back(i + 2e-4);
  }
  for (int i = 500; i < 900; ++i) keys.push_back(i);  // lone data slots
  std::sort(keys.begin(), keys.end());
  Index index;
  index.bulkload(make_pairs(keys));
  REQUIRE(index.tail_conflict() >= 3);

  // An insert that collides with a lone data slot allocates a bucket.
  std::uint64_t before = index.stats().size_bytes;
  Key probe = 700.0;
  REQUIRE(index.lookup(probe).has_value());
  std::uint64_t buckets_before = index.stats().buckets;
  CHECK(index.insert(probe + 2e-5, 7) == OpStatus::Inserted);
  IndexStats after = index.stats();
  CHECK(after.buckets == buckets_before + 1);
  CHECK(after.size_bytes > before);
  require_clean(index);
}

TEST_CASE("a dense child emptied by deletes stays auditable") {
  // Sub-1e-319-spaced keys collapse the child fit, producing a dense child
  // under the root model node.
  std::vector<Key> keys;
  for (int i = 1; i <= 1000; ++i) keys.push_back(i);
  std::vector<Key> cluster;
  for (int i = 1; i <= 30; ++i) cluster.push_back(i * 1e-320);
  keys.insert(keys.end(), cluster.begin(), cluster.end());
  std::sort(keys.begin(), keys.end());

  Index index;
  index.bulkload(make_pairs(keys));
  REQUIRE(index.stats().dense_nodes >= 1);
  require_clean(index);

  for (Key k : cluster) REQUIRE(index.erase(k) == OpStatus::Deleted);
  for (Key k : cluster) CHECK_FALSE(index.lookup(k).has_value());
  CHECK(index.lookup(500.0).has_value());
  require_clean(index);

  // Reuse the emptied node.
  CHECK(index.insert(cluster[0], 7) == OpStatus::Inserted);
  CHECK(index.lookup(cluster[0]).value() == 7);
  require_clean(index);
}

TEST_CASE("max_depth is a hard valve") {
  IndexConfig cfg;
  cfg.max_depth = 1;
  Index index(cfg);
  // Clustered keys force at least one child node, i.e. depth 2.
  std::vector<Key> keys;
  for (int i = 0; i < 200; ++i) keys.push_back(i);
  for (int i = 0; i < 40; ++i) keys.push_back(100.5 + i * 1e-6);
  std::sort(keys.begin(), keys.end());
  CHECK_THROWS_AS(index.bulkload(make_pairs(keys)), DepthExceeded);
}

TEST_CASE("modelling depth stays bounded on adversarial clusters") {
  // Nested clusters at every scale.
  std::vector<Key> keys;
  double base = 0.0;
  double width = 1e6;
  for (int level = 0; level < 12; ++level) {
    for (int i = 1; i <= 40; ++i) keys.push_back(base + width * i / 41.0);
    width /= 50.0;
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  Index index;
  index.bulkload(make_pairs(keys));
  IndexStats st = index.stats();
  CHECK(st.max_height <= 64);
  for (Key k : keys) CHECK(index.lookup(k).has_value());
  require_clean(index);
}
