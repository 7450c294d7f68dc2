#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "nfl/conflict.hpp"
#include "nfl/rng.hpp"

using namespace nfl;

namespace {

// Closed-form least squares oracle.
LinearModel ols_oracle(const std::vector<Key>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  LinearModel m;
  if (denom == 0) {
    m.slope = 0;
    m.intercept = sy / n;
  } else {
    m.slope = (n * sxy - sx * sy) / denom;
    m.intercept = (sy - m.slope * sx) / n;
  }
  return m;
}

// Brute-force per-key recount.
std::map<std::int64_t, std::uint64_t> recount(const std::vector<Key>& keys,
                                              const LinearModel& m) {
  std::map<std::int64_t, std::uint64_t> h;
  for (Key k : keys) ++h[m.predict(k)];
  return h;
}

}  // namespace

TEST_CASE("fit_linear exact fit") {
  std::vector<Key> keys{1, 2, 3};
  std::vector<double> pos{0, 2, 4};
  LinearModel m = fit_linear(keys, pos);
  CHECK(m.slope == doctest::Approx(2.0));
  CHECK(m.intercept == doctest::Approx(-2.0));
}

TEST_CASE("fit_linear single point and flat target") {
  std::vector<Key> k1{5};
  std::vector<double> p1{0};
  LinearModel m1 = fit_linear(k1, p1);
  CHECK(m1.slope == 0.0);
  CHECK(m1.intercept == 0.0);

  std::vector<Key> k2{1, 2};
  std::vector<double> p2{0, 0};
  LinearModel m2 = fit_linear(k2, p2);
  CHECK(m2.slope == 0.0);
  CHECK(m2.intercept == 0.0);
}

TEST_CASE("fit_linear matches the closed-form oracle on random instances") {
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 2 + rng.next_below(50);
    std::vector<Key> keys(n);
    std::vector<double> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      keys[i] = rng.next_double(-100.0, 100.0);
      pos[i] = rng.next_double(0.0, 50.0);
    }
    LinearModel got = fit_linear(keys, pos);
    LinearModel want = ols_oracle(keys, pos);
    CHECK(got.slope == doctest::Approx(want.slope).epsilon(1e-9));
    CHECK(got.intercept == doctest::Approx(want.intercept).epsilon(1e-9));
  }
}

TEST_CASE("conflict_degrees brute-force equivalence") {
  std::vector<Key> keys{1.2, 1.4, 2.7};
  LinearModel m{1.0, 0.0};
  ConflictHistogram h = conflict_degrees(keys, m);
  CHECK(h.degrees == std::map<std::int64_t, std::uint64_t>{{1, 2}, {3, 1}});

  std::vector<Key> k2{1, 2, 3};
  ConflictHistogram h2 = conflict_degrees(k2, m);
  CHECK(h2.degrees == std::map<std::int64_t, std::uint64_t>{{1, 1}, {2, 1}, {3, 1}});

  LinearModel flat{0.0, 7.0};
  ConflictHistogram h3 = conflict_degrees(k2, flat);
  CHECK(h3.degrees == std::map<std::int64_t, std::uint64_t>{{7, 3}});
  CHECK(h3.total() == 3);
}

TEST_CASE("conflict_degrees random oracle and sum invariant") {
  Rng rng(29);
  for (int t = 0; t < 100; ++t) {
    std::size_t n = 1 + rng.next_below(200);
    std::vector<Key> keys(n);
    for (auto& k : keys) k = rng.next_double(0.0, 50.0);
    std::sort(keys.begin(), keys.end());
    LinearModel m{rng.next_double(0.1, 3.0), rng.next_double(-5.0, 5.0)};
    ConflictHistogram h = conflict_degrees(keys, m);
    CHECK(h.degrees == recount(keys, m));
    CHECK(h.total() == n);

    // The sorted fast path agrees with the map-based histogram.
    std::vector<std::uint64_t> fast = sorted_degrees(keys, m);
    std::vector<std::uint64_t> slow;
    for (const auto& [pos, c] : h.degrees) slow.push_back(c);
    std::sort(slow.begin(), slow.end());
    CHECK(fast == slow);
  }
}

TEST_CASE("tail_conflict_degree rank rule") {
  // 1000 positions at tail percent 0.99 picks ascending rank 990.
  ConflictHistogram h;
  for (int i = 0; i < 1000; ++i) h.degrees[i] = static_cast<std::uint64_t>(i + 1);
  CHECK(tail_conflict_degree(h, 0.99) == 990);

  ConflictHistogram all_equal;
  for (int i = 0; i < 57; ++i) all_equal.degrees[i] = 4;
  CHECK(tail_conflict_degree(all_equal, 0.5) == 4);
  CHECK(tail_conflict_degree(all_equal, 0.99) == 4);
  CHECK(tail_conflict_degree(all_equal, 1.0) == 4);

  ConflictHistogram h2;
  std::vector<std::uint64_t> degs{1, 1, 1, 1, 5, 9};
  for (std::size_t i = 0; i < degs.size(); ++i) h2.degrees[static_cast<std::int64_t>(i)] = degs[i];
  // t = INT(6 * 0.99) = 5 -> ascending rank 5.
  CHECK(tail_conflict_degree(h2, 0.99) == 5);
}

TEST_CASE("tail_conflict_degree edge cases") {
  ConflictHistogram empty;
  CHECK_THROWS_AS(tail_conflict_degree(empty, 0.99), EmptyHistogram);

  ConflictHistogram single;
  single.degrees[3] = 17;
  // t = INT(1 * 0.99) = 0 clamps to 1.
  CHECK(tail_conflict_degree(single, 0.99) == 17);
}

TEST_CASE("tail_conflict_degree monotone in gamma and bounded") {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    ConflictHistogram h;
    std::size_t m = 1 + rng.next_below(64);
    for (std::size_t i = 0; i < m; ++i) h.degrees[static_cast<std::int64_t>(i)] = 1 + rng.next_below(30);
    std::uint64_t lo = tail_conflict_degree(h, 1e-9);
    std::uint64_t prev = 0;
    for (double g : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 1.0}) {
      std::uint64_t v = tail_conflict_degree(h, g);
      CHECK(v >= prev);
      prev = v;
    }
    // Bounded by the min and max degree.
    std::uint64_t hi = tail_conflict_degree(h, 1.0);
    std::uint64_t min_deg = UINT64_MAX, max_deg = 0;
    for (const auto& [pos, c] : h.degrees) {
      min_deg = std::min(min_deg, c);
      max_deg = std::max(max_deg, c);
    }
    CHECK(lo == min_deg);
    CHECK(hi == max_deg);
    CHECK(prev == hi);
  }
}

TEST_CASE("switch_decision direction, tie, and inversion fallback") {
  // Uniform originals (tail 1) vs grouped transform (tail 10 across all
  // occupied positions): off.
  std::vector<Key> uniform;
  for (int i = 0; i < 1000; ++i) uniform.push_back(i);
  std::vector<Key> clustered;
  for (int g = 0; g < 100; ++g)
    for (int j = 0; j < 10; ++j) clustered.push_back(g + j * 1e-7);
  CHECK(switch_decision(uniform, clustered, 0.99) == false);

  // Clustered originals vs uniform transform: on.
  CHECK(switch_decision(clustered, uniform, 0.99) == true);

  // Identical tails: the strictly-larger rule keeps the flow on.
  CHECK(switch_decision(uniform, uniform, 0.99) == true);

  // Order inversion anywhere disables the flow.
  std::vector<Key> inverted = uniform;
  std::swap(inverted[10], inverted[11]);
  CHECK(switch_decision(uniform, inverted, 0.99) == false);

  // Duplicate transformed keys count as violations too.
  std::vector<Key> dup = uniform;
  dup[5] = dup[4];
  CHECK(switch_decision(uniform, dup, 0.99) == false);
}

TEST_CASE("switch_decision is deterministic") {
  Rng rng(37);
  std::vector<Key> a, b;
  for (int i = 0; i < 500; ++i) {
    a.push_back(i);
    b.push_back(i + rng.next_double(0.0, 0.4));
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  bool first = switch_decision(a, b, 0.99);
  for (int t = 0; t < 5; ++t) CHECK(switch_decision(a, b, 0.99) == first);
}
