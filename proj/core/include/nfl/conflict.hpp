#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "nfl/common.hpp"

namespace nfl {

struct LinearModel {
  double slope = 0.0;
  double intercept = 0.0;

  std::int64_t predict(Key key) const { return round_half_up(slope * key + intercept); }
};

// Per-position key counts under a linear model. Only occupied positions are
// stored.
struct ConflictHistogram {
  std::map<std::int64_t, std::uint64_t> degrees;

  std::size_t occupied() const { return degrees.size(); }
  std::uint64_t total() const {
    std::uint64_t n = 0;
    for (const auto& [pos, c] : degrees) n += c;
    return n;
  }
};

// Ordinary least squares of positions on keys. n == 1 or all-equal keys fall
// back to slope 0 with the mean position as intercept.
LinearModel fit_linear(std::span<const Key> keys, std::span<const double> positions);

// Convenience: fit against scaled ranks (rank_i * alpha), the target layout
// used when sizing model node arrays.
LinearModel fit_linear_scaled_ranks(std::span<const Key> keys, double alpha);

ConflictHistogram conflict_degrees(std::span<const Key> keys, const LinearModel& model);

// Fast path for sorted keys: predictions are non-decreasing, so degrees are
// group lengths of one linear scan. Returns the degrees sorted ascending.
std::vector<std::uint64_t> sorted_degrees(std::span<const Key> sorted_keys,
                                          const LinearModel& model);

// tail_conflict_degree over a pre-sorted degree array.
std::uint64_t tail_from_degrees(std::span<const std::uint64_t> degrees_ascending, double gamma);

// The gamma-quantile of occupied-position degrees: t = INT(m * gamma) clamped
// to [1, m], value = rank-t element of the degrees sorted ascending.
std::uint64_t tail_conflict_degree(const ConflictHistogram& hist, double gamma);

// Tail conflict degree of a key set under its own scaled-rank fit.
std::uint64_t tail_conflict_of(std::span<const Key> keys, double gamma, double alpha);

// Flow on/off decision. Returns false when the transformed keys' tail
// conflict is strictly larger than the originals', or when the transformed
// sequence is not strictly increasing alongside the sorted originals (order
// inversions or duplicates would corrupt index semantics).
bool switch_decision(std::span<const Key> original_keys, std::span<const Key> transformed_keys,
                     double gamma, double alpha = 2.0);

}  // namespace nfl
