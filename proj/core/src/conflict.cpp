#include "nfl/conflict.hpp"

#include <algorithm>
#include <vector>

namespace nfl {

LinearModel fit_linear(std::span<const Key> keys, std::span<const double> positions) {
  if (keys.size() != positions.size() || keys.empty())
    throw InvalidArgument("fit_linear: lengths must match and be >= 1");
  const std::size_t n = keys.size();

  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += keys[i];
    mean_y += positions[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  // Centered accumulation; keys can be ~1e13, raw sums of squares would lose
  // the signal.
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = keys[i] - mean_x;
    sxx += dx * dx;
    sxy += dx * (positions[i] - mean_y);
  }

  LinearModel m;
  if (sxx == 0.0) {
    m.slope = 0.0;
    m.intercept = mean_y;
  } else {
    m.slope = sxy / sxx;
    m.intercept = mean_y - m.slope * mean_x;
  }
  return m;
}

LinearModel fit_linear_scaled_ranks(std::span<const Key> keys, double alpha) {
  std::vector<double> positions(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) positions[i] = static_cast<double>(i) * alpha;
  return fit_linear(keys, positions);
}

ConflictHistogram conflict_degrees(std::span<const Key> keys, const LinearModel& model) {
  ConflictHistogram hist;
  for (Key k : keys) ++hist.degrees[model.predict(k)];
  return hist;
}

std::vector<std::uint64_t> sorted_degrees(std::span<const Key> sorted_keys,
                                          const LinearModel& model) {
  std::vector<std::uint64_t> degrees;
  std::size_t i = 0;
  const std::size_t n = sorted_keys.size();
  while (i < n) {
    std::int64_t p = model.predict(sorted_keys[i]);
    std::size_t j = i + 1;
    while (j < n && model.predict(sorted_keys[j]) == p) ++j;
    degrees.push_back(j - i);
    i = j;
  }
  std::sort(degrees.begin(), degrees.end());
  return degrees;
}

std::uint64_t tail_from_degrees(std::span<const std::uint64_t> degrees_ascending, double gamma) {
  const std::size_t m = degrees_ascending.size();
  if (m == 0) throw EmptyHistogram("tail_from_degrees: no occupied positions");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw InvalidArgument("tail_from_degrees: gamma must be in (0, 1]");
  std::size_t t = static_cast<std::size_t>(std::floor(static_cast<double>(m) * gamma));
  t = std::clamp<std::size_t>(t, 1, m);
  return degrees_ascending[t - 1];
}

std::uint64_t tail_conflict_degree(const ConflictHistogram& hist, double gamma) {
  const std::size_t m = hist.occupied();
  if (m == 0) throw EmptyHistogram("tail_conflict_degree: no occupied positions");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw InvalidArgument("tail_conflict_degree: gamma must be in (0, 1]");

  std::vector<std::uint64_t> degrees;
  degrees.reserve(m);
  for (const auto& [pos, c] : hist.degrees) degrees.push_back(c);
  std::sort(degrees.begin(), degrees.end());

  std::size_t t = static_cast<std::size_t>(std::floor(static_cast<double>(m) * gamma));
  t = std::clamp<std::size_t>(t, 1, m);
  return degrees[t - 1];
}

std::uint64_t tail_conflict_of(std::span<const Key> keys, double gamma, double alpha) {
  LinearModel m = fit_linear_scaled_ranks(keys, alpha);
  return tail_from_degrees(sorted_degrees(keys, m), gamma);
}

bool switch_decision(std::span<const Key> original_keys, std::span<const Key> transformed_keys,
                     double gamma, double alpha) {
  if (original_keys.size() != transformed_keys.size() || original_keys.size() < 2)
    throw InvalidArgument("switch_decision: arrays must match and have >= 2 keys");

  // Originals arrive sorted; the transform must keep them strictly increasing
  // or the index built on transformed keys would not see them in key order.
  for (std::size_t i = 1; i < transformed_keys.size(); ++i) {
    if (!(transformed_keys[i] > transformed_keys[i - 1])) return false;
  }

  std::vector<Key> sorted_z(transformed_keys.begin(), transformed_keys.end());
  std::sort(sorted_z.begin(), sorted_z.end());

  std::uint64_t tail_original = tail_conflict_of(original_keys, gamma, alpha);
  std::uint64_t tail_transformed = tail_conflict_of(sorted_z, gamma, alpha);
  return !(tail_transformed > tail_original);
}

}  // namespace nfl
