#include "nfl/keycodec.hpp"

#include <cmath>

namespace nfl {

CodecParams fit_codec(std::span<const Key> keys, double theta, std::uint32_t dims) {
  if (keys.empty()) throw InvalidArgument("fit_codec: empty key set");
  if (!(theta > 1.0)) throw InvalidArgument("fit_codec: theta must be > 1");
  if (dims < 2) throw InvalidArgument("fit_codec: dims must be >= 2");
  double lo = keys.front();
  double hi = keys.back();
  if (!(hi > lo)) throw DegenerateRange("fit_codec: max(keys) == min(keys)");
  CodecParams p;
  p.mu = lo;
  p.sigma = (hi - lo) / theta;
  p.theta = theta;
  p.dims = dims;
  return p;
}

void expand_into(double x_norm, const CodecParams& p, std::span<double> out) {
  const std::uint32_t d = p.dims;
  double x_int = std::floor(x_norm);
  double frac = x_norm - x_int;
  out[0] = x_int;
  // Base-theta digits of the fraction, most significant first; the residual
  // fraction after d-2 extractions rides in the last component.
  for (std::uint32_t k = 1; k + 1 < d; ++k) {
    frac *= p.theta;
    double digit = std::floor(frac);
    frac -= digit;
    out[k] = digit;
  }
  out[d - 1] = frac;
}

FeatureVector expand(double x_norm, const CodecParams& p) {
  FeatureVector v(p.dims);
  expand_into(x_norm, p, v);
  return v;
}

double merge(std::span<const double> z_vec) {
  double s = 0.0;
  for (double z : z_vec) s += z;
  return s;
}

double reconstruct(std::span<const double> components, const CodecParams& p) {
  const std::size_t d = components.size();
  double x = components[0];
  double scale = 1.0;
  for (std::size_t k = 1; k + 1 < d; ++k) {
    scale /= p.theta;
    x += components[k] * scale;
  }
  x += components[d - 1] * scale;
  return x;
}

}  // namespace nfl
