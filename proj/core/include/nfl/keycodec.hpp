#pragma once

#include <span>
#include <vector>

#include "nfl/common.hpp"

namespace nfl {

// Scaled min-max normalization constants plus the feature expansion shape.
// mu is the minimum of the fitted key set, sigma = (max - min) / theta, so a
// key inside the fitted range normalizes into [0, theta].
struct CodecParams {
  double mu = 0.0;
  double sigma = 1.0;
  double theta = 2.0;
  std::uint32_t dims = 2;
};

using FeatureVector = std::vector<double>;

// Fits normalization constants on a sorted key set. Throws DegenerateRange
// when all keys are equal, InvalidArgument on a bad theta/dims.
CodecParams fit_codec(std::span<const Key> keys, double theta, std::uint32_t dims);

inline double normalize(Key key, const CodecParams& p) { return (key - p.mu) / p.sigma; }

// Expands a normalized key into [int part, base-theta digits..., residual
// fraction]. dims == 2 degenerates to [int, frac]. Writes exactly p.dims
// values to out.
void expand_into(double x_norm, const CodecParams& p, std::span<double> out);

FeatureVector expand(double x_norm, const CodecParams& p);

// Decoder: the transformed scalar key is the plain sum of the components.
double merge(std::span<const double> z_vec);

// Weighted reconstruction of the expansion, used to check that the feature
// split lost nothing: int + sum_k digit_k/theta^k + frac/theta^(d-2).
double reconstruct(std::span<const double> components, const CodecParams& p);

}  // namespace nfl
