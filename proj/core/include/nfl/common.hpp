#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nfl {

using Key = double;
using Payload = std::uint64_t;

struct KeyValue {
  Key key;
  Payload payload;
};

// Base for all library exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// fit_codec on a key set with max == min.
class DegenerateRange : public Error {
 public:
  using Error::Error;
};

// Feature vector length does not match the flow's input dimension.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// Training step produced a non-finite loss or gradient.
class FlowDiverged : public Error {
 public:
  using Error::Error;
};

class BadMagic : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class FileFormat : public Error {
 public:
  using Error::Error;
};

class InsufficientUnique : public Error {
 public:
  using Error::Error;
};

class ExhaustedInserts : public Error {
 public:
  using Error::Error;
};

class DepthExceeded : public Error {
 public:
  using Error::Error;
};

class DuplicateKey : public Error {
 public:
  using Error::Error;
};

class EmptyHistogram : public Error {
 public:
  using Error::Error;
};

// Rounding rule used everywhere a real-valued prediction becomes a slot.
// Wild extrapolations clamp so the cast stays defined; NaN maps to slot 0.
inline std::int64_t round_half_up(double x) {
  double r = std::floor(x + 0.5);
  if (std::isnan(r)) return 0;
  constexpr double kBound = 4.611686018427387904e18;  // 2^62
  if (r > kBound) return static_cast<std::int64_t>(kBound);
  if (r < -kBound) return static_cast<std::int64_t>(-kBound);
  return static_cast<std::int64_t>(r);
}

}  // namespace nfl
