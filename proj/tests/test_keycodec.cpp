#include <doctest.h>

#include <cmath>
#include <vector>

#include "nfl/keycodec.hpp"
#include "nfl/rng.hpp"

using namespace nfl;

namespace {

// Independent digit oracle: repeated multiply-by-theta extraction.
std::vector<double> digit_oracle(double x_norm, double theta, std::uint32_t dims) {
  std::vector<double> out;
  double ip = std::floor(x_norm);
  out.push_back(ip);
  double frac = x_norm - ip;
  for (std::uint32_t k = 1; k + 1 < dims; ++k) {
    frac *= theta;
    double digit = std::floor(frac);
    frac -= digit;
    out.push_back(digit);
  }
  out.push_back(frac);
  return out;
}

}  // namespace

TEST_CASE("fit_codec forced arithmetic") {
  std::vector<Key> keys{10, 20, 30};
  CodecParams p = fit_codec(keys, 2.0, 2);
  CHECK(p.mu == 10.0);
  CHECK(p.sigma == 10.0);
  CHECK(p.theta == 2.0);
  CHECK(p.dims == 2);

  std::vector<Key> k2{0, 100};
  CodecParams p2 = fit_codec(k2, 4.0, 2);
  CHECK(p2.mu == 0.0);
  CHECK(p2.sigma == 25.0);
}

TEST_CASE("fit_codec degenerate range") {
  std::vector<Key> keys{5, 5};
  CHECK_THROWS_AS(fit_codec(keys, 2.0, 2), DegenerateRange);
}

TEST_CASE("fit_codec argument validation") {
  std::vector<Key> keys{1, 2};
  CHECK_THROWS_AS(fit_codec(keys, 1.0, 2), InvalidArgument);
  CHECK_THROWS_AS(fit_codec(keys, 2.0, 1), InvalidArgument);
}

TEST_CASE("normalize endpoints and midpoint") {
  CodecParams p{10.0, 10.0, 2.0, 2};
  CHECK(normalize(20.0, p) == 1.0);
  CHECK(normalize(10.0, p) == 0.0);
  CHECK(normalize(30.0, p) == 2.0);
}

TEST_CASE("expand splits integer and fraction") {
  CodecParams p{0.0, 1.0, 10.0, 2};
  FeatureVector v = expand(3.25, p);
  REQUIRE(v.size() == 2);
  CHECK(v[0] == 3.0);
  CHECK(v[1] == 0.25);

  CodecParams p4{0.0, 1.0, 10.0, 4};
  FeatureVector v4 = expand(3.141, p4);
  REQUIRE(v4.size() == 4);
  CHECK(v4[0] == 3.0);
  CHECK(v4[1] == 1.0);
  CHECK(v4[2] == 4.0);
  CHECK(v4[3] == doctest::Approx(0.1).epsilon(1e-9));
  // Weighted reconstruction recovers the input.
  CHECK(reconstruct(v4, p4) == doctest::Approx(3.141).epsilon(1e-12));

  FeatureVector z = expand(0.0, p4);
  for (double c : z) CHECK(c == 0.0);
}

TEST_CASE("merge is the plain sum") {
  std::vector<double> a{1.5, 0.25};
  CHECK(merge(a) == 1.75);
  std::vector<double> b{0.0, 0.0};
  CHECK(merge(b) == 0.0);
  std::vector<double> c{3.0, 0.25};
  CHECK(merge(c) == 3.25);
}

TEST_CASE("roundtrip d=2 is exact") {
  CodecParams p{0.0, 1.0, 1048576.0, 2};
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double x = rng.next_double(0.0, 1048576.0);
    FeatureVector v = expand(x, p);
    CHECK(merge(v) == x);
  }
}

TEST_CASE("roundtrip d>2 weighted reconstruction") {
  CodecParams p{0.0, 1.0, 1048576.0, 4};
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    double x = rng.next_double(0.0, 1048576.0);
    FeatureVector v = expand(x, p);
    double back = reconstruct(v, p);
    CHECK(std::fabs(back - x) <= 1e-9 * std::max(1.0, std::fabs(x)));
  }
}

TEST_CASE("expand matches the digit oracle") {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    std::uint32_t dims = 2 + static_cast<std::uint32_t>(rng.next_below(4));
    double theta = rng.next_double(2.0, 64.0);
    CodecParams p{0.0, 1.0, theta, dims};
    double x = rng.next_double(0.0, 1000.0);
    FeatureVector got = expand(x, p);
    std::vector<double> want = digit_oracle(x, theta, dims);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == want[k]);
  }
}

TEST_CASE("order embedding and uniqueness") {
  CodecParams p{0.0, 1.0, 16.0, 3};
  Rng rng(17);
  std::vector<double> xs;
  for (int i = 0; i < 2000; ++i) xs.push_back(rng.next_double(0.0, 16.0));
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  FeatureVector prev = expand(xs[0], p);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    FeatureVector cur = expand(xs[i], p);
    CHECK(std::lexicographical_compare(prev.begin(), prev.end(), cur.begin(), cur.end()));
    prev = cur;
  }
}
