#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "vrrw/uniforms.hpp"

using namespace vrrw;

TEST_CASE("uniform_at is deterministic and stateless") {
  UniformTable a{0xdeadbeefULL};
  UniformTable b{0xdeadbeefULL};
  for (std::uint64_t i = 1; i < 50; ++i) {
    for (Site j = -5; j <= 5; ++j) {
      REQUIRE(a.bits(i, j) == a.bits(i, j));
      REQUIRE(a.bits(i, j) == b.bits(i, j));
    }
  }
  UniformTable c{0xdeadbef0ULL};
  REQUIRE(a.bits(1, 0) != c.bits(1, 0));
}

TEST_CASE("values lie in [0,1)") {
  UniformTable t{7};
  for (std::uint64_t i = 1; i <= 1000; ++i) {
    const double u = t.at(i, static_cast<Site>(i % 17) - 8);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("zigzag encoding is injective over a window") {
  std::set<std::uint64_t> seen;
  for (Site j = -1000; j <= 1000; ++j) REQUIRE(seen.insert(zigzag(j)).second);
  REQUIRE(zigzag(0) == 0);
  REQUIRE(zigzag(-1) == 1);
  REQUIRE(zigzag(1) == 2);
}

TEST_CASE("empirical mean over 1e6 cells is 0.5 within 0.002") {
  UniformTable t{20260810};
  double sum = 0;
  const int rows = 1000, cols = 1000;
  for (int i = 1; i <= rows; ++i)
    for (int j = 0; j < cols; ++j)
      sum += t.at(static_cast<std::uint64_t>(i), static_cast<Site>(j - 500));
  const double mean = sum / (rows * cols);
  REQUIRE(std::abs(mean - 0.5) < 0.002);
}

TEST_CASE("chi-square over 20 bins passes at the 0.001 level") {
  UniformTable t{424242};
  std::vector<std::uint64_t> bins(20, 0);
  const int rows = 1000, cols = 1000;
  for (int i = 1; i <= rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double u =
          t.at(static_cast<std::uint64_t>(i), static_cast<Site>(j - 500));
      ++bins[std::min<std::size_t>(19, static_cast<std::size_t>(u * 20))];
    }
  const double expected = rows * static_cast<double>(cols) / 20.0;
  double chi2 = 0;
  for (auto c : bins) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  // Critical value of chi-square with 19 degrees of freedom at p = 0.001.
  REQUIRE(chi2 < 43.8202);
}

TEST_CASE("replicate seeds are deterministic and collision-free") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto s = replicate_seed(99, r);
    REQUIRE(s == replicate_seed(99, r));
    REQUIRE(seen.insert(s).second);
  }
  REQUIRE(replicate_seed(99, 0) != replicate_seed(100, 0));
}

TEST_CASE("derived streams are uncorrelated") {
  const int n = 10000;
  for (std::uint64_t r = 0; r < 100; ++r) {
    UniformTable a{replicate_seed(5150, r)};
    UniformTable b{replicate_seed(5150, r + 1)};
    double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
    for (int i = 1; i <= n; ++i) {
      const double x = a.at(static_cast<std::uint64_t>(i), 0);
      const double y = b.at(static_cast<std::uint64_t>(i), 0);
      sx += x;
      sy += y;
      sxy += x * y;
      sxx += x * x;
      syy += y * y;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    const double corr = cov / std::sqrt(vx * vy);
    REQUIRE(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
}
