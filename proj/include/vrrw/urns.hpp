#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "vrrw/uniforms.hpp"

namespace vrrw {

/// Two-colour urn contents. Counts only grow.
struct UrnState {
  std::int64_t a = 1;  // left colour
  std::int64_t b = 1;  // right colour
  std::uint64_t draws = 0;

  double left_fraction() const {
    return static_cast<double>(a) / static_cast<double>(a + b);
  }
  bool operator==(const UrnState&) const = default;
};

struct FriedmanParams {
  double alpha = 1.0;  // success probability of the geometric batch, (0, 1]
  std::int64_t a0 = 1;
  std::int64_t b0 = 1;
};

namespace detail {

// Draw t consumes cell (t+1, 0) for the colour pick and, for the
// geometric batch, cell (t+1, 1). Keying by draw index rather than by a
// stream position makes the alpha = 1 urn consume exactly the colour cells
// a plain urn consumes, so the two coincide bit for bit under one seed.
inline double colour_uniform(const UniformTable& t, std::uint64_t draw) {
  return t.at(draw + 1, 0);
}
inline double batch_uniform(const UniformTable& t, std::uint64_t draw) {
  return t.at(draw + 1, 1);
}

// Geometric on {1, 2, ...} with success probability alpha, mean 1/alpha,
// by inverse transform. alpha = 1 is the degenerate single ball.
inline std::int64_t geometric_batch(double alpha, double u) {
  if (alpha >= 1.0) return 1;
  return 1 + static_cast<std::int64_t>(
                 std::floor(std::log1p(-u) / std::log1p(-alpha)));
}

}  // namespace detail

/// Plain reinforcement: draw a colour with probability proportional to its
/// count, return one ball of that colour plus one more of the same colour.
inline UrnState polya_run(std::int64_t a0, std::int64_t b0,
                          std::uint64_t draws, std::uint64_t seed) {
  if (a0 < 1 || b0 < 1) throw std::invalid_argument("urn counts must be >= 1");
  const UniformTable table{seed};
  UrnState s{a0, b0, 0};
  for (std::uint64_t t = 0; t < draws; ++t) {
    const double u = detail::colour_uniform(table, t);
    if (u < s.left_fraction())
      ++s.a;
    else
      ++s.b;
    ++s.draws;
  }
  return s;
}

/// Geometric-replacement variant: a left draw adds one left ball, a right
/// draw adds a geometric(alpha) batch of right balls.
inline UrnState friedman_run(const FriedmanParams& p, std::uint64_t draws,
                             std::uint64_t seed) {
  if (p.a0 < 1 || p.b0 < 1)
    throw std::invalid_argument("urn counts must be >= 1");
  if (!(p.alpha > 0.0) || p.alpha > 1.0)
    throw std::invalid_argument("alpha must lie in (0, 1]");
  const UniformTable table{seed};
  UrnState s{p.a0, p.b0, 0};
  for (std::uint64_t t = 0; t < draws; ++t) {
    const double u = detail::colour_uniform(table, t);
    if (u < s.left_fraction()) {
      ++s.a;
    } else {
      s.b += detail::geometric_batch(p.alpha, detail::batch_uniform(table, t));
    }
    ++s.draws;
  }
  return s;
}

/// CDF of Beta(a, b) for positive integer parameters, via the closed
/// binomial sum F(x) = sum_{j=a}^{a+b-1} C(a+b-1, j) x^j (1-x)^(a+b-1-j).
inline double beta_cdf_int(std::int64_t a, std::int64_t b, double x) {
  if (a < 1 || b < 1)
    throw std::invalid_argument("beta_cdf_int needs integer parameters >= 1");
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  const std::int64_t n = a + b - 1;
  // C(n, j) built incrementally from j = a upward.
  double binom = 1.0;
  for (std::int64_t i = 0; i < a; ++i)
    binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
  // binom now holds C(n, a).
  double term = binom * std::pow(x, static_cast<double>(a)) *
                std::pow(1 - x, static_cast<double>(n - a));
  double sum = term;
  for (std::int64_t j = a; j < n; ++j) {
    term *= static_cast<double>(n - j) / static_cast<double>(j + 1) * x /
            (1 - x);
    sum += term;
  }
  return std::min(1.0, sum);
}

/// One-sample Kolmogorov-Smirnov distance of `samples` against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  if (samples.size() < 2)
    throw std::invalid_argument("ks_statistic needs a non-degenerate sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::max((static_cast<double>(i) + 1) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

/// KS distance of terminal left-fractions against Beta(a0, b0).
inline double beta_limit_test(const std::vector<double>& fractions,
                              std::int64_t a0, std::int64_t b0) {
  if (fractions.size() < 100)
    throw std::invalid_argument("beta_limit_test needs >= 100 samples");
  return ks_statistic(fractions,
                      [=](double x) { return beta_cdf_int(a0, b0, x); });
}

}  // namespace vrrw
