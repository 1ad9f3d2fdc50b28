#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vrrw/record.hpp"
#include "vrrw/walk.hpp"

namespace vrrw {

/// The three diagnostic series presets. Each fixes a linear combination of
/// counts R_n and a matching threshold-time clock t_n:
///   s51: R = Z(2)+Z(4)-Z(1)-Z(3),  t_n = first m with Z_m^+(2) >= n
///   s52: R = Z(5)+Z(7)-Z(1)-Z(3),  t_n = first m with Z_m(4)  >= n
///   s53: R = Z(6)+Z(8)-Z(1)-Z(3),  t_n = first m with Z_m^+(4) == n
enum class SeriesPreset { s51, s52, s53 };

inline const char* to_string(SeriesPreset p) {
  switch (p) {
    case SeriesPreset::s51: return "s51";
    case SeriesPreset::s52: return "s52";
    case SeriesPreset::s53: return "s53";
  }
  return "?";
}

inline std::int64_t r_series_value(const WalkState& s, SeriesPreset p) {
  switch (p) {
    case SeriesPreset::s51:
      return s.z.at(2) + s.z.at(4) - s.z.at(1) - s.z.at(3);
    case SeriesPreset::s52:
      return s.z.at(5) + s.z.at(7) - s.z.at(1) - s.z.at(3);
    case SeriesPreset::s53:
      return s.z.at(6) + s.z.at(8) - s.z.at(1) - s.z.at(3);
  }
  return 0;
}

/// Indicator difference 1{X=2 or X>=4} - 1{X<=1 or X=3}; the two sets
/// partition the line, so the value is always +-1.
inline std::int64_t r_position_indicator(Site x) {
  return (x == 2 || x >= 4) ? 1 : -1;
}

/// Half-integers are held as doubled integers so the identity check is
/// exact. `direct` is R_n from raw counts; `via_doubled` is twice the
/// crossing-count expression; they must satisfy 2*direct == via_doubled.
struct RIdentityResult {
  std::int64_t direct = 0;
  std::int64_t via_doubled = 0;
  bool equal = false;
};

/// Twice the additive constant of the crossing identity, measured from the
/// state itself (normally at n = 0; never assumed).
inline std::int64_t r_identity_baseline2(const WalkState& s) {
  const std::int64_t direct = r_series_value(s, SeriesPreset::s51);
  const std::int64_t crossings = s.z_minus.at(5) - s.z_plus.at(0);
  return 2 * direct - 2 * crossings - r_position_indicator(s.position);
}

inline RIdentityResult r_identity_check(const WalkState& s,
                                        std::int64_t baseline2) {
  RIdentityResult r;
  r.direct = r_series_value(s, SeriesPreset::s51);
  r.via_doubled = 2 * (s.z_minus.at(5) - s.z_plus.at(0)) +
                  r_position_indicator(s.position) + baseline2;
  r.equal = (2 * r.direct == r.via_doubled);
  return r;
}

/// First return time: smallest m >= n with X_m == x, scanning the stored
/// path; disengaged (nullopt) if never within the horizon.
inline std::optional<std::uint64_t> hitting_time(const RunRecord& rec,
                                                 std::uint64_t n, Site x) {
  if (!rec.full_path)
    throw std::invalid_argument("hitting_time requires a full-path record");
  for (std::uint64_t m = n; m < rec.path.size(); ++m)
    if (rec.path[m] == x) return m;
  return std::nullopt;
}

/// Threshold times t_0..t_max_n of the preset's clock. t_n is the first
/// step index where the counter meets the preset condition; nullopt past
/// the horizon. Strictly increasing wherever the counter starts below the
/// level (the s52 counter starts at the initial weight of site 4, so its
/// first entries can tie at 0).
inline std::vector<std::optional<std::uint64_t>> threshold_times(
    const RunRecord& rec, SeriesPreset preset, std::uint64_t max_n) {
  if (!rec.full_path)
    throw std::invalid_argument("threshold_times requires a full-path record");
  std::vector<std::optional<std::uint64_t>> out(max_n + 1);
  WalkState s = WalkState::start(rec.v0, rec.weights);
  auto counter = [&]() -> std::int64_t {
    switch (preset) {
      case SeriesPreset::s51: return s.z_plus.at(2);
      case SeriesPreset::s52: return s.z.at(4);
      case SeriesPreset::s53: return s.z_plus.at(4);
    }
    return 0;
  };
  std::uint64_t level = 0;
  auto settle = [&](std::uint64_t step) {
    const auto c = counter();
    while (level <= max_n && static_cast<std::int64_t>(level) <= c)
      out[level++] = step;
  };
  settle(0);
  for (std::size_t m = 1; m < rec.path.size() && level <= max_n; ++m) {
    apply_step(s, rec.path[m] > rec.path[m - 1]);
    settle(static_cast<std::uint64_t>(m));
  }
  return out;
}

/// Restriction of the crossing identity to the s51 clock: at every finite
/// t_n (n >= 1) the combination R_{t_n} - Z^+_{t_n}(4) + Z^-_{t_n}(1) must
/// equal one constant, measured at the first such time.
struct RestrictedIdentityResult {
  bool ok = true;
  std::uint64_t times_checked = 0;
};

inline RestrictedIdentityResult r_identity_at_threshold_times(
    const RunRecord& rec) {
  RestrictedIdentityResult res;
  bool have_constant = false;
  std::int64_t constant = 0;
  WalkState s = WalkState::start(rec.v0, rec.weights);
  std::int64_t last_counter = s.z_plus.at(2);
  auto visit = [&]() {
    const std::int64_t value = r_series_value(s, SeriesPreset::s51) -
                               (s.z_plus.at(4) - s.z_minus.at(1));
    if (!have_constant) {
      constant = value;
      have_constant = true;
    } else if (value != constant) {
      res.ok = false;
    }
    ++res.times_checked;
  };
  for (std::size_t m = 1; m < rec.path.size(); ++m) {
    apply_step(s, rec.path[m] > rec.path[m - 1]);
    const std::int64_t c = s.z_plus.at(2);
    if (c > last_counter) visit();  // this step is t_c
    last_counter = c;
  }
  return res;
}

/// An increasing process Phi and its predictable compensator Phi*:
///   Phi_n  = sum_{k<=n} weight(state_{k-1}) * 1{event at step k}
///   Phi*_n = sum_{k<=n} weight(state_{k-1}) * prob(state_{k-1})
/// Phi - Phi* is a martingale started at 0.
struct CompensatorSpec {
  std::function<bool(const WalkState&, Site from, Site to)> event;
  std::function<double(const WalkState&)> weight;
  std::function<double(const WalkState&)> prob;
};

struct CompensatorSeries {
  std::vector<double> phi;       // Phi_m, m = 0..horizon
  std::vector<double> phi_star;  // Phi*_m
};

inline CompensatorSeries compensator_track(const CompensatorSpec& spec,
                                           const RunRecord& rec) {
  CompensatorSeries out;
  out.phi.reserve(rec.path.size());
  out.phi_star.reserve(rec.path.size());
  KahanSum phi, phi_star;
  out.phi.push_back(0);
  out.phi_star.push_back(0);
  replay(rec, [&](const WalkState& pre, Site from, Site to, std::uint64_t) {
    const double xi = spec.weight(pre);
    if (spec.event(pre, from, to)) phi.add(xi);
    phi_star.add(xi * spec.prob(pre));
    out.phi.push_back(phi.value());
    out.phi_star.push_back(phi_star.value());
  });
  return out;
}

/// Tail behaviour of a checkpointed series: the last value and the
/// sup - inf oscillation over entries with step index in
/// [tail_start_ratio * N, N] (a trailing log-decade for ratio 0.1).
struct Stabilization {
  double last = 0;
  double oscillation = 0;
  std::size_t window_points = 0;
};

inline Stabilization stabilization_report(
    std::span<const std::pair<std::uint64_t, double>> series,
    double tail_start_ratio = 0.1) {
  if (series.size() < 3)
    throw std::invalid_argument("stabilization_report needs >= 3 checkpoints");
  const double cutoff =
      tail_start_ratio * static_cast<double>(series.back().first);
  Stabilization st;
  st.last = series.back().second;
  double lo = series.back().second, hi = series.back().second;
  for (const auto& [n, v] : series) {
    if (static_cast<double>(n) + 0.5 < cutoff) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++st.window_points;
  }
  st.oscillation = hi - lo;
  return st;
}

}  // namespace vrrw
