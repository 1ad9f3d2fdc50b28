#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "vrrw/record.hpp"
#include "vrrw/stats.hpp"
#include "vrrw/walk.hpp"

namespace vrrw {

/// Evaluates the perturbation gate from a state (normally the activation
/// step). Returns gamma when the modification activates, nullopt when the
/// gate fails (alpha = 0, gamma >= 1, or alpha >= 1/(4M)), in which case the
/// modified walk never deviates from the plain one.
inline std::optional<double> gamma_gate(const WalkState& at_k, Site x,
                                        double cap_m, double g) {
  const double alpha = alpha_minus(at_k, x);
  if (alpha <= 0) return std::nullopt;
  const double gamma =
      g / std::sqrt(static_cast<double>(at_k.z.at(x)) * alpha);
  if (gamma >= 1.0) return std::nullopt;
  if (alpha >= 1.0 / (4.0 * cap_m)) return std::nullopt;
  return gamma;
}

/// First step n > k at which z(x) or alpha^-(x) strictly exceeds M times its
/// step-k value, scanning a full-path record; horizon+1 as the
/// never-triggered sentinel. Comparisons are strict against the step-k
/// values, so the result is always > k.
inline std::uint64_t stopping_u_scan(const RunRecord& rec, Site x,
                                     std::uint64_t k, double cap_m) {
  if (!rec.full_path)
    throw std::invalid_argument("stopping_u_scan requires a full-path record");
  const std::uint64_t sentinel = rec.horizon + 1;
  if (k >= rec.path.size()) return sentinel;
  std::uint64_t result = sentinel;
  std::int64_t z_ref = 0;
  double alpha_ref = 0;
  WalkState s = WalkState::start(rec.v0, rec.weights);
  auto probe = [&](std::uint64_t m) {
    if (m == k) {
      z_ref = s.z.at(x);
      alpha_ref = alpha_minus(s, x);
      return;
    }
    if (m <= k || result != sentinel) return;
    if (s.z.at(x) > cap_m * static_cast<double>(z_ref) ||
        alpha_minus(s, x) > cap_m * alpha_ref)
      result = m;
  };
  probe(0);
  for (std::size_t m = 1; m < rec.path.size(); ++m) {
    apply_step(s, rec.path[m] > rec.path[m - 1]);
    probe(static_cast<std::uint64_t>(m));
    if (result != sentinel) break;
  }
  return result;
}

struct CoupledPair {
  RunRecord base;
  RunRecord primed;
  ModifiedVrrwModel::Activation activation;  // primed walk's gate outcome
};

/// Runs the plain walk and the modified walk over the SAME uniform table,
/// from the same start. The walks agree step for step until the activation
/// window opens; afterwards each reads the table at its own
/// (visit index, site) cells.
inline CoupledPair run_coupled(const UniformTable& uniforms, Site v0,
                               const InitialWeights& weights,
                               const ModifiedWalkParams& params,
                               std::uint64_t horizon, RunOptions opt) {
  CoupledPair pair;
  VrrwModel base;
  pair.base = run_walk(base, WalkState::start(v0, weights), uniforms, horizon,
                       opt);
  ModifiedVrrwModel primed(params);
  pair.primed = run_walk(primed, WalkState::start(v0, weights), uniforms,
                         horizon, opt);
  pair.activation = primed.activation();
  return pair;
}

/// Exhaustive audit of the pathwise partial order: for every (i, j) realized
/// in both paths, the primed walk at its i-th visit to j must have visited
/// j+1 at least as often, and j-1 at most as often, as the base walk at its
/// own i-th visit to j. Cells realized in only one path hold vacuously and
/// are tallied separately.
struct MonotonicityReport {
  struct Violation {
    std::uint64_t i = 0;
    Site j = 0;
    std::int64_t base_left = 0, base_right = 0;
    std::int64_t primed_left = 0, primed_right = 0;
  };
  std::uint64_t cells_checked = 0;
  std::uint64_t vacuous = 0;
  std::vector<Violation> violations;
  bool verdict() const { return violations.empty(); }
};

namespace detail {

// For each site, the neighbour counts (z(j-1), z(j+1)) observed at the i-th
// visit, i = 1, 2, ... in visit order.
inline std::map<Site, std::vector<std::pair<std::int64_t, std::int64_t>>>
visit_neighbour_counts(const RunRecord& rec) {
  if (!rec.full_path)
    throw std::invalid_argument("partial-order audit requires full paths");
  std::map<Site, std::vector<std::pair<std::int64_t, std::int64_t>>> table;
  WalkState s = WalkState::start(rec.v0, rec.weights);
  auto note = [&]() {
    table[s.position].emplace_back(s.z.at(s.position - 1),
                                   s.z.at(s.position + 1));
  };
  note();
  for (std::size_t m = 1; m < rec.path.size(); ++m) {
    apply_step(s, rec.path[m] > rec.path[m - 1]);
    note();
  }
  return table;
}

}  // namespace detail

inline MonotonicityReport verify_partial_order(const RunRecord& base,
                                               const RunRecord& primed) {
  const auto tb = detail::visit_neighbour_counts(base);
  const auto tp = detail::visit_neighbour_counts(primed);
  MonotonicityReport rep;
  using VisitVec = std::vector<std::pair<std::int64_t, std::int64_t>>;
  auto account = [&](Site j, const VisitVec* vb, const VisitVec* vp) {
    const std::size_t nb = vb ? vb->size() : 0;
    const std::size_t np = vp ? vp->size() : 0;
    const std::size_t both = std::min(nb, np);
    rep.vacuous += static_cast<std::uint64_t>(std::max(nb, np) - both);
    for (std::size_t i = 0; i < both; ++i) {
      ++rep.cells_checked;
      const auto& [bl, br] = (*vb)[i];
      const auto& [pl, pr] = (*vp)[i];
      if (pr < br || pl > bl)
        rep.violations.push_back({static_cast<std::uint64_t>(i + 1), j, bl, br,
                                  pl, pr});
    }
  };
  auto itb = tb.begin();
  auto itp = tp.begin();
  while (itb != tb.end() || itp != tp.end()) {
    if (itp == tp.end() || (itb != tb.end() && itb->first < itp->first)) {
      account(itb->first, &itb->second, nullptr);
      ++itb;
    } else if (itb == tb.end() || itp->first < itb->first) {
      account(itp->first, nullptr, &itp->second);
      ++itp;
    } else {
      account(itb->first, &itb->second, &itp->second);
      ++itb;
      ++itp;
    }
  }
  return rep;
}

/// One entry of the unstable-quantity diagnostics: at clock level n, the
/// threshold time t_n together with the preset's (z_n, y_n) pair. Levels
/// whose clock never rings within the horizon carry (0, 0).
struct DiagnosticPoint {
  std::uint64_t n = 0;
  std::optional<std::uint64_t> t;
  double z = 0;
  double y = 0;
};

inline std::vector<DiagnosticPoint> diagnostic_series(const RunRecord& rec,
                                                      SeriesPreset preset,
                                                      std::uint64_t max_n) {
  const auto times = threshold_times(rec, preset, max_n);
  std::vector<DiagnosticPoint> out(max_n + 1);
  for (std::uint64_t n = 0; n <= max_n; ++n) {
    out[n].n = n;
    out[n].t = times[n];
  }
  // Single replay; evaluate counts whenever a threshold time passes.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> due;  // (t, n)
  for (std::uint64_t n = 0; n <= max_n; ++n)
    if (times[n]) due.emplace_back(*times[n], n);
  std::sort(due.begin(), due.end());
  std::size_t idx = 0;
  WalkState s = WalkState::start(rec.v0, rec.weights);
  auto evaluate = [&](std::uint64_t m) {
    for (; idx < due.size() && due[idx].first == m; ++idx) {
      const std::uint64_t n = due[idx].second;
      const double r = static_cast<double>(r_series_value(s, preset));
      switch (preset) {
        case SeriesPreset::s51: {
          const double z2 = static_cast<double>(s.z.at(2));
          const double z3 = static_cast<double>(s.z.at(3));
          out[n].z = std::log(z3 / z2);
          out[n].y = r / (z2 * z3);
          break;
        }
        case SeriesPreset::s52: {
          const double z2 = static_cast<double>(s.z.at(2));
          const double z6 = static_cast<double>(s.z.at(6));
          const double z3 = static_cast<double>(s.z.at(3));
          const double z5 = static_cast<double>(s.z.at(5));
          out[n].z = std::log(z6 / z2);
          out[n].y = n == 0 ? 0.0
                            : r / (static_cast<double>(n) * (z3 + z5));
          break;
        }
        case SeriesPreset::s53: {
          const double z2 = static_cast<double>(s.z.at(2));
          const double z7 = static_cast<double>(s.z.at(7));
          const double z4 = static_cast<double>(s.z.at(4));
          const double z5 = static_cast<double>(s.z.at(5));
          out[n].z = std::log(z7 / z2);
          out[n].y = r / (z4 * z5);
          break;
        }
      }
    }
  };
  evaluate(0);
  for (std::size_t m = 1; m < rec.path.size(); ++m) {
    apply_step(s, rec.path[m] > rec.path[m - 1]);
    evaluate(static_cast<std::uint64_t>(m));
  }
  return out;
}

}  // namespace vrrw
