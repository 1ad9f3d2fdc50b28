#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vrrw/record.hpp"

namespace vrrw {

/// Step index where the trailing window of fraction f ending at `end` opens.
inline std::uint64_t window_start_step(std::uint64_t end, double fraction) {
  return static_cast<std::uint64_t>(
      std::llround((1.0 - fraction) * static_cast<double>(end)));
}

/// Finite-horizon stand-in for the set of infinitely visited sites: the
/// sites whose count grew during the trailing window. Needs snapshots at
/// both window ends.
inline std::vector<Site> tail_range(const RunRecord& rec, std::uint64_t end,
                                    double window_fraction) {
  if (end > rec.horizon)
    throw std::invalid_argument("window extends past the horizon");
  const std::uint64_t start = window_start_step(end, window_fraction);
  const Snapshot* s0 = rec.snapshot_at(start);
  const Snapshot* s1 = rec.snapshot_at(end);
  if (!s0 || !s1)
    throw std::invalid_argument("window endpoints are not checkpointed");
  std::vector<Site> grew;
  for (const auto& [site, count] : s1->z)
    if (count > s0->count(site, rec.weights)) grew.push_back(site);
  return grew;  // snapshot sites are sorted already
}

/// Localization verdict for one trailing window.
struct TrapReport {
  bool localized = false;
  Site center = 0;          // middle of the 5-site trap when localized,
                            // else leftmost argmax of the tail counts
  bool center_mismatch = false;  // middle-of-5 disagreed with argmax
  std::uint64_t range_size = 0;  // tail range cardinality
  std::uint64_t window_start = 0;
  std::uint64_t window_end = 0;
};

inline TrapReport detect_trap(const RunRecord& rec, double window_fraction,
                              std::uint64_t end) {
  const auto range = tail_range(rec, end, window_fraction);
  TrapReport rep;
  rep.window_start = window_start_step(end, window_fraction);
  rep.window_end = end;
  rep.range_size = range.size();
  if (range.empty()) return rep;

  const Snapshot* snap = rec.snapshot_at(end);
  Site argmax = range.front();
  std::int64_t best = snap->count(argmax, rec.weights);
  for (Site s : range) {
    const std::int64_t c = snap->count(s, rec.weights);
    if (c > best) {
      best = c;
      argmax = s;  // leftmost tie-break: strict improvement only
    }
  }
  const bool five_consecutive =
      range.size() == 5 && range.back() - range.front() == 4;
  if (five_consecutive) {
    rep.localized = true;
    rep.center = range.front() + 2;
    rep.center_mismatch = (rep.center != argmax);
  } else {
    rep.center = argmax;
  }
  return rep;
}

inline TrapReport detect_trap(const RunRecord& rec,
                              double window_fraction = 0.1) {
  return detect_trap(rec, window_fraction, rec.horizon);
}

/// The limit-law functionals of a localized run, evaluated at one
/// checkpoint around trap center k. alpha_hat_final (the final checkpoint's
/// alpha estimate) pins the exponent for the C estimates, so their
/// stabilization across checkpoints is informative rather than circular.
struct EventEstimates {
  std::uint64_t n = 0;
  double center_density = 0;         // Z_n(k) / n
  double neighbor_density_sum = 0;   // (Z_n(k-1) + Z_n(k+1)) / n
  double alpha_left = 0;             // ln Z_n(k-2) / ln n
  double alpha_right_complement = 0; // 1 - ln Z_n(k+2) / ln n
  double c1_hat = 0;                 // Z_n(k-2) / n^alpha_hat_final
  double c2_hat = 0;                 // Z_n(k+2) / n^(1-alpha_hat_final)
  bool boundary_missing = false;     // k-2 or k+2 never visited
};

inline std::vector<EventEstimates> event_estimates(const RunRecord& rec,
                                                   Site k) {
  std::vector<EventEstimates> out;
  const Snapshot& last = rec.final_snapshot();
  const double n_final = static_cast<double>(last.n);
  const double alpha_final =
      n_final > 1
          ? std::log(static_cast<double>(last.count(k - 2, rec.weights))) /
                std::log(n_final)
          : 0.0;
  for (const Snapshot& snap : rec.snapshots) {
    if (snap.n < 2) continue;
    EventEstimates e;
    e.n = snap.n;
    const double n = static_cast<double>(snap.n);
    const double zk = static_cast<double>(snap.count(k, rec.weights));
    const double zl = static_cast<double>(snap.count(k - 1, rec.weights));
    const double zr = static_cast<double>(snap.count(k + 1, rec.weights));
    const double zll = static_cast<double>(snap.count(k - 2, rec.weights));
    const double zrr = static_cast<double>(snap.count(k + 2, rec.weights));
    e.center_density = zk / n;
    e.neighbor_density_sum = (zl + zr) / n;
    e.alpha_left = std::log(zll) / std::log(n);
    e.alpha_right_complement = 1.0 - std::log(zrr) / std::log(n);
    e.c1_hat = zll / std::pow(n, alpha_final);
    e.c2_hat = zrr / std::pow(n, 1.0 - alpha_final);
    e.boundary_missing = (zll <= static_cast<double>(rec.weights.at(k - 2)) ||
                          zrr <= static_cast<double>(rec.weights.at(k + 2)));
    out.push_back(e);
  }
  return out;
}

/// Tail increment Y_{n2}(x) - Y_{n1}(x) between the final checkpoint and the
/// latest checkpoint with n1 <= n2/2. Small values flag x as a candidate
/// for the seldom-departed event; the thresholds live in the harness config.
inline double upsilon_tail(const RunRecord& rec, Site x) {
  const Snapshot& s2 = rec.final_snapshot();
  const Snapshot* s1 = rec.snapshot_at_most(s2.n / 2);
  if (!s1 || s1->n == s2.n)
    throw std::invalid_argument("upsilon_tail needs a checkpoint at or below n/2");
  const auto l1 = s1->ledger_at(x);
  const auto l2 = s2.ledger_at(x);
  const double y1 = l1 ? l1->y : 0.0;
  const double y2 = l2 ? l2->y : 0.0;
  return y2 - y1;
}

/// Per-replicate digest consumed by the aggregator.
struct CheckpointReport {
  std::uint64_t n = 0;
  bool window_ok = false;
  TrapReport trap;
  EventEstimates est;
};

struct ReplicateReport {
  std::uint64_t replicate = 0;
  std::vector<CheckpointReport> checkpoints;
};

/// Cross-replicate summary; computed from the reports alone.
struct MonteCarloSummary {
  struct PerCheckpoint {
    std::uint64_t n = 0;
    std::uint64_t evaluated = 0;
    std::uint64_t localized = 0;
    double localized_fraction = 0;
    // Conditional on localization:
    double mean_center_density = 0, sd_center_density = 0;
    double mean_neighbor_density_sum = 0, sd_neighbor_density_sum = 0;
    double mean_alpha_left = 0, sd_alpha_left = 0;
    double mean_alpha_gap = 0;  // |alpha_left - alpha_right_complement|
  };
  std::vector<PerCheckpoint> checkpoints;
  std::vector<std::uint64_t> alpha_histogram;  // 20 bins over [0,1], final n
  double alpha_min = 0, alpha_max = 0;
  std::uint64_t replicates = 0;
};

inline MonteCarloSummary aggregate(const std::vector<ReplicateReport>& reports) {
  if (reports.empty())
    throw std::invalid_argument("aggregate needs at least one report");
  MonteCarloSummary out;
  out.replicates = reports.size();
  std::map<std::uint64_t, std::vector<const CheckpointReport*>> by_n;
  for (const auto& rep : reports)
    for (const auto& cp : rep.checkpoints)
      if (cp.window_ok) by_n[cp.n].push_back(&cp);

  for (const auto& [n, cps] : by_n) {
    MonteCarloSummary::PerCheckpoint pc;
    pc.n = n;
    pc.evaluated = cps.size();
    auto accumulate = [](std::vector<double>& v, double& mean, double& sd) {
      if (v.empty()) return;
      double m = 0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double var = 0;
      for (double x : v) var += (x - m) * (x - m);
      sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1))
                        : 0.0;
      mean = m;
    };
    std::vector<double> cd, nd, al, gap;
    for (const auto* cp : cps) {
      if (!cp->trap.localized) continue;
      ++pc.localized;
      cd.push_back(cp->est.center_density);
      nd.push_back(cp->est.neighbor_density_sum);
      al.push_back(cp->est.alpha_left);
      gap.push_back(std::abs(cp->est.alpha_left - cp->est.alpha_right_complement));
    }
    pc.localized_fraction =
        static_cast<double>(pc.localized) / static_cast<double>(pc.evaluated);
    accumulate(cd, pc.mean_center_density, pc.sd_center_density);
    accumulate(nd, pc.mean_neighbor_density_sum, pc.sd_neighbor_density_sum);
    accumulate(al, pc.mean_alpha_left, pc.sd_alpha_left);
    double sd_unused = 0;
    accumulate(gap, pc.mean_alpha_gap, sd_unused);
    out.checkpoints.push_back(pc);
  }

  // Alpha histogram over the final checkpoint's localized replicates.
  out.alpha_histogram.assign(20, 0);
  bool first = true;
  if (!out.checkpoints.empty()) {
    const std::uint64_t n_final = out.checkpoints.back().n;
    for (const auto* cp : by_n[n_final]) {
      if (!cp->trap.localized) continue;
      const double a = std::clamp(cp->est.alpha_left, 0.0, 1.0);
      const auto bin = std::min<std::size_t>(
          19, static_cast<std::size_t>(a * 20.0));
      ++out.alpha_histogram[bin];
      if (first || a < out.alpha_min) out.alpha_min = a;
      if (first || a > out.alpha_max) out.alpha_max = a;
      first = false;
    }
  }
  return out;
}

}  // namespace vrrw
