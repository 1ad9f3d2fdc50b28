#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vrrw/ledger.hpp"
#include "vrrw/walk.hpp"

namespace vrrw {

/// State digest taken after `n` steps.
struct Snapshot {
  std::uint64_t n = 0;
  Site position = 0;
  std::vector<std::pair<Site, std::int64_t>> z;        // count != weight only
  std::vector<std::pair<Site, std::int64_t>> z_plus;   // nonzero only
  std::vector<std::pair<Site, std::int64_t>> z_minus;  // nonzero only
  std::vector<std::pair<Site, LedgerValues>> ledger;   // when tracked

  std::int64_t count(Site s, const InitialWeights& w) const {
    for (const auto& [site, c] : z)
      if (site == s) return c;
    return w.at(s);
  }
  std::int64_t departures_right(Site s) const { return lookup(z_plus, s); }
  std::int64_t departures_left(Site s) const { return lookup(z_minus, s); }

  std::optional<LedgerValues> ledger_at(Site s) const {
    for (const auto& [site, v] : ledger)
      if (site == s) return v;
    return std::nullopt;
  }

 private:
  static std::int64_t lookup(const std::vector<std::pair<Site, std::int64_t>>& m,
                             Site s) {
    for (const auto& [site, c] : m)
      if (site == s) return c;
    return 0;
  }
};

/// Everything one simulation produced: config echo, checkpoint snapshots and
/// (opt-in) the full position log. Immutable once returned.
struct RunRecord {
  Site v0 = 0;
  InitialWeights weights;
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  std::string model = "vrrw";
  std::vector<Snapshot> snapshots;
  bool full_path = false;
  std::vector<Site> path;  // positions X_0..X_horizon when full_path

  const Snapshot& final_snapshot() const {
    if (snapshots.empty()) throw std::logic_error("record has no snapshots");
    return snapshots.back();
  }

  const Snapshot* snapshot_at(std::uint64_t n) const {
    for (const auto& s : snapshots)
      if (s.n == n) return &s;
    return nullptr;
  }

  /// Latest snapshot with step index <= n, if any.
  const Snapshot* snapshot_at_most(std::uint64_t n) const {
    const Snapshot* best = nullptr;
    for (const auto& s : snapshots)
      if (s.n <= n && (!best || s.n > best->n)) best = &s;
    return best;
  }
};

struct RunOptions {
  std::vector<std::uint64_t> schedule;  // sorted, unique, within [0, horizon]
  bool full_path = false;
  bool track_ledger = true;
};

/// Checkpoint steps 1, base, base^2, ... capped at and completed with the
/// horizon. The limit laws live on a log scale, hence geometric spacing.
inline std::vector<std::uint64_t> geometric_schedule(std::uint64_t horizon,
                                                     std::uint64_t base = 10) {
  std::vector<std::uint64_t> out;
  if (horizon == 0) return {0};
  for (std::uint64_t s = 1; s < horizon; s *= base) {
    out.push_back(s);
    if (s > horizon / base) break;
  }
  out.push_back(horizon);
  return out;
}

/// Adds the window-start step round((1-f)*s) for every scheduled step, so
/// trailing-window quantities are computable at each checkpoint.
inline std::vector<std::uint64_t> with_window_starts(
    std::vector<std::uint64_t> schedule, double window_fraction) {
  std::vector<std::uint64_t> out = schedule;
  for (std::uint64_t s : schedule) {
    const auto start = static_cast<std::uint64_t>(
        std::llround((1.0 - window_fraction) * static_cast<double>(s)));
    out.push_back(start);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline Snapshot take_snapshot(const WalkState& s, const FunctionalLedger* led) {
  Snapshot snap;
  snap.n = s.n;
  snap.position = s.position;
  snap.z = s.z.nontrivial();
  snap.z_plus = s.z_plus.nontrivial();
  snap.z_minus = s.z_minus.nontrivial();
  if (led) {
    led->for_each_touched([&](Site site, const LedgerValues& v) {
      snap.ledger.emplace_back(site, v);
    });
  }
  return snap;
}

/// Runs `horizon` steps from `init`, recording snapshots at the scheduled
/// indices. Pure function of (model, init, uniforms, options): rerunning
/// with the same inputs reproduces the record bit for bit.
template <class Model>
RunRecord run_walk(Model& model, WalkState init, const UniformTable& uniforms,
                   std::uint64_t horizon, const RunOptions& opt) {
  for (std::size_t i = 1; i < opt.schedule.size(); ++i)
    if (opt.schedule[i] <= opt.schedule[i - 1])
      throw std::invalid_argument("checkpoint schedule must be increasing");
  if (!opt.schedule.empty() && opt.schedule.back() > horizon)
    throw std::invalid_argument("checkpoint beyond horizon");

  RunRecord rec;
  rec.v0 = init.v0;
  rec.weights = init.z.weights();
  rec.seed = uniforms.master_seed;
  rec.horizon = horizon;
  rec.full_path = opt.full_path;

  FunctionalLedger ledger;
  FunctionalLedger* led = opt.track_ledger ? &ledger : nullptr;

  WalkState s = std::move(init);
  if (opt.full_path) {
    rec.path.reserve(horizon + 1);
    rec.path.push_back(s.position);
  }
  std::size_t next = 0;
  if (next < opt.schedule.size() && opt.schedule[next] == 0) {
    rec.snapshots.push_back(take_snapshot(s, led));
    ++next;
  }
  for (std::uint64_t m = 1; m <= horizon; ++m) {
    const double q = model.right_prob(s);
    const double omega = uniforms.at(visit_index(s), s.position);
    const bool right = steps_right(q, omega);
    if (led) led->on_step(s, right);
    apply_step(s, right);
    if (opt.full_path) rec.path.push_back(s.position);
    if (next < opt.schedule.size() && opt.schedule[next] == m) {
      rec.snapshots.push_back(take_snapshot(s, led));
      ++next;
    }
  }
  return rec;
}

/// Rebuilds the state sequence of a full-path record, calling
/// f(state_before, from, to, step_index) for each step. The callback sees
/// the exact pre-step state the engine saw.
template <class F>
void replay(const RunRecord& rec, F&& f) {
  if (!rec.full_path)
    throw std::invalid_argument("replay requires a full-path record");
  WalkState s = WalkState::start(rec.v0, rec.weights);
  for (std::size_t m = 1; m < rec.path.size(); ++m) {
    const Site from = rec.path[m - 1];
    const Site to = rec.path[m];
    f(const_cast<const WalkState&>(s), from, to, static_cast<std::uint64_t>(m));
    apply_step(s, to > from);
  }
}

}  // namespace vrrw
