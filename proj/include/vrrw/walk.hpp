#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "vrrw/sites.hpp"
#include "vrrw/uniforms.hpp"

namespace vrrw {

inline constexpr std::uint64_t kNoStep = std::numeric_limits<std::uint64_t>::max();

/// Full state of one walk after n steps. Counts use the "number of visits
/// plus initial weight" convention, so z(x) >= 1 everywhere by default and
/// sum_x (z(x) - weight(x)) == n + 1.
struct WalkState {
  Site position = 0;
  Site v0 = 0;
  std::uint64_t n = 0;  // steps taken so far; time index of `position`
  SiteCounts z;         // occupation counts
  SiteCounts z_plus;    // departures x -> x+1 through time n
  SiteCounts z_minus;   // departures x -> x-1 through time n

  static WalkState start(Site v0, const InitialWeights& w = {}) {
    WalkState s;
    s.position = v0;
    s.v0 = v0;
    s.z = SiteCounts(w);
    s.z_plus = SiteCounts(InitialWeights{0, {}});
    s.z_minus = SiteCounts(InitialWeights{0, {}});
    s.z.add(v0, 1);  // the time-0 visit
    return s;
  }
};

/// P(step right) under the reinforced law: z(x+1) / (z(x-1) + z(x+1)).
inline double vrrw_transition_prob(const WalkState& s) {
  const double zl = static_cast<double>(s.z.at(s.position - 1));
  const double zr = static_cast<double>(s.z.at(s.position + 1));
  return zr / (zl + zr);
}

/// Probability that the next move from `x` goes to x-1, i.e. the left
/// neighbour-count ratio of the current state.
inline double alpha_minus(const WalkState& s, Site x) {
  const double zl = static_cast<double>(s.z.at(x - 1));
  const double zr = static_cast<double>(s.z.at(x + 1));
  return zl / (zl + zr);
}

/// Row index into the uniform table for the pending departure: z(position)-1.
/// With unit weights this equals the number of visits made to the current
/// site so far, and is always >= 1.
inline std::uint64_t visit_index(const WalkState& s) {
  return static_cast<std::uint64_t>(s.z.at(s.position) - 1);
}

/// The shared-uniform decision: right iff omega <= q. The boundary goes
/// right so that q == 1 always steps right against omega in [0,1).
inline bool steps_right(double q, double omega) { return omega <= q; }

/// Advances the state by one move in the given direction, maintaining the
/// departure counters.
inline void apply_step(WalkState& s, bool right) {
  (right ? s.z_plus : s.z_minus).add(s.position, 1);
  s.position += right ? 1 : -1;
  s.z.add(s.position, 1);
  ++s.n;
}

/// Plain vertex-reinforced walk.
struct VrrwModel {
  double right_prob(const WalkState& s) const { return vrrw_transition_prob(s); }
};

/// Activation window for the modified walk: either a fixed step interval
/// [k, v] or threshold-time values t_k, t_v of the rightward-departure
/// counter at site 2 (the s51 clock).
struct WindowSpec {
  enum class Kind { step, threshold_s51 };
  Kind kind = Kind::step;
  std::uint64_t k = 0;
  std::uint64_t v = 0;

  static WindowSpec steps(std::uint64_t k, std::uint64_t v) {
    return WindowSpec{Kind::step, k, v};
  }
  static WindowSpec threshold_s51(std::uint64_t k, std::uint64_t v) {
    return WindowSpec{Kind::threshold_s51, k, v};
  }
};

struct ModifiedWalkParams {
  Site x = 2;        // perturbed site
  double cap_m = 4;  // M > 1, the count/ratio escape box factor
  double g = 1;      // perturbation scale
  WindowSpec window;
};

/// Walk with the leftward probability at one site damped by (1 - gamma)
/// inside an activation window. gamma is frozen once, from the state at the
/// activation step, and the modification is gated off unless gamma < 1 and
/// alpha^-(x) < 1/(4M) there. The window closes at the first step where the
/// count or ratio at x exceeds M times its activation value (checked with
/// strict inequalities, so the closing step itself is still modified).
class ModifiedVrrwModel {
 public:
  explicit ModifiedVrrwModel(ModifiedWalkParams p) : p_(p) {}

  struct Activation {
    bool decided = false;
    bool gate = false;       // modification actually active once decided
    double gamma = 0;
    std::uint64_t activation_step = kNoStep;
    std::int64_t z_ref = 0;  // z(x) at activation
    double alpha_ref = 0;    // alpha^-(x) at activation
    std::uint64_t u_step = kNoStep;  // first step escaping the box
    std::uint64_t v_step = kNoStep;  // window cap as a realized step index
  };

  double right_prob(const WalkState& s) {
    observe(s);
    const double am = alpha_minus(s, s.position);
    double factor = 1.0;
    if (a_.decided && a_.gate && s.position == p_.x && in_window(s.n))
      factor = 1.0 - a_.gamma;
    return 1.0 - am * factor;
  }

  const Activation& activation() const { return a_; }
  const ModifiedWalkParams& params() const { return p_; }

 private:
  bool window_opens(const WalkState& s) const {
    switch (p_.window.kind) {
      case WindowSpec::Kind::step:
        return s.n >= p_.window.k;
      case WindowSpec::Kind::threshold_s51:
        return static_cast<std::uint64_t>(s.z_plus.at(2)) >= p_.window.k;
    }
    return false;
  }

  bool window_caps(const WalkState& s) const {
    switch (p_.window.kind) {
      case WindowSpec::Kind::step:
        return s.n >= p_.window.v;
      case WindowSpec::Kind::threshold_s51:
        return static_cast<std::uint64_t>(s.z_plus.at(2)) >= p_.window.v;
    }
    return false;
  }

  void observe(const WalkState& s) {
    if (!a_.decided) {
      if (!window_opens(s)) return;
      a_.decided = true;
      a_.activation_step = s.n;
      a_.z_ref = s.z.at(p_.x);
      a_.alpha_ref = alpha_minus(s, p_.x);
      if (a_.alpha_ref > 0) {
        const double gamma =
            p_.g / std::sqrt(static_cast<double>(a_.z_ref) * a_.alpha_ref);
        if (gamma < 1.0 && a_.alpha_ref < 1.0 / (4.0 * p_.cap_m)) {
          a_.gate = true;
          a_.gamma = gamma;
        }
      }
      return;
    }
    if (!a_.gate) return;
    if (a_.v_step == kNoStep && s.n > a_.activation_step && window_caps(s))
      a_.v_step = s.n;
    if (a_.u_step == kNoStep && s.n > a_.activation_step) {
      const bool escaped =
          s.z.at(p_.x) > p_.cap_m * static_cast<double>(a_.z_ref) ||
          alpha_minus(s, p_.x) > p_.cap_m * a_.alpha_ref;
      if (escaped) a_.u_step = s.n;
    }
  }

  bool in_window(std::uint64_t n) const {
    if (n < a_.activation_step) return false;
    if (a_.u_step != kNoStep && n > a_.u_step) return false;
    if (a_.v_step != kNoStep && n > a_.v_step) return false;
    if (p_.window.kind == WindowSpec::Kind::step && n > p_.window.v)
      return false;
    return true;
  }

  ModifiedWalkParams p_;
  Activation a_;
};

/// Negative control for the dominance audit: biases the walk LEFT at one
/// site inside a fixed window, deliberately breaking the hypothesis that the
/// primed walk is more right-leaning. Not part of the reinforced family.
struct LeftBiasedControlModel {
  Site x = 2;
  double gamma = 0.5;
  std::uint64_t k = 0;
  std::uint64_t v = kNoStep;

  double right_prob(const WalkState& s) const {
    const double am = alpha_minus(s, s.position);
    if (s.position == x && s.n >= k && s.n <= v) {
      const double left = std::min(1.0, am * (1.0 + gamma));
      return 1.0 - left;
    }
    return 1.0 - am;
  }
};

/// One step of the shared-uniform construction: reads cell
/// (visit_index, position) of the table and moves right iff omega <= q.
template <class Model>
inline bool step(WalkState& s, Model& model, const UniformTable& uniforms) {
  const double q = model.right_prob(s);
  const double omega = uniforms.at(visit_index(s), s.position);
  const bool right = steps_right(q, omega);
  apply_step(s, right);
  return right;
}

/// Checks the structural count invariants; throws on violation. Used by
/// tests and checkpoint assertions, not in the hot loop.
inline void check_invariants(const WalkState& s) {
  if (s.z.excess() != static_cast<std::int64_t>(s.n) + 1)
    throw std::logic_error("occupation counts do not sum to n+1");
  Site lo = s.z.empty() ? s.v0 : s.z.lo();
  Site hi = s.z.empty() ? s.v0 : s.z.hi();
  for (Site x = lo; x <= hi; ++x) {
    const std::int64_t visits = s.z.at(x) - s.z.weights().at(x);
    const std::int64_t departures = s.z_plus.at(x) + s.z_minus.at(x);
    const std::int64_t here = (s.position == x) ? 1 : 0;
    if (departures != visits - here)
      throw std::logic_error("departure bookkeeping broken");
    if (visits < 0) throw std::logic_error("negative visit count");
  }
}

}  // namespace vrrw
