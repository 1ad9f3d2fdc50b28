#pragma once

#include <cmath>

#include "vrrw/sites.hpp"
#include "vrrw/walk.hpp"

namespace vrrw {

/// Neumaier-compensated accumulator. The weighted visit sums mix increments
/// spanning many orders of magnitude near a trap, and downstream checks
/// compare them to logarithms at 1e-2 tolerances.
struct KahanSum {
  double sum = 0;
  double comp = 0;

  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }
};

/// Plain per-site readout of the ledger.
struct LedgerValues {
  double y = 0;
  double y_plus = 0;
  double y_minus = 0;
  double y_tilde_plus = 0;
  double y_tilde_minus = 0;
  double y_bar_plus = 0;
  double y_bar_minus = 0;
};

/// Incremental ledger of the weighted visit functionals. A step u -> v at
/// time k updates, with Z the counts before the move:
///   Y(u)        += 1 / (Z(u-1) + Z(u+1))
///   Y+(u)       += 1 / Z(u+1)          (right step; Y- symmetric)
///   Ytilde-+(v) += 1 / Z(u)            (sign by arrival direction)
///   Ybar+-(v)   += alpha_k^+-(v) / Z_k(v)   with the post-step counts Z_k.
/// Each sum is nondecreasing and only sites u and v are touched.
class FunctionalLedger {
 public:
  struct Cell {
    KahanSum y, y_plus, y_minus, y_tilde_plus, y_tilde_minus, y_bar_plus,
        y_bar_minus;
  };

  /// Record one transition. `before` must be the state prior to the move;
  /// `right` the direction taken.
  void on_step(const WalkState& before, bool right) {
    const Site u = before.position;
    const Site v = right ? u + 1 : u - 1;
    const double zu = static_cast<double>(before.z.at(u));
    const double zul = static_cast<double>(before.z.at(u - 1));
    const double zur = static_cast<double>(before.z.at(u + 1));

    Cell& cu = cells_.slot(u);
    cu.y.add(1.0 / (zul + zur));
    if (right)
      cu.y_plus.add(1.0 / zur);
    else
      cu.y_minus.add(1.0 / zul);

    Cell& cv = cells_.slot(v);
    if (right)
      cv.y_tilde_minus.add(1.0 / zu);  // arrival from v-1
    else
      cv.y_tilde_plus.add(1.0 / zu);  // arrival from v+1

    // Post-step counts: only z(v) changes, neighbours keep their values.
    const double zv_post = static_cast<double>(before.z.at(v)) + 1.0;
    const double zvl = static_cast<double>(before.z.at(v - 1));
    const double zvr = static_cast<double>(before.z.at(v + 1));
    cv.y_bar_plus.add(zvr / (zvl + zvr) / zv_post);
    cv.y_bar_minus.add(zvl / (zvl + zvr) / zv_post);
  }

  LedgerValues at(Site s) const {
    const Cell& c = cells_.at(s);
    return LedgerValues{c.y.value(),
                        c.y_plus.value(),
                        c.y_minus.value(),
                        c.y_tilde_plus.value(),
                        c.y_tilde_minus.value(),
                        c.y_bar_plus.value(),
                        c.y_bar_minus.value()};
  }

  bool empty() const { return cells_.empty(); }
  Site lo() const { return cells_.lo(); }
  Site hi() const { return cells_.hi(); }

  template <class F>
  void for_each_touched(F&& f) const {
    cells_.for_each([&](Site s, const Cell& c) {
      f(s, LedgerValues{c.y.value(), c.y_plus.value(), c.y_minus.value(),
                        c.y_tilde_plus.value(), c.y_tilde_minus.value(),
                        c.y_bar_plus.value(), c.y_bar_minus.value()});
    });
  }

 private:
  SiteArray<Cell> cells_;
};

/// alpha_n^+-(x) and beta_n^+-(x) computed on demand from counts.
struct NeighbourRatios {
  double alpha_plus, alpha_minus, beta_plus, beta_minus;
};

inline NeighbourRatios neighbour_ratios(const WalkState& s, Site x) {
  const double zl = static_cast<double>(s.z.at(x - 1));
  const double zr = static_cast<double>(s.z.at(x + 1));
  const double zx = static_cast<double>(s.z.at(x));
  return NeighbourRatios{zr / (zl + zr), zl / (zl + zr), zr / zx, zl / zx};
}

}  // namespace vrrw
