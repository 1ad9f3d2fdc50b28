#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vrrw/ledger.hpp"
#include "vrrw/record.hpp"
#include "vrrw/walk.hpp"

#include "test_support.hpp"

using namespace vrrw;

TEST_CASE("first step from a fresh start") {
  auto s = WalkState::start(0);
  FunctionalLedger led;
  led.on_step(s, true);  // 0 -> 1
  const auto v0 = led.at(0);
  REQUIRE(v0.y == 0.5);       // 1 / (Z(-1) + Z(1)) = 1/2
  REQUIRE(v0.y_plus == 1.0);  // 1 / Z(1) = 1
  REQUIRE(v0.y_minus == 0.0);
  const auto v1 = led.at(1);
  REQUIRE(v1.y_tilde_minus == 0.5);  // arrival from 0: 1 / Z(0) = 1/2
  // Arrival bars with post-step counts: Z_1(1) = 2, alpha_1^+(1) = 1/3.
  REQUIRE(v1.y_bar_plus == Catch::Approx(1.0 / 6.0).margin(1e-15));
  REQUIRE(v1.y_bar_minus == Catch::Approx(1.0 / 3.0).margin(1e-15));
}

TEST_CASE("a distant step leaves unrelated sums unchanged") {
  InitialWeights w;
  auto s = WalkState::start(5, w);
  FunctionalLedger led;
  led.on_step(s, false);  // 5 -> 4
  REQUIRE(led.at(0).y_plus == 0.0);
  REQUIRE(led.at(0).y == 0.0);
  REQUIRE(led.at(5).y_minus == 0.5);
}

TEST_CASE("increment locality") {
  UniformTable t{5};
  VrrwModel m;
  auto s = WalkState::start(0);
  FunctionalLedger led;
  for (int i = 0; i < 300; ++i) {
    std::vector<std::pair<Site, LedgerValues>> before;
    led.for_each_touched(
        [&](Site site, const LedgerValues& v) { before.emplace_back(site, v); });
    const Site from = s.position;
    const double q = m.right_prob(s);
    const bool right = steps_right(q, t.at(visit_index(s), s.position));
    led.on_step(s, right);
    apply_step(s, right);
    const Site to = s.position;
    led.for_each_touched([&](Site site, const LedgerValues& v) {
      if (site == from || site == to) return;
      for (const auto& [bs, bv] : before) {
        if (bs != site) continue;
        REQUIRE(bv.y == v.y);
        REQUIRE(bv.y_plus == v.y_plus);
        REQUIRE(bv.y_minus == v.y_minus);
        REQUIRE(bv.y_tilde_plus == v.y_tilde_plus);
        REQUIRE(bv.y_tilde_minus == v.y_tilde_minus);
        REQUIRE(bv.y_bar_plus == v.y_bar_plus);
        REQUIRE(bv.y_bar_minus == v.y_bar_minus);
      }
    });
  }
}

TEST_CASE("log-count harmonic identities") {
  // Every arrival at x contributes 1/Z_pre(x) to Y+(x-1) + Y-(x+1), so the
  // sum telescopes to a harmonic difference: an exact, path-independent
  // oracle for the directed bookkeeping.
  UniformTable t{99};
  VrrwModel m;
  auto s = WalkState::start(0);
  FunctionalLedger led;
  for (int i = 0; i < 50000; ++i) {
    const double q = m.right_prob(s);
    const bool right = steps_right(q, t.at(visit_index(s), s.position));
    led.on_step(s, right);
    apply_step(s, right);
  }
  for (Site x = s.z.lo(); x <= s.z.hi(); ++x) {
    const std::int64_t z = s.z.at(x);
    const std::int64_t w0 = (x == s.v0) ? 2 : 1;  // count before first arrival
    const double expected = testing::harmonic_between(w0 - 1, z - 1);
    const double got = led.at(x - 1).y_plus + led.at(x + 1).y_minus;
    REQUIRE(got == Catch::Approx(expected).margin(1e-10));
    // Same telescoping for the arrival bars, shifted by one:
    const double expected_bar = testing::harmonic_between(w0, z);
    const double got_bar = led.at(x).y_bar_plus + led.at(x).y_bar_minus;
    REQUIRE(got_bar == Catch::Approx(expected_bar).margin(1e-10));
  }
}

TEST_CASE("ledger sums are nondecreasing across checkpoints") {
  UniformTable t{123};
  VrrwModel m;
  RunOptions opt;
  opt.schedule = geometric_schedule(100000);
  auto rec = run_walk(m, WalkState::start(0), t, 100000, opt);
  for (std::size_t i = 1; i < rec.snapshots.size(); ++i) {
    for (const auto& [site, later] : rec.snapshots[i].ledger) {
      LedgerValues earlier;  // zero when the site was untouched earlier
      if (auto v = rec.snapshots[i - 1].ledger_at(site)) earlier = *v;
      REQUIRE(later.y >= earlier.y);
      REQUIRE(later.y_plus >= earlier.y_plus);
      REQUIRE(later.y_minus >= earlier.y_minus);
      REQUIRE(later.y_tilde_plus >= earlier.y_tilde_plus);
      REQUIRE(later.y_tilde_minus >= earlier.y_tilde_minus);
      REQUIRE(later.y_bar_plus >= earlier.y_bar_plus);
      REQUIRE(later.y_bar_minus >= earlier.y_bar_minus);
    }
  }
}

TEST_CASE("neighbour ratios close up") {
  UniformTable t{321};
  VrrwModel m;
  auto s = WalkState::start(0);
  for (int i = 0; i < 5000; ++i) {
    step(s, m, t);
    if (i % 97 != 0) continue;
    for (Site x = s.z.lo(); x <= s.z.hi(); ++x) {
      const auto r = neighbour_ratios(s, x);
      REQUIRE(r.alpha_plus + r.alpha_minus == Catch::Approx(1.0).margin(1e-12));
      // alpha- <= beta- exactly when z(x) <= z(x-1) + z(x+1).
      if (s.z.at(x) <= s.z.at(x - 1) + s.z.at(x + 1))
        REQUIRE(r.alpha_minus <= r.beta_minus + 1e-15);
    }
  }
}

TEST_CASE("bar increments equal the reciprocal occupation at each visit") {
  UniformTable t{55};
  VrrwModel m;
  auto s = WalkState::start(0);
  FunctionalLedger led;
  for (int i = 0; i < 2000; ++i) {
    const double q = m.right_prob(s);
    const bool right = steps_right(q, t.at(visit_index(s), s.position));
    const Site to = right ? s.position + 1 : s.position - 1;
    const auto before = led.at(to);
    led.on_step(s, right);
    apply_step(s, right);
    const auto after = led.at(to);
    const double inc =
        (after.y_bar_plus - before.y_bar_plus) +
        (after.y_bar_minus - before.y_bar_minus);
    REQUIRE(inc == Catch::Approx(1.0 / static_cast<double>(s.z.at(to)))
                       .margin(1e-12));
  }
}
