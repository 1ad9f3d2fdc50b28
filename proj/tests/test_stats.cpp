#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "vrrw/stats.hpp"

#include "test_support.hpp"

using namespace vrrw;

TEST_CASE("crossing identity baseline at n = 0") {
  auto s = WalkState::start(0);
  // direct = 0, crossings = 0, indicator(X_0 = 0) = -1, so 2*Cst = 1.
  REQUIRE(r_identity_baseline2(s) == 1);
  const auto r = r_identity_check(s, 1);
  REQUIRE(r.direct == 0);
  REQUIRE(r.equal);
}

TEST_CASE("crossing identity holds at every step of every run") {
  for (Site v0 : {Site(-3), Site(0), Site(2), Site(7)}) {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
      UniformTable t{seed};
      VrrwModel m;
      InitialWeights w;
      if (seed == 13) {
        w.overrides[1] = 3;
        w.overrides[4] = 2;
      }
      auto s = WalkState::start(v0, w);
      const auto baseline2 = r_identity_baseline2(s);
      for (int i = 0; i < 20000; ++i) {
        step(s, m, t);
        const auto r = r_identity_check(s, baseline2);
        REQUIRE(r.equal);
      }
    }
  }
}

TEST_CASE("a corrupted count breaks the identity check") {
  UniformTable t{5};
  VrrwModel m;
  auto s = WalkState::start(0);
  const auto baseline2 = r_identity_baseline2(s);
  for (int i = 0; i < 200; ++i) step(s, m, t);
  REQUIRE(r_identity_check(s, baseline2).equal);
  s.z.add(2, 1);  // simulated bookkeeping bug
  REQUIRE_FALSE(r_identity_check(s, baseline2).equal);
}

TEST_CASE("restricted identity at the s51 clock times") {
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    UniformTable t{seed};
    VrrwModel m;
    RunOptions opt;
    opt.full_path = true;
    opt.schedule = {20000};
    opt.track_ledger = false;
    auto rec = run_walk(m, WalkState::start(0), t, 20000, opt);
    const auto res = r_identity_at_threshold_times(rec);
    REQUIRE(res.ok);
    REQUIRE(res.times_checked > 0);
  }
}

TEST_CASE("hitting time") {
  const std::vector<Site> path = {0, 1, 2, 1, 0, -1, 0, 1};
  auto rec = testing::record_from_path(path, {7});
  SECTION("immediate when already there") {
    REQUIRE(hitting_time(rec, 2, 2) == 2);
  }
  SECTION("first later visit") { REQUIRE(hitting_time(rec, 3, 0) == 4); }
  SECTION("never within horizon") {
    REQUIRE(hitting_time(rec, 3, 2) == std::nullopt);
    REQUIRE(hitting_time(rec, 0, 5) == std::nullopt);
  }
  SECTION("full-scan oracle agreement") {
    for (std::uint64_t n = 0; n < path.size(); ++n) {
      for (Site x = -2; x <= 3; ++x) {
        std::optional<std::uint64_t> expect;
        for (std::uint64_t m = path.size(); m-- > n;)
          if (path[m] == x) expect = m;
        REQUIRE(hitting_time(rec, n, x) == expect);
      }
    }
  }
}

namespace {

// Brute-force threshold time: recompute the counter from scratch at every
// prefix. Quadratic on purpose; a wholly separate route from the library.
std::optional<std::uint64_t> brute_threshold(const std::vector<Site>& path,
                                             SeriesPreset preset,
                                             std::uint64_t level) {
  for (std::size_t m = 0; m < path.size(); ++m) {
    std::int64_t counter = 0;
    switch (preset) {
      case SeriesPreset::s51:
        for (std::size_t k = 1; k <= m; ++k)
          if (path[k - 1] == 2 && path[k] == 3) ++counter;
        break;
      case SeriesPreset::s52: {
        counter = 1;  // initial weight of site 4
        for (std::size_t k = 0; k <= m; ++k)
          if (path[k] == 4) ++counter;
        break;
      }
      case SeriesPreset::s53:
        for (std::size_t k = 1; k <= m; ++k)
          if (path[k - 1] == 4 && path[k] == 5) ++counter;
        break;
    }
    if (counter >= static_cast<std::int64_t>(level)) return m;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("threshold times") {
  UniformTable t{33};
  VrrwModel m;
  RunOptions opt;
  opt.full_path = true;
  opt.schedule = {3000};
  opt.track_ledger = false;
  auto rec = run_walk(m, WalkState::start(0), t, 3000, opt);
  for (auto preset : {SeriesPreset::s51, SeriesPreset::s52, SeriesPreset::s53}) {
    const auto times = threshold_times(rec, preset, 40);
    REQUIRE(times[0] == 0);  // counters start >= 0
    for (std::uint64_t n = 1; n < times.size(); ++n) {
      if (times[n] && times[n + 1 <= 40 ? n : n]) {
        // strict increase past the initial-weight plateau
        if (n >= 2 && times[n - 1] && *times[n - 1] > 0)
          REQUIRE(*times[n] > *times[n - 1]);
      }
      REQUIRE(times[n] == brute_threshold(rec.path, preset, n));
    }
  }
}

TEST_CASE("compensator tracking") {
  SECTION("zero weight gives zero series") {
    UniformTable t{44};
    VrrwModel m;
    RunOptions opt;
    opt.full_path = true;
    opt.schedule = {500};
    opt.track_ledger = false;
    auto rec = run_walk(m, WalkState::start(0), t, 500, opt);
    CompensatorSpec spec;
    spec.event = [](const WalkState&, Site, Site) { return true; };
    spec.weight = [](const WalkState&) { return 0.0; };
    spec.prob = [](const WalkState& s) { return vrrw_transition_prob(s); };
    const auto series = compensator_track(spec, rec);
    REQUIRE(series.phi.back() == 0.0);
    REQUIRE(series.phi_star.back() == 0.0);
  }

  SECTION("rightward-departure compensator reproduces the weighted sums") {
    UniformTable t{45};
    VrrwModel m;
    RunOptions opt;
    opt.full_path = true;
    opt.schedule = {5000};
    auto rec = run_walk(m, WalkState::start(0), t, 5000, opt);
    const Site x = 0;
    CompensatorSpec spec;
    spec.event = [x](const WalkState&, Site from, Site to) {
      return from == x && to == x + 1;
    };
    spec.weight = [x](const WalkState& s) {
      return 1.0 / static_cast<double>(s.z.at(x + 1));
    };
    spec.prob = [x](const WalkState& s) {
      if (s.position != x) return 0.0;
      return vrrw_transition_prob(s);
    };
    const auto series = compensator_track(spec, rec);
    // Phi == Y+(x) and Phi* == Y(x), both exactly.
    const auto lv = rec.final_snapshot().ledger_at(x);
    REQUIRE(lv.has_value());
    REQUIRE(series.phi.back() == Catch::Approx(lv->y_plus).margin(1e-10));
    REQUIRE(series.phi_star.back() == Catch::Approx(lv->y).margin(1e-10));
    for (std::size_t i = 1; i < series.phi.size(); ++i) {
      REQUIRE(series.phi[i] >= series.phi[i - 1]);
      REQUIRE(series.phi_star[i] >= series.phi_star[i - 1]);
    }
  }

  SECTION("replicate mean of the martingale is consistent with zero") {
    const int reps = 400;
    std::vector<double> diffs;
    for (int r = 0; r < reps; ++r) {
      UniformTable t{replicate_seed(616161, static_cast<std::uint64_t>(r))};
      VrrwModel m;
      RunOptions opt;
      opt.full_path = true;
      opt.schedule = {2000};
      opt.track_ledger = false;
      auto rec = run_walk(m, WalkState::start(0), t, 2000, opt);
      CompensatorSpec spec;
      spec.event = [](const WalkState&, Site from, Site to) {
        return from == 0 && to == 1;
      };
      spec.weight = [](const WalkState& s) {
        return 1.0 / static_cast<double>(s.z.at(1));
      };
      spec.prob = [](const WalkState& s) {
        if (s.position != 0) return 0.0;
        return vrrw_transition_prob(s);
      };
      const auto series = compensator_track(spec, rec);
      diffs.push_back(series.phi.back() - series.phi_star.back());
    }
    double mean = 0;
    for (double d : diffs) mean += d;
    mean /= reps;
    double var = 0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    const double sd = std::sqrt(var / (reps - 1));
    REQUIRE(std::abs(mean) <= 4.0 * sd / std::sqrt(static_cast<double>(reps)));
  }
}

TEST_CASE("stabilization report") {
  SECTION("constant series has zero oscillation") {
    std::vector<std::pair<std::uint64_t, double>> series = {
        {1, 2.5}, {10, 2.5}, {100, 2.5}, {1000, 2.5}};
    const auto st = stabilization_report(series, 0.1);
    REQUIRE(st.oscillation == 0.0);
    REQUIRE(st.last == 2.5);
  }
  SECTION("hand-checked oscillation over the trailing decade") {
    std::vector<std::pair<std::uint64_t, double>> series = {
        {1, 0.5}, {10, 0.7}, {100, 0.65}, {1000, 0.66}};
    const auto st = stabilization_report(series, 0.1);
    REQUIRE(st.window_points == 2);  // n = 100 and n = 1000
    REQUIRE(st.oscillation == Catch::Approx(0.01).margin(1e-12));
  }
  SECTION("too few checkpoints is an error") {
    std::vector<std::pair<std::uint64_t, double>> series = {{1, 0.0}, {2, 0.0}};
    REQUIRE_THROWS_AS(stabilization_report(series, 0.1),
                      std::invalid_argument);
  }
}
