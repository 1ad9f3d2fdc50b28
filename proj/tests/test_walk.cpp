#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <vector>

#include "vrrw/harness.hpp"
#include "vrrw/record.hpp"
#include "vrrw/walk.hpp"

#include "test_support.hpp"

using namespace vrrw;

TEST_CASE("transition probability matches the reinforced law") {
  SECTION("fresh symmetric start") {
    auto s = WalkState::start(0);
    REQUIRE(vrrw_transition_prob(s) == 0.5);
  }
  SECTION("weighted neighbours") {
    InitialWeights w;
    w.overrides[1] = 3;  // z(x+1) = 3, z(x-1) = 1
    auto s = WalkState::start(0, w);
    REQUIRE(vrrw_transition_prob(s) == 0.75);
  }
  SECTION("after the path 0,1,0") {
    auto s = WalkState::start(0);
    apply_step(s, true);   // to 1
    apply_step(s, false);  // back to 0
    REQUIRE(s.position == 0);
    REQUIRE(s.z.at(1) == 2);
    REQUIRE(s.z.at(-1) == 1);
    REQUIRE(vrrw_transition_prob(s) == Catch::Approx(2.0 / 3.0).epsilon(0));
  }
}

TEST_CASE("visit index counts visits so far") {
  auto s = WalkState::start(0);
  REQUIRE(visit_index(s) == 1);  // time-0 visit at v0
  apply_step(s, true);
  REQUIRE(visit_index(s) == 1);  // first arrival at a fresh site
  // Third departure from site 1 happens at its third visit.
  apply_step(s, false);
  apply_step(s, true);
  apply_step(s, false);
  apply_step(s, true);
  REQUIRE(s.position == 1);
  REQUIRE(visit_index(s) == 3);
}

TEST_CASE("boundary of the step rule uses <=") {
  REQUIRE(steps_right(0.75, 0.75));
  REQUIRE_FALSE(steps_right(0.75, 0.750001));
  REQUIRE(steps_right(1.0, 0.9999999999));
}

TEST_CASE("two walks on one table produce identical trajectories") {
  UniformTable t{31337};
  VrrwModel m1, m2;
  auto a = WalkState::start(0);
  auto b = WalkState::start(0);
  for (int i = 0; i < 5000; ++i) {
    step(a, m1, t);
    step(b, m2, t);
    REQUIRE(a.position == b.position);
  }
}

TEST_CASE("walk invariants hold along random runs") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    UniformTable t{seed};
    VrrwModel m;
    InitialWeights w;
    if (seed == 3) w.overrides[2] = 5;
    auto s = WalkState::start(seed == 2 ? -4 : 0, w);
    Site prev = s.position;
    std::set<std::pair<std::uint64_t, Site>> cells;
    for (int i = 0; i < 20000; ++i) {
      const auto cell = std::make_pair(visit_index(s), s.position);
      REQUIRE(cells.insert(cell).second);  // single consumption per walk
      step(s, m, t);
      REQUIRE(std::abs(s.position - prev) == 1);
      prev = s.position;
      if (i % 4999 == 0) check_invariants(s);
    }
    check_invariants(s);
  }
}

TEST_CASE("engine trajectory distribution matches exact enumeration") {
  // Exact law of X_4 by enumerating all 16 paths with an independent
  // map-based implementation of the transition formula.
  std::map<Site, double> exact;
  struct Node {
    std::vector<Site> path;
    double prob;
  };
  std::vector<Node> frontier{{{0}, 1.0}};
  for (int depth = 0; depth < 4; ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      std::map<Site, std::int64_t> z;
      for (Site v : node.path) ++z[v];
      const Site x = node.path.back();
      const auto count = [&](Site v) {
        auto it = z.find(v);
        return 1.0 + (it == z.end() ? 0.0 : static_cast<double>(it->second));
      };
      const double q = count(x + 1) / (count(x - 1) + count(x + 1));
      Node right = node;
      right.path.push_back(x + 1);
      right.prob *= q;
      Node left = node;
      left.path.push_back(x - 1);
      left.prob *= 1 - q;
      next.push_back(std::move(right));
      next.push_back(std::move(left));
    }
    frontier = std::move(next);
  }
  for (const auto& node : frontier) exact[node.path.back()] += node.prob;

  const int reps = 200000;
  std::map<Site, int> hits;
  for (int r = 0; r < reps; ++r) {
    UniformTable t{replicate_seed(515151, static_cast<std::uint64_t>(r))};
    VrrwModel m;
    auto s = WalkState::start(0);
    for (int i = 0; i < 4; ++i) step(s, m, t);
    ++hits[s.position];
  }
  for (const auto& [site, p] : exact) {
    const double phat = static_cast<double>(hits[site]) / reps;
    const double sigma = std::sqrt(p * (1 - p) / reps);
    INFO("site " << site << " exact " << p << " empirical " << phat);
    REQUIRE(std::abs(phat - p) < 5 * sigma + 1e-9);
  }
}

TEST_CASE("run records snapshots at the schedule") {
  UniformTable t{11};
  VrrwModel m;
  SECTION("horizon zero keeps only the initial state") {
    RunOptions opt;
    opt.schedule = geometric_schedule(0);
    auto rec = run_walk(m, WalkState::start(0), t, 0, opt);
    REQUIRE(rec.snapshots.size() == 1);
    REQUIRE(rec.snapshots[0].n == 0);
    REQUIRE(rec.snapshots[0].position == 0);
  }
  SECTION("geometric schedule hits powers of ten") {
    const auto sched = geometric_schedule(1000000);
    REQUIRE(sched == std::vector<std::uint64_t>{1, 10, 100, 1000, 10000,
                                                100000, 1000000});
  }
  SECTION("window starts are added exactly") {
    const auto sched = with_window_starts({10000, 100000, 1000000}, 0.10);
    REQUIRE(std::find(sched.begin(), sched.end(), 9000) != sched.end());
    REQUIRE(std::find(sched.begin(), sched.end(), 90000) != sched.end());
    REQUIRE(std::find(sched.begin(), sched.end(), 900000) != sched.end());
  }
}

TEST_CASE("identical seeds give byte-identical record serialization") {
  RunOptions opt;
  opt.schedule = geometric_schedule(2000);
  opt.full_path = true;
  UniformTable t{909090};
  VrrwModel m1, m2;
  auto r1 = run_walk(m1, WalkState::start(0), t, 2000, opt);
  auto r2 = run_walk(m2, WalkState::start(0), t, 2000, opt);
  REQUIRE(record_to_json(r1).dump() == record_to_json(r2).dump());
  UniformTable t3{909091};
  VrrwModel m3;
  auto r3 = run_walk(m3, WalkState::start(0), t3, 2000, opt);
  REQUIRE(record_to_json(r1).dump() != record_to_json(r3).dump());
}

TEST_CASE("snapshot counts agree with brute-force path tallies") {
  UniformTable t{777};
  VrrwModel m;
  RunOptions opt;
  opt.schedule = {500, 1000};
  opt.full_path = true;
  auto rec = run_walk(m, WalkState::start(0), t, 1000, opt);
  for (const auto& snap : rec.snapshots) {
    const auto counts = testing::brute_counts(rec.path, snap.n);
    for (const auto& [site, c] : snap.z) REQUIRE(counts.at(site) == c);
    const auto dep_r = testing::brute_departures(rec.path, snap.n, true);
    for (const auto& [site, c] : snap.z_plus) {
      auto it = dep_r.find(site);
      REQUIRE((it != dep_r.end() ? it->second : 0) == c);
    }
  }
}

TEST_CASE("modified walk never lowers the rightward probability") {
  for (std::uint64_t seed : {5ULL, 6ULL, 7ULL, 8ULL}) {
    UniformTable t{seed};
    ModifiedWalkParams p;
    p.x = 1;
    p.cap_m = 2;
    p.g = 0.4;
    p.window = WindowSpec::steps(50, 5000);
    InitialWeights w;
    w.overrides[2] = 60;  // small alpha^-(1) so the gate can open
    w.overrides[1] = 40;
    ModifiedVrrwModel mod(p);
    VrrwModel plain;
    auto s = WalkState::start(0, w);
    for (int i = 0; i < 8000; ++i) {
      const double q_mod = mod.right_prob(s);
      const double q_plain = plain.right_prob(s);
      REQUIRE(q_mod >= q_plain - 1e-15);
      if (s.position != p.x) REQUIRE(q_mod == q_plain);
      apply_step(s, steps_right(q_mod, t.at(visit_index(s), s.position)));
    }
  }
}
