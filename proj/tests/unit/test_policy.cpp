#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsched/policy.hpp"
#include "rsched/solver.hpp"

using namespace rsched;

namespace {

const QuadratureSpec kHermite{QuadRule::gauss_hermite, 64};

PolicyTable table_from(const std::vector<std::vector<int>>& c1_rows, std::size_t nodes) {
  PolicyTable t(c1_rows.size() + 1, nodes, 0);
  for (std::size_t k = 0; k < c1_rows.size(); ++k) {
    for (std::size_t i = 0; i < nodes; ++i) {
      t(k + 1, 1, i) = static_cast<std::uint8_t>(c1_rows[k][i]);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("decide examples") {
  ThresholdSchedule s;
  s.threshold = {{kNoTransmit, 1.0}};
  CHECK(decide(s, -1.5, 1, 0) == 1);
  CHECK(decide(s, 1.0, 1, 0) == 1);
  CHECK(decide(s, 0.99, 1, 0) == 0);
  CHECK(decide(s, 50.0, 0, 0) == 0);
  CHECK(s.horizon() == 0);
  CHECK_THROWS(decide(s, 0.0, 1, 1));
}

TEST_CASE("extract_thresholds on hand-built tables") {
  const Grid g(Space::folded, 1.0, 11);  // nodes 0, 0.2, ..., 1.0
  // iterate 1 = last stage (stage 1), iterate 2 = stage 0
  const PolicyTable t = table_from({{0, 0, 0, 1, 1, 1}, {0, 0, 0, 0, 0, 0}}, g.size());
  const ThresholdSchedule s = extract_thresholds(t, g);
  REQUIRE(s.horizon() == 1);
  CHECK(s.at(1, 1) == doctest::Approx(0.6));
  CHECK(s.at(0, 1) == kNoTransmit);
  CHECK(s.at(0, 0) == kNoTransmit);
  CHECK(s.at(1, 0) == kNoTransmit);

  const PolicyTable bad = table_from({{0, 1, 0, 1, 1, 1}}, g.size());
  try {
    (void)extract_thresholds(bad, g);
    FAIL("expected NonThresholdPolicy");
  } catch (const NonThresholdPolicy& e) {
    CHECK(e.iterate() == 1);
    CHECK(e.channel() == 1);
    CHECK(e.node() == 2);
  }

  const PolicyTable idle(4, g.size(), 0);
  const ThresholdSchedule si = extract_thresholds(idle, g);
  for (int t2 = 0; t2 <= si.horizon(); ++t2) {
    CHECK(si.at(t2, 0) == kNoTransmit);
    CHECK(si.at(t2, 1) == kNoTransmit);
  }
}

TEST_CASE("original-grid tables must be even") {
  const Grid g(Space::original, 1.0, 5);  // -1, -0.5, 0, 0.5, 1
  PolicyTable t(2, g.size(), 0);
  t(1, 1, 4) = 1;
  CHECK_THROWS_AS(extract_thresholds(t, g), NonThresholdPolicy);
  t(1, 1, 0) = 1;
  CHECK(extract_thresholds(t, g).at(0, 1) == 1.0);
}

TEST_CASE("horizon 0 threshold at sqrt(lambda), ties idle") {
  ModelParams p;
  p.horizon = 0;
  const Grid g(Space::folded, 4.0, 801);  // spacing 0.01
  const SolveResult r = value_iterate(p, g, kHermite);
  const ThresholdSchedule s = extract_thresholds(r.policy, g);
  // At delta = 1 exactly both actions cost gamma; the tie goes to idle.
  CHECK(s.at(0, 1) == doctest::Approx(1.01).epsilon(1e-14));
  CHECK(s.at(0, 0) == kNoTransmit);
  p.lambda = 2.0;
  const ThresholdSchedule s2 = extract_thresholds(value_iterate(p, g, kHermite).policy, g);
  CHECK(s2.at(0, 1) == doctest::Approx(1.42).epsilon(1e-14));
}

TEST_CASE("round trip: decide reproduces the policy table at every node") {
  ModelParams p;
  p.horizon = 4;
  for (Space space : {Space::folded, Space::original}) {
    const Grid g(space, 8.0, 801);
    const SolveResult r = value_iterate(p, g, kHermite);
    const ThresholdSchedule s = extract_thresholds(r.policy, g);
    for (int stage = 0; stage <= p.horizon; ++stage) {
      const std::size_t k = static_cast<std::size_t>(p.horizon + 1 - stage);
      for (int c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          CHECK(decide(s, g.node(i), c, stage) == r.policy(k, c, i));
        }
      }
    }
  }
}

TEST_CASE("unfolded policy is even, clamps, and matches the table") {
  ModelParams p;
  p.horizon = 3;
  const Grid g(Space::folded, 6.0, 601);
  const SolveResult r = value_iterate(p, g, kHermite);
  const UnfoldedPolicy f = unfold_policy(r.policy, g);
  CHECK(f.horizon() == 3);
  for (int stage = 0; stage <= 3; ++stage) {
    const std::size_t k = static_cast<std::size_t>(4 - stage);
    for (int c = 0; c < 2; ++c) {
      CHECK(f(0.0, c, stage) == r.policy(k, c, 0));
      CHECK(f(100.0, c, stage) == r.policy(k, c, g.size() - 1));
      for (double d : {0.004, 0.3, 0.777, 1.5, 5.999}) {
        CHECK(f(d, c, stage) == f(-d, c, stage));
        const auto below = static_cast<std::size_t>(std::floor(d / g.spacing()));
        CHECK(f(d, c, stage) == r.policy(k, c, below));
      }
    }
  }
  CHECK_THROWS(UnfoldedPolicy(r.policy, g.with_space(Space::original)));
}

TEST_CASE("builtin schedules") {
  const ThresholdSchedule idle = idle_schedule(2);
  const ThresholdSchedule always = always_schedule(2);
  CHECK(idle.horizon() == 2);
  for (int t = 0; t <= 2; ++t) {
    for (int c = 0; c < 2; ++c) {
      CHECK(decide(idle, 100.0, c, t) == 0);
      CHECK(decide(always, 0.0, c, t) == 1);
    }
  }
}

TEST_CASE("empirical: lowering lambda never raises a threshold") {
  // Reported as an observed property, not a theorem.
  ModelParams p;
  p.horizon = 3;
  const Grid g(Space::folded, 8.0, 801);
  std::vector<ThresholdSchedule> by_lambda;
  for (double lambda : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    p.lambda = lambda;
    by_lambda.push_back(extract_thresholds(value_iterate(p, g, kHermite).policy, g));
  }
  for (std::size_t j = 0; j + 1 < by_lambda.size(); ++j) {
    for (int t = 0; t <= p.horizon; ++t) {
      CHECK(by_lambda[j].at(t, 1) <= by_lambda[j + 1].at(t, 1));
    }
  }
}
