#include <doctest.h>

#include <cmath>
#include <vector>

#include "rsched/model.hpp"
#include "rsched/policy.hpp"
#include "rsched/rng.hpp"
#include "rsched/sim.hpp"
#include "rsched/solver.hpp"

using namespace rsched;

TEST_CASE("idle policy without noise stays at zero") {
  ModelParams p;
  RolloutOptions o;
  o.zero_noise = true;
  o.c0 = 1;
  const SimTrace tr = rollout(p, idle_rule(), 5, o);
  REQUIRE(tr.delta.size() == static_cast<std::size_t>(p.horizon) + 1);
  for (std::size_t t = 0; t < tr.delta.size(); ++t) {
    CHECK(tr.delta[t] == 0.0);
    CHECK(tr.cost[t] == 0.0);
  }
  CHECK(tr.total_cost() == 0.0);
  CHECK(tr.seed == 5);
  const MeanVariance mv = estimate_mean_variance(p, idle_rule(), 1000, 3, o);
  CHECK(mv.mean == 0.0);
  CHECK(mv.variance == 0.0);
}

TEST_CASE("always transmit on an always-good channel resets the error") {
  ModelParams p;
  p.p10 = 0.0;
  RolloutOptions o;
  o.c0 = 1;
  const SimTrace tr = rollout(p, always_rule(), 11, o, 4);
  for (std::size_t t = 0; t + 1 < tr.delta.size(); ++t) {
    CHECK(tr.c[t] == 1);
    // delta(t+1) = w(t) = x(t+1) - a x(t) because x_hat(t) = x(t)
    CHECK(tr.x_hat[t] == tr.x[t]);
    CHECK(tr.delta[t + 1] == doctest::Approx(tr.x[t + 1] - p.a * tr.x[t]).epsilon(1e-14));
  }
}

TEST_CASE("every rollout satisfies the cost equivalence and error recursion") {
  ModelParams p;
  ThresholdSchedule s;
  s.threshold.assign(static_cast<std::size_t>(p.horizon) + 1, {kNoTransmit, 0.8});
  s.threshold[2][0] = 0.5;  // some wasted attempts in the bad state
  for (std::uint64_t i = 0; i < 500; ++i) {
    const SimTrace tr = rollout(p, schedule_rule(s), 77, {}, i);
    double sum_g = 0.0;
    for (std::size_t t = 0; t < tr.x.size(); ++t) {
      CHECK(tr.cost[t] == stage_cost(tr.delta[t], tr.c[t], tr.u[t], p));
      CHECK(stage_cost_raw(tr.x[t], tr.x_hat[t], tr.u[t], p) ==
            doctest::Approx(tr.cost[t]).epsilon(1e-12).scale(1.0));
      sum_g += stage_cost_raw(tr.x[t], tr.x_hat[t], tr.u[t], p);
      if (t > 0) {
        CHECK(tr.delta[t] ==
              doctest::Approx(tr.x[t] - p.a * tr.x_hat[t - 1]).epsilon(1e-12).scale(1.0));
      }
    }
    CHECK(tr.delta[0] == 0.0);
    CHECK(sum_g == doctest::Approx(tr.total_cost()).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("trivial estimates") {
  ModelParams p;
  p.horizon = 0;
  RolloutOptions o;
  o.c0 = 1;
  const MonteCarloResult idle = simulate_policy(p, idle_rule(), 5000, 1, o);
  CHECK(idle.risk.log_objective == 0.0);
  const MonteCarloResult tx = simulate_policy(p, always_rule(), 5000, 1, o);
  CHECK(tx.cost.mean == doctest::Approx(p.lambda).epsilon(1e-14));
  CHECK(tx.cost.variance == doctest::Approx(0.0).epsilon(1e-20).scale(1e-20));
  CHECK(tx.risk.log_objective == doctest::Approx(p.gamma * p.lambda).epsilon(1e-14));
  CHECK(tx.risk.se_log == doctest::Approx(0.0).scale(1e-12));
  CHECK_THROWS(simulate_policy(p, idle_rule(), 0, 1, o));
}

TEST_CASE("seed determinism and thread independence") {
  ModelParams p;
  const auto rule = schedule_rule(always_schedule(p.horizon));
  const MonteCarloResult a = simulate_policy(p, rule, 20000, 42, {}, 1);
  const MonteCarloResult b = simulate_policy(p, rule, 20000, 42, {}, 3);
  const MonteCarloResult c = simulate_policy(p, rule, 20000, 43, {}, 1);
  CHECK(a.risk.log_objective == b.risk.log_objective);
  CHECK(a.risk.se_log == b.risk.se_log);
  CHECK(a.cost.mean == b.cost.mean);
  CHECK(a.cost.variance == b.cost.variance);
  CHECK(a.risk.log_objective != c.risk.log_objective);
  const SimTrace t1 = rollout(p, rule, 42, {}, 17);
  const SimTrace t2 = rollout(p, rule, 42, {}, 17);
  CHECK(t1.x == t2.x);
  CHECK(t1.c == t2.c);
}

TEST_CASE("never-transmit estimate matches the closed form") {
  ModelParams p;
  p.gamma = 0.02;
  RolloutOptions o;
  o.c0 = 0;
  const RiskEstimate e = estimate_risk_objective(p, idle_rule(), 200000, 2024, o);
  const double target = closed_form_never_transmit(p, 0.0, p.horizon + 1);
  CHECK_FALSE(e.heavy_tail);
  CHECK(std::abs(e.log_objective - target) <= 3.0 * e.se_log);
}

TEST_CASE("doubling n shrinks the standard error by about 1/sqrt(2)") {
  ModelParams p;
  p.gamma = 0.02;
  const auto rule = schedule_rule(always_schedule(p.horizon));
  // Each SE is itself an estimate, so the ratio is checked on average.
  const int pairs = 10;
  double sum = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const auto seed = static_cast<std::uint64_t>(100 + k);
    const double se1 = estimate_risk_objective(p, rule, 20000, seed).se_log;
    const double se2 = estimate_risk_objective(p, rule, 40000, seed + 1000).se_log;
    sum += se2 / se1;
  }
  const double mean_ratio = sum / pairs;
  MESSAGE("mean SE ratio " << mean_ratio);
  CHECK(mean_ratio > 0.6);
  CHECK(mean_ratio < 0.82);
}

TEST_CASE("Taylor expansion: (1/gamma) log E exp(gamma S) ~ mean + gamma/2 var") {
  ModelParams p;
  const auto rule = schedule_rule(always_schedule(p.horizon));
  std::vector<double> gaps;
  for (double gamma : {0.02, 0.01, 0.005}) {
    p.gamma = gamma;
    const MonteCarloResult r = simulate_policy(p, rule, 100000, 9);
    const double lhs = r.risk.log_objective / gamma;
    const double rhs = r.cost.mean + 0.5 * gamma * r.cost.variance;
    gaps.push_back(std::abs(lhs - rhs));
  }
  // Same seed, so the comparison is paired; the remainder is O(gamma^2).
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
}

TEST_CASE("policy dominance: the solved policy beats baselines") {
  ModelParams p;
  p.gamma = 0.02;
  const Grid g = make_grid(p, {}, Space::folded);
  const SolveResult r = value_iterate(p, g, {QuadRule::gauss_hermite, 64});
  const ThresholdSchedule best = extract_thresholds(r.policy, g);
  RolloutOptions o;
  o.c0 = 1;
  constexpr std::size_t n = 200000;
  constexpr std::uint64_t seed = 5;
  const RiskEstimate opt = estimate_risk_objective(p, schedule_rule(best), n, seed, o);

  std::vector<ThresholdSchedule> rivals{idle_schedule(p.horizon), always_schedule(p.horizon)};
  // Three random schedules, thresholds uniform on [0, 3] per stage.
  const CounterRng rng(31337, 0);
  std::uint64_t k = 0;
  for (int j = 0; j < 3; ++j) {
    ThresholdSchedule s;
    for (int t = 0; t <= p.horizon; ++t) s.threshold.push_back({kNoTransmit, 3.0 * rng.uniform(k++)});
    rivals.push_back(s);
  }
  for (const auto& s : rivals) {
    const RiskEstimate e = estimate_risk_objective(p, schedule_rule(s), n, seed, o);
    CHECK_FALSE(e.heavy_tail);
    CHECK(opt.log_objective + 3.0 * opt.se_log < e.log_objective - 3.0 * e.se_log);
  }
}
