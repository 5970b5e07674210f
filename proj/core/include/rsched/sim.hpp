#pragma once

// Monte Carlo rollouts of the closed loop and log-domain estimators of the
// risk-sensitive objective.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rsched/params.hpp"
#include "rsched/policy.hpp"

namespace rsched {

/// u = rule(delta, c, stage)
using DecisionRule = std::function<int(double, int, int)>;

DecisionRule schedule_rule(ThresholdSchedule schedule);
DecisionRule idle_rule();
DecisionRule always_rule();

struct RolloutOptions {
  double initial_delta = 0.0;
  /// Initial channel state; drawn from the stationary law when unset.
  std::optional<int> c0;
  /// Forces w(t) = 0 (and x(0) = 0); for deterministic tests.
  bool zero_noise = false;
};

struct SimTrace {
  std::vector<double> x;
  std::vector<double> x_hat;
  std::vector<double> delta;
  std::vector<int> c;
  std::vector<int> u;
  std::vector<double> cost;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  double total_cost() const;
};

/// One rollout over stages 0..T. `index` selects the rollout's random stream.
SimTrace rollout(const ModelParams& params, const DecisionRule& rule, std::uint64_t seed,
                 const RolloutOptions& options = {}, std::uint64_t index = 0);

struct RiskEstimate {
  double log_objective = 0.0;  ///< log of the sample mean of exp(gamma * total cost)
  double se_log = 0.0;         ///< delta-method standard error of log_objective
  std::size_t n = 0;
  double top_share = 0.0;      ///< share of the mean carried by the top 0.1% of samples
  bool heavy_tail = false;     ///< top_share > 0.5
};

struct MeanVariance {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  std::size_t n = 0;
};

struct MonteCarloResult {
  RiskEstimate risk;
  MeanVariance cost;
};

inline constexpr double kTopQuantile = 0.001;
inline constexpr double kHeavyTailShare = 0.5;

/// Both estimators from one set of rollouts. Output is bit-identical for a
/// given (params, rule, n, seed, options) regardless of `threads`.
MonteCarloResult simulate_policy(const ModelParams& params, const DecisionRule& rule,
                                 std::size_t n_rollouts, std::uint64_t seed,
                                 const RolloutOptions& options = {}, unsigned threads = 0);

RiskEstimate estimate_risk_objective(const ModelParams& params, const DecisionRule& rule,
                                     std::size_t n_rollouts, std::uint64_t seed,
                                     const RolloutOptions& options = {});

MeanVariance estimate_mean_variance(const ModelParams& params, const DecisionRule& rule,
                                    std::size_t n_rollouts, std::uint64_t seed,
                                    const RolloutOptions& options = {});

}  // namespace rsched
