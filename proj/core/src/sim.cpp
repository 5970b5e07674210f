#include "rsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rsched/logmath.hpp"
#include "rsched/model.hpp"
#include "rsched/parallel.hpp"
#include "rsched/rng.hpp"

namespace rsched {

DecisionRule schedule_rule(ThresholdSchedule schedule) {
  return [s = std::move(schedule)](double delta, int c, int stage) {
    return decide(s, delta, c, stage);
  };
}

DecisionRule idle_rule() {
  return [](double, int, int) { return 0; };
}

DecisionRule always_rule() {
  return [](double, int, int) { return 1; };
}

double SimTrace::total_cost() const { return std::accumulate(cost.begin(), cost.end(), 0.0); }

namespace {

// Random streams: rollout i draws its noise from stream 2i and its channel
// from stream 2i+1. Normal 0 is x(0), normal t+1 is w(t); uniform 0 is the
// initial channel draw, uniform t+1 drives the transition after stage t.
template <typename Sink>
double run_rollout(const ModelParams& params, const DecisionRule& rule, std::uint64_t seed,
                   const RolloutOptions& options, std::uint64_t index, Sink&& sink) {
  const CounterRng noise(seed, 2 * index);
  const CounterRng channel(seed, 2 * index + 1);

  double x = options.zero_noise ? 0.0 : noise.normal(0);
  int c = 0;
  if (options.c0) {
    require_binary(*options.c0, "initial channel state");
    c = *options.c0;
  } else {
    c = channel.uniform(0) < ChannelMatrix::from(params).stationary_good() ? 1 : 0;
  }
  double delta = options.initial_delta;
  double prediction = x - delta;  // a * x_hat(t-1)
  double total = 0.0;

  for (int t = 0; t <= params.horizon; ++t) {
    const int u = rule(delta, c, t);
    require_binary(u, "policy action");
    const double x_hat = u * c == 1 ? x : prediction;
    const double cost = stage_cost(delta, c, u, params);
    sink(t, x, x_hat, delta, c, u, cost);
    total += cost;

    const double w = options.zero_noise ? 0.0 : noise.normal(static_cast<std::uint64_t>(t) + 1);
    x = step_source(x, w, params);
    delta = step_error(delta, w, u, c, params);
    prediction = params.a * x_hat;
    c = step_channel(c, channel.uniform(static_cast<std::uint64_t>(t) + 1), params);
  }
  return total;
}

struct ChunkStats {
  LogSumExp first;   // sum of exp(gamma S)
  LogSumExp second;  // sum of exp(2 gamma S)
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
};

// Fixed chunk count so the reduction order never depends on threads.
constexpr std::size_t kChunkSize = 4096;

}  // namespace

SimTrace rollout(const ModelParams& params, const DecisionRule& rule, std::uint64_t seed,
                 const RolloutOptions& options, std::uint64_t index) {
  params.validate();
  SimTrace trace;
  trace.seed = seed;
  trace.index = index;
  run_rollout(params, rule, seed, options, index,
              [&](int, double x, double x_hat, double delta, int c, int u, double cost) {
                trace.x.push_back(x);
                trace.x_hat.push_back(x_hat);
                trace.delta.push_back(delta);
                trace.c.push_back(c);
                trace.u.push_back(u);
                trace.cost.push_back(cost);
              });
  return trace;
}

MonteCarloResult simulate_policy(const ModelParams& params, const DecisionRule& rule,
                                 std::size_t n_rollouts, std::uint64_t seed,
                                 const RolloutOptions& options, unsigned threads) {
  params.validate();
  if (n_rollouts == 0) throw std::invalid_argument("n_rollouts must be > 0");

  std::vector<double> log_samples(n_rollouts);
  const std::size_t n_chunks = (n_rollouts + kChunkSize - 1) / kChunkSize;
  std::vector<ChunkStats> chunks(n_chunks);
  const auto noop = [](int, double, double, double, int, int, double) {};

  parallel_for(n_chunks, threads, [&](std::size_t ci) {
    ChunkStats& st = chunks[ci];
    const std::size_t lo = ci * kChunkSize;
    const std::size_t hi = std::min(n_rollouts, lo + kChunkSize);
    for (std::size_t i = lo; i < hi; ++i) {
      const double total = run_rollout(params, rule, seed, options, i, noop);
      const double z = params.gamma * total;
      log_samples[i] = z;
      st.first.add(z);
      st.second.add(2.0 * z);
      ++st.n;
      const double d = total - st.mean;
      st.mean += d / static_cast<double>(st.n);
      st.m2 += d * (total - st.mean);
    }
  });

  ChunkStats all;
  for (const auto& st : chunks) {
    all.first.merge(st.first);
    all.second.merge(st.second);
    const double na = static_cast<double>(all.n);
    const double nb = static_cast<double>(st.n);
    const double n = na + nb;
    const double d = st.mean - all.mean;
    all.mean += d * nb / n;
    all.m2 += st.m2 + d * d * na * nb / n;
    all.n += st.n;
  }

  MonteCarloResult res;
  const double n = static_cast<double>(n_rollouts);
  const double log_n = std::log(n);
  const double log_m1 = all.first.value() - log_n;
  const double log_m2 = all.second.value() - log_n;
  res.risk.n = n_rollouts;
  res.risk.log_objective = log_m1;
  if (n_rollouts > 1) {
    // Var(Y) / E[Y]^2 = E[Y^2] / E[Y]^2 - 1, scaled to the unbiased estimator.
    const double ratio = std::expm1(log_m2 - 2.0 * log_m1);
    res.risk.se_log = std::sqrt(std::max(ratio, 0.0) / (n - 1.0));
  }

  const auto top = static_cast<std::size_t>(std::ceil(kTopQuantile * n));
  std::nth_element(log_samples.begin(), log_samples.begin() + static_cast<long>(top - 1),
                   log_samples.end(), std::greater<>());
  const double log_top = log_sum_exp(std::span<const double>(log_samples.data(), top));
  res.risk.top_share = std::exp(log_top - all.first.value());
  res.risk.heavy_tail = res.risk.top_share > kHeavyTailShare;

  res.cost.n = n_rollouts;
  res.cost.mean = all.mean;
  res.cost.variance = n_rollouts > 1 ? all.m2 / (n - 1.0) : 0.0;
  return res;
}

RiskEstimate estimate_risk_objective(const ModelParams& params, const DecisionRule& rule,
                                     std::size_t n_rollouts, std::uint64_t seed,
                                     const RolloutOptions& options) {
  return simulate_policy(params, rule, n_rollouts, seed, options).risk;
}

MeanVariance estimate_mean_variance(const ModelParams& params, const DecisionRule& rule,
                                    std::size_t n_rollouts, std::uint64_t seed,
                                    const RolloutOptions& options) {
  return simulate_policy(params, rule, n_rollouts, seed, options).cost;
}

}  // namespace rsched
