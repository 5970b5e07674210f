#pragma once

// Exact verification on a finite, quantized version of the MDP: exact
// policy evaluation, exact backward induction, and exhaustive enumeration
// of deterministic Markov policies.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsched/params.hpp"

namespace rsched {

struct NoisePoint {
  double value = 0.0;
  double prob = 0.0;
};

/// Finite chain on a uniform error lattice. Transitions snap a * delta + w
/// (or w after a delivery) to the nearest lattice state, ties toward the
/// smaller |delta|, and clamp at the ends.
struct QuantizedChain {
  ModelParams params;
  std::vector<double> delta_states;  ///< ascending, symmetric about 0
  double spacing = 0.0;
  std::vector<NoisePoint> noise;
  ChannelMatrix channel;
  std::string noise_scheme;
  std::vector<std::vector<std::size_t>> next_idle;  ///< [i][k]: snap(a delta_i + w_k)
  std::vector<std::size_t> next_reset;              ///< [k]: snap(w_k)

  std::size_t size() const { return delta_states.size(); }
  std::size_t zero_index() const { return size() / 2; }
  std::size_t snap(double v) const;
  /// Index of a lattice state; throws std::invalid_argument if delta is not one.
  std::size_t index_of(double delta) const;
  std::size_t next(std::size_t i, int u, int c, std::size_t k) const {
    return u * c == 1 ? next_reset[k] : next_idle[i][k];
  }
};

/// n_delta odd >= 3, noise_points in {2, 3, 5}. The noise law is the
/// moment-matched (Gauss-Hermite) quantization of N(0, sigma^2). Without
/// `delta_q` the lattice spacing equals the smallest positive noise value,
/// so idle transitions from the origin land on lattice states.
QuantizedChain quantize(const ModelParams& params, int n_delta, int noise_points,
                        std::optional<double> delta_q = std::nullopt);

/// u = policy(stage, state index, c)
using ChainPolicy = std::function<int(int, std::size_t, int)>;

/// Decisions per [stage][c][i]. kUnvisited marks entries the producer did
/// not determine (unreachable or zero-probability states).
inline constexpr std::uint8_t kUnvisited = 2;
using ChainPolicyTable = std::vector<std::array<std::vector<std::uint8_t>, 2>>;

inline constexpr int kMaxExactHorizon = 4096;

/// E[exp(gamma * sum_{t=0}^{T} d)] from (delta0, c0) by a forward pass over
/// state-indexed multiplicative accumulators.
double exact_policy_cost(const QuantizedChain& chain, const ChainPolicy& policy, double delta0,
                         int c0);
double exact_policy_cost(const QuantizedChain& chain, const ChainPolicyTable& policy,
                         double delta0, int c0);

struct BackwardInduction {
  /// value[k][c][i] = V_k, k = 0..T+1, linear domain (V_0 = 1).
  std::vector<std::array<std::vector<double>, 2>> value;
  /// Relative gap |Q_0 - Q_1| / min(Q_0, Q_1) per [stage][c][i].
  std::vector<std::array<std::vector<double>, 2>> relative_gap;
  ChainPolicyTable policy;  ///< by decision stage; ties go to u = 0

  double value_at(std::size_t i, int c) const { return value.back()[c][i]; }
};

BackwardInduction backward_induction(const QuantizedChain& chain);

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StartCertificate {
  std::size_t delta_index = 0;
  int c0 = 0;
  double enumeration_value = 0.0;  ///< minimum found by enumeration
  double backward_value = 0.0;     ///< V_{T+1} from backward induction
  double certified_cost = 0.0;     ///< exact_policy_cost of the enumerated minimizer
  std::uint64_t policies_enumerated = 0;
  int decision_bits = 0;
  /// Minimizer on states visited with positive probability; kUnvisited elsewhere.
  ChainPolicyTable policy;
  /// Visited states where the minimizer differs from backward induction
  /// although the backward Q-gap exceeds the tie tolerance.
  std::size_t disagreements = 0;

  double max_relative_discrepancy() const;
};

struct BruteForceResult {
  BackwardInduction backward;
  std::vector<StartCertificate> starts;
};

struct EnumerationLimits {
  int max_decision_bits = 34;
  double tie_tolerance = 1e-9;
  unsigned threads = 0;
};

/// Enumerates every deterministic Markov policy restricted to the states
/// reachable from each start (decisions elsewhere cannot change the value),
/// evaluates each exactly and keeps the minimizer; also runs backward
/// induction. Default starts: delta = 0 in both channel states. Throws
/// BudgetExceeded when a start needs more than max_decision_bits decisions.
BruteForceResult brute_force_optimal(const QuantizedChain& chain,
                                     std::vector<std::pair<double, int>> starts = {},
                                     const EnumerationLimits& limits = {});

}  // namespace rsched
