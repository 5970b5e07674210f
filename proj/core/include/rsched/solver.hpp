#pragma once

// Finite-horizon risk-sensitive value iteration in the log domain.
//
// Tables are indexed by the number of Bellman applications k (stages to
// go): W[0] = 0 because V_0 = 1, and W[k+1] = min_u log Q_{k+1}. A horizon
// T (decision stages 0..T) needs k = 0..T+1, so the value of the problem
// from (delta, c) at stage 0 is W[T+1](delta, c). Decision stage s uses
// the minimizer stored at k = T+1-s.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsched/densities.hpp"
#include "rsched/grid.hpp"
#include "rsched/params.hpp"
#include "rsched/quadrature.hpp"

namespace rsched {

/// Raised when a Gaussian integral of the value iterate diverges (or its
/// log leaves the representable range) at Bellman application `stage`.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(int stage, const std::string& detail);
  int stage() const { return stage_; }

 private:
  int stage_;
};

/// Per-(k, c, node) storage.
template <typename T>
struct StageTable {
  std::vector<std::array<std::vector<T>, 2>> data;

  StageTable() = default;
  StageTable(std::size_t stages, std::size_t nodes, T fill = T{}) {
    data.resize(stages);
    for (auto& s : data) s = {std::vector<T>(nodes, fill), std::vector<T>(nodes, fill)};
  }

  std::size_t stages() const { return data.size(); }
  std::size_t nodes() const { return data.empty() ? 0 : data[0][0].size(); }
  T& operator()(std::size_t k, int c, std::size_t i) { return data[k][c][i]; }
  const T& operator()(std::size_t k, int c, std::size_t i) const { return data[k][c][i]; }
};

using LogValueTable = StageTable<double>;
using PolicyTable = StageTable<std::uint8_t>;
/// Both channel slices of one iterate.
using StageValues = std::array<std::vector<double>, 2>;

/// Exponent recursion of the never-transmit value, exp(log K_t + beta_t delta^2).
struct FeasibilityReport {
  std::vector<double> beta;   ///< beta[0..]; stops after the first violation
  std::vector<double> log_k;  ///< log K_t, same length as beta
  bool feasible = true;
  std::optional<int> first_violation_stage;
  int horizon = 0;
};

/// beta_{t+1} = gamma + a^2 beta_t / (1 - 2 sigma^2 beta_t), beta_0 = 0;
/// feasible iff 2 sigma^2 beta_t < 1 for every t <= horizon.
FeasibilityReport check_feasibility(const ModelParams& params);

/// log of the value after t Bellman applications with u == 0 forever
/// (normalized kernels). Throws InfeasibleError when the recursion breaks
/// down before t.
double closed_form_never_transmit(const ModelParams& params, double delta, int t);

struct GridSpec {
  std::optional<double> delta_max;  ///< nullopt: derived from the never-transmit envelope
  std::optional<int> n_points;      ///< nullopt: spacing close to target_spacing
  double target_spacing = 0.01;
};

/// Relative Gaussian tail mass of the stage-T envelope outside [-delta_max, delta_max].
double truncation_tail_mass(const ModelParams& params, double delta_max);

inline constexpr double kTruncationTolerance = 1e-10;

/// Resolves a GridSpec for `space`. Requires feasible params when delta_max
/// is automatic.
Grid make_grid(const ModelParams& params, const GridSpec& spec, Space space);

/// Per channel state, the |delta| locations where W_k is not smooth
/// (the grid nodes on either side of a policy switch).
using Breakpoints = std::array<std::vector<double>, 2>;

/// Breakpoints of iterate k read off its policy row.
Breakpoints policy_breakpoints(const PolicyTable& policy, const Grid& grid, std::size_t k);

/// One Bellman application bound to a fixed iterate W_k.
class BellmanStage {
 public:
  BellmanStage(const ModelParams& params, const Grid& grid, const QuadratureSpec& quad,
               const StageValues& w, KernelNorm norm = KernelNorm::normalized,
               int stage = 0, Breakpoints kinks = {});

  /// log of the integral of kernel(y; mean) * exp(W_k(y, c_next)) over the
  /// grid's state space (the folded kernel on the folded grid).
  double log_expect(int c_next, double mean) const;

  /// log Q_{k+1}(delta, c; 0)
  double log_q_idle(double delta, int c) const;
  /// log Q_{k+1}(delta, c; 1); for c == 1 it does not depend on delta.
  double log_q_transmit(double delta, int c) const;

 private:
  double log_expect_hermite(int c_next, double mean) const;
  double log_expect_split(int c_next, double mean, double lo, double hi) const;
  double log_expect_trapezoid(int c_next, double mean) const;

  const ModelParams* params_;
  const Grid* grid_;
  QuadratureSpec quad_;
  const StageValues* w_;
  KernelNorm norm_;
  ChannelMatrix p_;
  std::array<double, 2> tail_slope_{};
  const GaussHermiteRule* rule_ = nullptr;
  const GaussLegendreRule* legendre_ = nullptr;
  std::array<std::vector<double>, 2> kinks_{};  ///< symmetric, ascending
  bool flat_ = false;  ///< W_k == 0 everywhere
  double kernel_log_mass_ = 0.0;
};

struct SolveOptions {
  KernelNorm norm = KernelNorm::normalized;
  /// Pins the action instead of minimizing (used for envelope checks).
  std::optional<int> forced_action;
  /// Worker threads for the per-node loop; 0 picks hardware concurrency.
  unsigned threads = 0;
};

struct SolveResult {
  ModelParams params;
  Grid grid;
  QuadratureSpec quad;
  KernelNorm norm = KernelNorm::normalized;
  LogValueTable log_value{};       ///< [0..T+1]
  LogValueTable log_q_idle{};      ///< [0..T+1]; entry 0 unused (zeros)
  LogValueTable log_q_transmit{};  ///< [0..T+1]; entry 0 unused (zeros)
  PolicyTable policy{};            ///< [0..T+1]; entry 0 unused (zeros)
  FeasibilityReport feasibility{};
  double tail_mass = 0.0;
  bool truncation_ok = true;

  /// |log Q_idle - log Q_transmit| at (k, c, i).
  double q_gap(std::size_t k, int c, std::size_t i) const;
  /// W[T+1] at the node nearest to delta.
  double value_at_start(double delta, int c) const;
};

/// Value iteration on `grid` (original or folded). Throws InfeasibleError
/// when the feasibility check fails or a stage overflows. Ties go to u = 0.
SolveResult value_iterate(const ModelParams& params, const Grid& grid,
                          const QuadratureSpec& quad, const SolveOptions& options = {});

/// Additive (gamma -> 0) counterpart: V[k+1] = min_u d + E V[k], V[0] = 0.
struct RiskNeutralResult {
  LogValueTable value;  ///< linear-domain values, same indexing as log_value
  PolicyTable policy;
};

RiskNeutralResult risk_neutral_value_iterate(const ModelParams& params, const Grid& grid,
                                             const QuadratureSpec& quad);

}  // namespace rsched
