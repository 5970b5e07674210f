#pragma once

// Threshold extraction and decision rules.

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsched/grid.hpp"
#include "rsched/solver.hpp"

namespace rsched {

inline constexpr double kNoTransmit = std::numeric_limits<double>::infinity();

/// threshold[s][c] for decision stage s = 0..T: transmit iff |delta| >= threshold.
struct ThresholdSchedule {
  std::vector<std::array<double, 2>> threshold;

  int horizon() const { return static_cast<int>(threshold.size()) - 1; }
  double at(int stage, int c) const;
};

/// The transmit set at (iterate, c) is not closed upward in |delta|.
class NonThresholdPolicy : public std::runtime_error {
 public:
  NonThresholdPolicy(int iterate, int c, std::size_t node, double delta);
  int iterate() const { return iterate_; }
  int channel() const { return c_; }
  std::size_t node() const { return node_; }

 private:
  int iterate_;
  int c_;
  std::size_t node_;
};

/// Converts a policy table indexed by Bellman application (1..T+1) into a
/// schedule indexed by decision stage (stage s <- iterate T+1-s). Works on
/// the folded grid directly; on the original grid the table must be even and
/// its non-negative half is used. Throws NonThresholdPolicy when some
/// transmit set is not an up-set.
ThresholdSchedule extract_thresholds(const PolicyTable& policy, const Grid& grid);

/// transmit iff |delta| >= threshold[stage][c]
int decide(const ThresholdSchedule& schedule, double delta, int c, int stage);

/// Decision rule read straight off a folded policy table: the action at the
/// folded node nearest below |delta|, clamped to the last node.
class UnfoldedPolicy {
 public:
  UnfoldedPolicy(PolicyTable folded, Grid grid);

  int operator()(double delta, int c, int stage) const;
  int horizon() const { return static_cast<int>(table_.stages()) - 2; }

 private:
  PolicyTable table_;
  Grid grid_;
};

UnfoldedPolicy unfold_policy(const PolicyTable& folded, const Grid& grid);

/// Schedule with every threshold at +inf.
ThresholdSchedule idle_schedule(int horizon);
/// threshold 0 in both channel states at every stage.
ThresholdSchedule always_schedule(int horizon);

}  // namespace rsched
