#include "rsched/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rsched {

double ThresholdSchedule::at(int stage, int c) const {
  if (stage < 0 || stage >= static_cast<int>(threshold.size())) {
    throw std::out_of_range("stage " + std::to_string(stage) + " outside schedule");
  }
  require_binary(c, "channel state");
  return threshold[stage][c];
}

namespace {

std::string violation_message(int iterate, int c, std::size_t node, double delta) {
  std::ostringstream os;
  os << "transmit set is not an up-set in |delta| at iterate " << iterate << ", channel " << c
     << ", node " << node << " (delta = " << delta << ")";
  return os.str();
}

}  // namespace

NonThresholdPolicy::NonThresholdPolicy(int iterate, int c, std::size_t node, double delta)
    : std::runtime_error(violation_message(iterate, c, node, delta)),
      iterate_(iterate),
      c_(c),
      node_(node) {}

ThresholdSchedule extract_thresholds(const PolicyTable& policy, const Grid& grid) {
  if (policy.stages() < 2) throw std::invalid_argument("policy table has no decision stage");
  if (policy.nodes() != grid.size()) throw std::invalid_argument("policy/grid size mismatch");

  const int horizon = static_cast<int>(policy.stages()) - 2;
  const std::size_t zero = grid.zero_index();
  ThresholdSchedule out;
  out.threshold.resize(static_cast<std::size_t>(horizon) + 1);

  for (int s = 0; s <= horizon; ++s) {
    const auto k = static_cast<std::size_t>(horizon + 1 - s);
    for (int c = 0; c < 2; ++c) {
      const auto& row = policy.data[k][c];
      if (grid.space() == Space::original) {
        for (std::size_t i = 0; i < zero; ++i) {
          if (row[i] != row[grid.mirror(i)]) {
            throw NonThresholdPolicy(static_cast<int>(k), c, i, grid.node(i));
          }
        }
      }
      double threshold = kNoTransmit;
      bool inside = false;
      for (std::size_t i = zero; i < grid.size(); ++i) {
        if (row[i] == 1 && !inside) {
          inside = true;
          threshold = grid.node(i);
        } else if (row[i] == 0 && inside) {
          throw NonThresholdPolicy(static_cast<int>(k), c, i, grid.node(i));
        }
      }
      out.threshold[s][c] = threshold;
    }
  }
  return out;
}

int decide(const ThresholdSchedule& schedule, double delta, int c, int stage) {
  return std::abs(delta) >= schedule.at(stage, c) ? 1 : 0;
}

UnfoldedPolicy::UnfoldedPolicy(PolicyTable folded, Grid grid)
    : table_(std::move(folded)), grid_(std::move(grid)) {
  if (grid_.space() != Space::folded) {
    throw std::invalid_argument("unfold_policy expects a folded grid");
  }
  if (table_.nodes() != grid_.size() || table_.stages() < 2) {
    throw std::invalid_argument("policy/grid size mismatch");
  }
}

int UnfoldedPolicy::operator()(double delta, int c, int stage) const {
  require_binary(c, "channel state");
  const int t = horizon();
  if (stage < 0 || stage > t) throw std::out_of_range("stage outside policy horizon");
  const auto j = static_cast<long>(std::floor(std::abs(delta) / grid_.spacing()));
  const auto i = static_cast<std::size_t>(std::min<long>(j, grid_.half()));
  return table_(static_cast<std::size_t>(t + 1 - stage), c, i);
}

UnfoldedPolicy unfold_policy(const PolicyTable& folded, const Grid& grid) {
  return UnfoldedPolicy(folded, grid);
}

ThresholdSchedule idle_schedule(int horizon) {
  ThresholdSchedule s;
  s.threshold.assign(static_cast<std::size_t>(horizon) + 1, {kNoTransmit, kNoTransmit});
  return s;
}

ThresholdSchedule always_schedule(int horizon) {
  ThresholdSchedule s;
  s.threshold.assign(static_cast<std::size_t>(horizon) + 1, {0.0, 0.0});
  return s;
}

}  // namespace rsched
