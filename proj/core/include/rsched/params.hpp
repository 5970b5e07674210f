#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace rsched {

/// Scalar parameters of one problem instance.
///
/// The horizon counts decision stages 0..horizon, so a solve performs
/// horizon + 1 Bellman applications and accumulates horizon + 1 stage costs.
struct ModelParams {
  double a = 0.9;        ///< source gain
  double sigma2 = 1.0;   ///< process noise variance
  double lambda = 1.0;   ///< price of one transmission attempt
  double gamma = 0.05;   ///< risk-sensitivity
  int horizon = 5;       ///< last decision stage T
  double p01 = 0.3;      ///< bad -> good probability
  double p10 = 0.2;      ///< good -> bad probability

  double sigma() const;

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

/// Two-state Gilbert-Elliott transition matrix, p[c][c_next].
struct ChannelMatrix {
  std::array<std::array<double, 2>, 2> p{};

  static ChannelMatrix from(const ModelParams& params);
  double operator()(int c, int c_next) const { return p[c][c_next]; }

  /// Long-run fraction of time in the good state; throws when p01 + p10 == 0.
  double stationary_good() const;
};

inline void require_binary(int v, const char* what) {
  if (v != 0 && v != 1) {
    throw std::invalid_argument(std::string(what) + " must be 0 or 1");
  }
}

}  // namespace rsched
