#pragma once

#include <string>
#include <vector>

namespace rsched {

enum class QuadRule { gauss_hermite, trapezoid };

struct QuadratureSpec {
  QuadRule rule = QuadRule::gauss_hermite;
  int n_nodes = 64;

  void validate() const;
};

std::string to_string(QuadRule rule);
QuadRule parse_quad_rule(const std::string& name);

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
///
/// Nodes are produced by Newton iteration on the orthonormal Hermite
/// recurrence and mirrored, so node[n-1-k] == -node[k] exactly.
struct GaussHermiteRule {
  std::vector<double> nodes;        ///< ascending
  std::vector<double> log_weights;  ///< log w_k, sum_k w_k = sqrt(pi)

  static GaussHermiteRule make(int n);
};

/// Gauss-Legendre rule on [-1, 1]; node[n-1-k] == -node[k] exactly.
struct GaussLegendreRule {
  std::vector<double> nodes;        ///< ascending
  std::vector<double> log_weights;  ///< log w_k, sum_k w_k = 2

  static GaussLegendreRule make(int n);
};

/// Probabilists' rule for a standard normal: nodes x_k * sqrt(2), weights
/// w_k / sqrt(pi). Matches the first 2n-1 moments of N(0,1).
struct NormalQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  static NormalQuadrature make(int n);
};

}  // namespace rsched
