#include "rsched/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsched {

void QuadratureSpec::validate() const {
  if (rule == QuadRule::gauss_hermite && (n_nodes < 8 || n_nodes > 200)) {
    throw std::invalid_argument("quad_nodes must lie in [8, 200] for the Hermite rule");
  }
}

std::string to_string(QuadRule rule) {
  return rule == QuadRule::gauss_hermite ? "gauss-hermite" : "trapezoid";
}

QuadRule parse_quad_rule(const std::string& name) {
  if (name == "gauss-hermite" || name == "gauss-hermite-centered" || name == "hermite") {
    return QuadRule::gauss_hermite;
  }
  if (name == "trapezoid" || name == "trapezoid-on-grid") return QuadRule::trapezoid;
  throw std::invalid_argument("unknown quadrature rule '" + name + "'");
}

GaussHermiteRule GaussHermiteRule::make(int n) {
  if (n < 1) throw std::invalid_argument("Hermite rule needs at least one node");
  constexpr double kPiM4 = 0.7511255444649425;  // pi^(-1/4)
  constexpr int kMaxIt = 100;

  const int half = (n + 1) / 2;
  std::vector<double> x(n), lw(n);
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    // Starting guesses for the largest roots, then extrapolate inward.
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < kMaxIt; ++it) {
      double p1 = kPiM4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    if (n % 2 == 1 && i == half - 1) z = 0.0;
    x[i] = z;
    x[n - 1 - i] = -z;
    lw[i] = lw[n - 1 - i] = std::log(2.0) - 2.0 * std::log(std::abs(pp));
  }

  GaussHermiteRule rule;
  rule.nodes.assign(x.rbegin(), x.rend());
  rule.log_weights.assign(lw.rbegin(), lw.rend());
  return rule;
}

GaussLegendreRule GaussLegendreRule::make(int n) {
  if (n < 1) throw std::invalid_argument("Legendre rule needs at least one node");
  constexpr int kMaxIt = 100;
  const int half = (n + 1) / 2;
  std::vector<double> x(n), lw(n);
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < kMaxIt; ++it) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15) break;
    }
    if (n % 2 == 1 && i == half - 1) z = 0.0;
    x[i] = z;
    x[n - 1 - i] = -z;
    lw[i] = lw[n - 1 - i] = std::log(2.0 / ((1.0 - z * z) * pp * pp));
  }
  GaussLegendreRule rule;
  rule.nodes.assign(x.rbegin(), x.rend());
  rule.log_weights.assign(lw.rbegin(), lw.rend());
  return rule;
}

NormalQuadrature NormalQuadrature::make(int n) {
  const auto gh = GaussHermiteRule::make(n);
  NormalQuadrature q;
  for (int k = 0; k < n; ++k) {
    q.nodes.push_back(std::numbers::sqrt2 * gh.nodes[k]);
    q.weights.push_back(std::exp(gh.log_weights[k]) / std::sqrt(std::numbers::pi));
  }
  return q;
}

}  // namespace rsched
