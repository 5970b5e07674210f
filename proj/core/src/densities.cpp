#include "rsched/densities.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rsched {

double psi(double v, double sigma2) { return std::exp(-v * v / (2.0 * sigma2)); }

double varphi(double v, double s, double sigma2) {
  return psi(v - s, sigma2) + psi(v + s, sigma2);
}

double log_gauss_normalizer(double sigma2) {
  return 0.5 * std::log(2.0 * std::numbers::pi * sigma2);
}

double log_gauss(double v, double sigma2, KernelNorm norm) {
  const double e = -v * v / (2.0 * sigma2);
  return norm == KernelNorm::normalized ? e - log_gauss_normalizer(sigma2) : e;
}

double trans_density(double delta_next, int c_next, double delta, int c, int u,
                     const ModelParams& params, KernelNorm norm) {
  require_binary(c_next, "next channel state");
  require_binary(c, "channel state");
  require_binary(u, "action");
  const auto p = ChannelMatrix::from(params);
  const double scale = norm == KernelNorm::normalized
                           ? 1.0 / std::sqrt(2.0 * std::numbers::pi * params.sigma2)
                           : 1.0;
  auto gauss = [&](double mean) { return scale * psi(delta_next - mean, params.sigma2); };

  const double drift = gauss(params.a * delta);
  if (u == 0) return p(c, c_next) * drift;
  return c * p(c, c_next) * gauss(0.0) + (1 - c) * p(c, c_next) * drift;
}

double folded_density(double delta_next, int c_next, double delta, int c, int u,
                      const ModelParams& params, KernelNorm norm) {
  if (delta_next < 0.0 || delta < 0.0) {
    throw std::invalid_argument("folded kernel is defined on non-negative errors only");
  }
  return trans_density(delta_next, c_next, delta, c, u, params, norm) +
         trans_density(-delta_next, c_next, delta, c, u, params, norm);
}

}  // namespace rsched
