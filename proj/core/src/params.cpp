#include "rsched/params.hpp"

#include <cmath>
#include <sstream>

namespace rsched {

double ModelParams::sigma() const { return std::sqrt(sigma2); }

void ModelParams::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (!std::isfinite(a)) fail("a must be finite");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) fail("sigma2 must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail("lambda must be > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be > 0");
  if (horizon < 0) fail("T must be >= 0");
  if (!(p01 >= 0.0 && p01 <= 1.0)) fail("p01 must lie in [0,1]");
  if (!(p10 >= 0.0 && p10 <= 1.0)) fail("p10 must lie in [0,1]");
}

ChannelMatrix ChannelMatrix::from(const ModelParams& params) {
  ChannelMatrix m;
  m.p[0] = {1.0 - params.p01, params.p01};
  m.p[1] = {params.p10, 1.0 - params.p10};
  return m;
}

double ChannelMatrix::stationary_good() const {
  const double s = p[0][1] + p[1][0];
  if (s <= 0.0) {
    throw std::invalid_argument(
        "channel has no unique stationary law (p01 + p10 == 0); set c0 explicitly");
  }
  return p[0][1] / s;
}

}  // namespace rsched
