#include "rsched/model.hpp"

#include <stdexcept>

namespace rsched {

double step_source(double x, double w, const ModelParams& params) {
  return params.a * x + w;
}

int step_channel(int c, double uniform_draw, const ModelParams& params) {
  require_binary(c, "channel state");
  if (!(uniform_draw >= 0.0 && uniform_draw < 1.0)) {
    throw std::invalid_argument("channel draw must lie in [0,1)");
  }
  if (c == 0) return uniform_draw < params.p01 ? 1 : 0;
  return uniform_draw < params.p10 ? 0 : 1;
}

double update_estimate(double x_hat_prev, double x, int u, int c,
                       const ModelParams& params) {
  require_binary(u, "action");
  require_binary(c, "channel state");
  return u * c == 1 ? x : params.a * x_hat_prev;
}

double step_error(double delta, double w, int u, int c, const ModelParams& params) {
  require_binary(u, "action");
  require_binary(c, "channel state");
  return u * c == 1 ? w : params.a * delta + w;
}

double stage_cost(double delta, int c, int u, const ModelParams& params) {
  require_binary(u, "action");
  require_binary(c, "channel state");
  return params.lambda * u + (1 - u * c) * delta * delta;
}

double stage_cost_raw(double x, double x_hat, int u, const ModelParams& params) {
  require_binary(u, "action");
  const double e = x - x_hat;
  return params.lambda * u + e * e;
}

}  // namespace rsched
