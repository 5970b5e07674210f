#pragma once

// Closed-loop dynamics of the sensor / Gilbert-Elliott channel / estimator
// system, and the per-stage costs in both coordinates.

#include "rsched/params.hpp"

namespace rsched {

struct SystemState {
  double x = 0.0;           ///< source state x(t)
  double x_hat_prev = 0.0;  ///< estimate x_hat(t-1)
  int c = 1;                ///< channel state, 1 = good
};

/// Error-coordinate state (delta = x - a * x_hat_prev, c).
struct MdpState {
  double delta = 0.0;
  int c = 1;
};

/// x(t+1) = a x(t) + w(t)
double step_source(double x, double w, const ModelParams& params);

/// Advances the channel given a uniform draw in [0,1).
/// From the bad state the chain moves to good iff draw < p01; from the good
/// state it moves to bad iff draw < p10.
int step_channel(int c, double uniform_draw, const ModelParams& params);

/// Estimator update: the packet lands only when u * c == 1.
double update_estimate(double x_hat_prev, double x, int u, int c,
                       const ModelParams& params);

/// delta(t+1): w after a delivery, a * delta + w otherwise.
double step_error(double delta, double w, int u, int c, const ModelParams& params);

/// d(delta, c, u) = lambda u + (1 - u c) delta^2
double stage_cost(double delta, int c, int u, const ModelParams& params);

/// g(x, x_hat, u) = lambda u + (x - x_hat)^2
double stage_cost_raw(double x, double x_hat, int u, const ModelParams& params);

}  // namespace rsched
