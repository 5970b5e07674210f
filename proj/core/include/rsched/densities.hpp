#pragma once

// Transition kernels of the error/channel MDP and its folded counterpart.

#include "rsched/params.hpp"

namespace rsched {

/// Whether the Gaussian factor carries 1/sqrt(2 pi sigma^2).
enum class KernelNorm { normalized, unnormalized };

/// Unnormalized Gaussian kernel exp(-v^2 / (2 sigma^2)).
double psi(double v, double sigma2);

/// psi(v - s) + psi(v + s)
double varphi(double v, double s, double sigma2);

/// log of the Gaussian factor: -v^2/(2 sigma^2), minus the log normalizer
/// when `norm` is normalized.
double log_gauss(double v, double sigma2, KernelNorm norm);

/// Normalizer log sqrt(2 pi sigma^2).
double log_gauss_normalizer(double sigma2);

/// Density of (delta_next, c_next) given (delta, c) under action u.
double trans_density(double delta_next, int c_next, double delta, int c, int u,
                     const ModelParams& params,
                     KernelNorm norm = KernelNorm::normalized);

/// Folded kernel on [0, inf): trans_density at +delta_next plus at -delta_next.
/// Throws std::invalid_argument for negative delta or delta_next.
double folded_density(double delta_next, int c_next, double delta, int c, int u,
                      const ModelParams& params,
                      KernelNorm norm = KernelNorm::normalized);

}  // namespace rsched
