#include "rsched/solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "rsched/logmath.hpp"
#include "rsched/model.hpp"
#include "rsched/parallel.hpp"

namespace rsched {

namespace {

// Width of the integration window in standard deviations of the product
// Gaussian; exp(-14^2/2) is below double resolution of any retained term.
constexpr double kWindowSigmas = 14.0;

template <class Rule>
const Rule& cached_rule(int n) {
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Rule::make(n)).first;
  return it->second;
}

std::string stage_message(int stage) {
  return "infeasible at stage " + std::to_string(stage);
}

}  // namespace

InfeasibleError::InfeasibleError(int stage, const std::string& detail)
    : std::runtime_error(stage_message(stage) + (detail.empty() ? "" : ": " + detail)),
      stage_(stage) {}

FeasibilityReport check_feasibility(const ModelParams& params) {
  params.validate();
  FeasibilityReport r;
  r.horizon = params.horizon;
  r.beta.push_back(0.0);
  r.log_k.push_back(0.0);
  // beta_{T+1} and K_{T+1} are reported for the closed form; only
  // beta_0..beta_T enter a Gaussian integral.
  for (int t = 0; t <= params.horizon; ++t) {
    const double b = r.beta.back();
    const double shrink = 1.0 - 2.0 * params.sigma2 * b;
    if (!(shrink > 0.0)) {
      r.feasible = false;
      r.first_violation_stage = t;
      return r;
    }
    r.log_k.push_back(r.log_k.back() - 0.5 * std::log(shrink));
    r.beta.push_back(params.gamma + params.a * params.a * b / shrink);
  }
  return r;
}

double closed_form_never_transmit(const ModelParams& params, double delta, int t) {
  if (t < 0) throw std::invalid_argument("stage count must be >= 0");
  ModelParams p = params;
  p.horizon = std::max(t - 1, 0);
  const auto report = check_feasibility(p);
  if (!report.feasible || static_cast<int>(report.beta.size()) <= t) {
    throw InfeasibleError(report.first_violation_stage.value_or(t),
                          "never-transmit envelope diverges");
  }
  return report.log_k[t] + report.beta[t] * delta * delta;
}

double truncation_tail_mass(const ModelParams& params, double delta_max) {
  const auto report = check_feasibility(params);
  if (!report.feasible) return 1.0;
  const double beta_t = report.beta[params.horizon];
  const double sigma_eff =
      std::sqrt(params.sigma2 / (1.0 - 2.0 * params.sigma2 * beta_t));
  return std::erfc(delta_max / (std::numbers::sqrt2 * sigma_eff));
}

Grid make_grid(const ModelParams& params, const GridSpec& spec, Space space) {
  double delta_max = 0.0;
  if (spec.delta_max) {
    delta_max = *spec.delta_max;
  } else {
    const auto report = check_feasibility(params);
    if (!report.feasible) {
      throw InfeasibleError(*report.first_violation_stage, "cannot size the grid");
    }
    const double beta_t = report.beta[params.horizon];
    const double sigma_eff =
        std::sqrt(params.sigma2 / (1.0 - 2.0 * params.sigma2 * beta_t));
    // Smallest z with erfc(z / sqrt 2) <= tolerance, by bisection.
    double lo = 0.0;
    double hi = 40.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (std::erfc(mid / std::numbers::sqrt2) > kTruncationTolerance ? lo : hi) = mid;
    }
    delta_max = std::ceil(hi * sigma_eff / 0.5) * 0.5;
  }
  int n_points = 0;
  if (spec.n_points) {
    n_points = *spec.n_points;
  } else {
    const long half = std::max(1L, std::lround(delta_max / spec.target_spacing));
    n_points = static_cast<int>(2 * half + 1);
  }
  return Grid(space, delta_max, n_points);
}

Breakpoints policy_breakpoints(const PolicyTable& policy, const Grid& grid, std::size_t k) {
  Breakpoints out;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = grid.zero_index() + 1; i < grid.size(); ++i) {
      if (policy(k, c, i) == policy(k, c, i - 1)) continue;
      const double a = std::abs(grid.node(i - 1));
      if (out[c].empty() || out[c].back() != a) out[c].push_back(a);
      out[c].push_back(std::abs(grid.node(i)));
    }
  }
  return out;
}

BellmanStage::BellmanStage(const ModelParams& params, const Grid& grid,
                           const QuadratureSpec& quad, const StageValues& w,
                           KernelNorm norm, int stage, Breakpoints kinks)
    : params_(&params),
      grid_(&grid),
      quad_(quad),
      w_(&w),
      norm_(norm),
      p_(ChannelMatrix::from(params)) {
  quad_.validate();
  for (int c = 0; c < 2; ++c) {
    tail_slope_[c] = std::max(0.0, SquaredInterpolator(grid, w[c]).tail_slope());
    if (!(2.0 * params.sigma2 * tail_slope_[c] < 1.0)) {
      throw InfeasibleError(stage, "value iterate grows too fast to integrate");
    }
  }
  if (quad_.rule == QuadRule::gauss_hermite) {
    rule_ = &cached_rule<GaussHermiteRule>(quad_.n_nodes);
    legendre_ = &cached_rule<GaussLegendreRule>(quad_.n_nodes);
  }
  for (int c = 0; c < 2; ++c) {
    auto& pts = kinks[c];
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      if (*it > 0.0) kinks_[c].push_back(-*it);
    }
    kinks_[c].insert(kinks_[c].end(), pts.begin(), pts.end());
  }
  flat_ = std::all_of(w[0].begin(), w[0].end(), [](double v) { return v == 0.0; }) &&
          std::all_of(w[1].begin(), w[1].end(), [](double v) { return v == 0.0; });
  // Integral of the kernel itself: 1, or sqrt(2 pi sigma^2) without the normalizer.
  kernel_log_mass_ = norm == KernelNorm::normalized ? 0.0 : log_gauss_normalizer(params.sigma2);
}

// The Hermite rule is centered on the Gaussian obtained by combining the
// kernel with the iterate's tail growth exp(s y^2): mean m / (1 - 2 sigma^2 s),
// variance sigma^2 / (1 - 2 sigma^2 s). With s = 0 this is the kernel itself.
// If W_k has a kink inside the window the integral is split there instead.
double BellmanStage::log_expect_hermite(int c_next, double mean) const {
  const double sigma2 = params_->sigma2;
  const double shrink = 1.0 - 2.0 * sigma2 * tail_slope_[c_next];
  const double sigma_star = std::sqrt(sigma2 / shrink);
  const double mu_star = mean / shrink;
  const double lo = mu_star - kWindowSigmas * sigma_star;
  const double hi = mu_star + kWindowSigmas * sigma_star;
  const auto& kinks = kinks_[c_next];
  if (std::any_of(kinks.begin(), kinks.end(), [&](double b) { return b > lo && b < hi; })) {
    return log_expect_split(c_next, mean, lo, hi);
  }
  const double scale = std::numbers::sqrt2 * sigma_star;
  const double log_scale = std::log(scale);
  const SquaredInterpolator w(*grid_, (*w_)[c_next]);

  std::array<double, 200> terms{};
  const std::size_t n = rule_->nodes.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double x = rule_->nodes[k];
    const double y = mu_star + scale * x;
    terms[k] = rule_->log_weights[k] + x * x + log_scale +
               log_gauss(y - mean, sigma2, norm_) + w(y);
  }
  return log_sum_exp_symmetric(std::span<const double>(terms.data(), n));
}

// Gauss-Legendre on each piece of [lo, hi] between kinks. Pieces and nodes
// are built so that mean -> -mean mirrors every abscissa exactly.
double BellmanStage::log_expect_split(int c_next, double mean, double lo, double hi) const {
  const double sigma2 = params_->sigma2;
  const SquaredInterpolator w(*grid_, (*w_)[c_next]);
  thread_local std::vector<double> edges;
  thread_local std::vector<double> terms;
  edges.assign(1, lo);
  for (double b : kinks_[c_next]) {
    if (b > lo && b < hi) edges.push_back(b);
  }
  edges.push_back(hi);
  terms.clear();
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double mid = 0.5 * (edges[j] + edges[j + 1]);
    const double half = 0.5 * (edges[j + 1] - edges[j]);
    const double log_half = std::log(half);
    for (std::size_t k = 0; k < legendre_->nodes.size(); ++k) {
      const double y = mid + half * legendre_->nodes[k];
      terms.push_back(legendre_->log_weights[k] + log_half + log_gauss(y - mean, sigma2, norm_) +
                      w(y));
    }
  }
  return log_sum_exp_symmetric(terms);
}

double BellmanStage::log_expect_trapezoid(int c_next, double mean) const {
  const double sigma2 = params_->sigma2;
  const double shrink = 1.0 - 2.0 * sigma2 * tail_slope_[c_next];
  const double sigma_star = std::sqrt(sigma2 / shrink);
  const double mu_star = mean / shrink;
  const double h = grid_->spacing();
  const double log_h = std::log(h);
  const SquaredInterpolator w(*grid_, (*w_)[c_next]);

  if (grid_->space() == Space::original) {
    const double lo = std::min(mean, mu_star) - kWindowSigmas * sigma_star;
    const double hi = std::max(mean, mu_star) + kWindowSigmas * sigma_star;
    const auto jlo = static_cast<long>(std::floor(lo / h));
    const auto jhi = static_cast<long>(std::ceil(hi / h));
    thread_local std::vector<double> terms;
    terms.clear();
    for (long j = jlo; j <= jhi; ++j) {
      const double y = static_cast<double>(j) * h;
      terms.push_back(log_h + log_gauss(y - mean, sigma2, norm_) + w.at_offset(j));
    }
    return log_sum_exp_symmetric(terms);
  }

  // Folded kernel on [0, inf): g(y - m) + g(y + m), half weight at 0.
  LogSumExp acc;
  const double am = std::abs(mean);
  const double amu = std::abs(mu_star);
  const double lo = std::max(0.0, std::min(am, amu) - kWindowSigmas * sigma_star);
  const double hi = std::max(am, amu) + kWindowSigmas * sigma_star;
  const auto jlo = static_cast<long>(std::floor(lo / h));
  const auto jhi = static_cast<long>(std::ceil(hi / h));
  for (long j = jlo; j <= jhi; ++j) {
    const double y = static_cast<double>(j) * h;
    const double kernel =
        log_add(log_gauss(y - mean, sigma2, norm_), log_gauss(y + mean, sigma2, norm_));
    const double weight = j == 0 ? log_h - std::numbers::ln2 : log_h;
    acc.add(weight + kernel + w.at_offset(j));
  }
  return acc.value();
}

double BellmanStage::log_expect(int c_next, double mean) const {
  require_binary(c_next, "next channel state");
  return quad_.rule == QuadRule::gauss_hermite ? log_expect_hermite(c_next, mean)
                                               : log_expect_trapezoid(c_next, mean);
}

double BellmanStage::log_q_idle(double delta, int c) const {
  require_binary(c, "channel state");
  // V_0 = 1 integrates in closed form, so ties at the last stage are exact.
  if (flat_) return params_->gamma * delta * delta + kernel_log_mass_;
  const double mean = params_->a * delta;
  LogSumExp acc;
  for (int cn = 0; cn < 2; ++cn) {
    if (p_(c, cn) > 0.0) acc.add(std::log(p_(c, cn)) + log_expect(cn, mean));
  }
  return params_->gamma * delta * delta + acc.value();
}

double BellmanStage::log_q_transmit(double delta, int c) const {
  require_binary(c, "channel state");
  const double price = params_->gamma * params_->lambda;
  if (c == 0) return price + log_q_idle(delta, 0);
  if (flat_) return price + kernel_log_mass_;
  LogSumExp acc;
  for (int cn = 0; cn < 2; ++cn) {
    if (p_(1, cn) > 0.0) acc.add(std::log(p_(1, cn)) + log_expect(cn, 0.0));
  }
  return price + acc.value();
}

double SolveResult::q_gap(std::size_t k, int c, std::size_t i) const {
  return std::abs(log_q_idle(k, c, i) - log_q_transmit(k, c, i));
}

double SolveResult::value_at_start(double delta, int c) const {
  const double y = grid.space() == Space::folded ? std::abs(delta) : delta;
  const long j = std::lround(y / grid.spacing());
  const long lo = grid.space() == Space::original ? -grid.half() : 0;
  const long clamped = std::clamp<long>(j, lo, grid.half());
  const auto i = static_cast<std::size_t>(static_cast<long>(grid.zero_index()) + clamped);
  return log_value(log_value.stages() - 1, c, i);
}

SolveResult value_iterate(const ModelParams& params, const Grid& grid,
                          const QuadratureSpec& quad, const SolveOptions& options) {
  params.validate();
  quad.validate();
  if (options.forced_action) require_binary(*options.forced_action, "forced action");

  SolveResult res{.params = params, .grid = grid, .quad = quad, .norm = options.norm};
  res.feasibility = check_feasibility(params);
  if (!res.feasibility.feasible) {
    throw InfeasibleError(*res.feasibility.first_violation_stage,
                          "2 sigma^2 beta_t >= 1 in the never-transmit recursion");
  }
  res.tail_mass = truncation_tail_mass(params, grid.delta_max());
  res.truncation_ok = res.tail_mass < kTruncationTolerance;

  const std::size_t stages = static_cast<std::size_t>(params.horizon) + 2;
  const std::size_t n = grid.size();
  res.log_value = LogValueTable(stages, n, 0.0);
  res.log_q_idle = LogValueTable(stages, n, 0.0);
  res.log_q_transmit = LogValueTable(stages, n, 0.0);
  res.policy = PolicyTable(stages, n, 0);

  for (std::size_t k = 0; k + 1 < stages; ++k) {
    const BellmanStage stage(res.params, res.grid, quad, res.log_value.data[k], options.norm,
                             static_cast<int>(k), policy_breakpoints(res.policy, res.grid, k));
    const double transmit_good = stage.log_q_transmit(0.0, 1);
    parallel_for(n, options.threads, [&](std::size_t i) {
      const double delta = res.grid.node(i);
      for (int c = 0; c < 2; ++c) {
        const double q0 = stage.log_q_idle(delta, c);
        const double q1 = c == 1 ? transmit_good : stage.log_q_transmit(delta, c);
        const std::uint8_t u = options.forced_action
                                   ? static_cast<std::uint8_t>(*options.forced_action)
                                   : static_cast<std::uint8_t>(q1 < q0 ? 1 : 0);
        res.log_q_idle(k + 1, c, i) = q0;
        res.log_q_transmit(k + 1, c, i) = q1;
        res.policy(k + 1, c, i) = u;
        res.log_value(k + 1, c, i) = u == 1 ? q1 : q0;
      }
    });
    for (int c = 0; c < 2; ++c) {
      for (double v : res.log_value.data[k + 1][c]) {
        if (!std::isfinite(v)) {
          throw InfeasibleError(static_cast<int>(k + 1), "log value left the representable range");
        }
      }
    }
  }
  return res;
}

namespace {

// E[V(y)] under N(mean, sigma^2), linear domain.
double expect_linear(const ModelParams& params, const Grid& grid, const QuadratureSpec& quad,
                     const SquaredInterpolator& v, double mean) {
  const double sigma = params.sigma();
  if (quad.rule == QuadRule::gauss_hermite) {
    const auto& rule = cached_rule<GaussHermiteRule>(quad.n_nodes);
    double s = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      s += std::exp(rule.log_weights[k]) * v(mean + std::numbers::sqrt2 * sigma * rule.nodes[k]);
    }
    return s / std::sqrt(std::numbers::pi);
  }
  const double h = grid.spacing();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * params.sigma2);
  double s = 0.0;
  if (grid.space() == Space::original) {
    const auto jlo = static_cast<long>(std::floor((mean - kWindowSigmas * sigma) / h));
    const auto jhi = static_cast<long>(std::ceil((mean + kWindowSigmas * sigma) / h));
    for (long j = jlo; j <= jhi; ++j) {
      const double y = static_cast<double>(j) * h;
      s += h * norm * psi(y - mean, params.sigma2) * v.at_offset(j);
    }
  } else {
    const double am = std::abs(mean);
    const auto jlo = static_cast<long>(std::floor(std::max(0.0, am - kWindowSigmas * sigma) / h));
    const auto jhi = static_cast<long>(std::ceil((am + kWindowSigmas * sigma) / h));
    for (long j = jlo; j <= jhi; ++j) {
      const double y = static_cast<double>(j) * h;
      const double weight = j == 0 ? 0.5 * h : h;
      s += weight * norm * varphi(y, mean, params.sigma2) * v.at_offset(j);
    }
  }
  return s;
}

}  // namespace

RiskNeutralResult risk_neutral_value_iterate(const ModelParams& params, const Grid& grid,
                                             const QuadratureSpec& quad) {
  params.validate();
  quad.validate();
  const auto p = ChannelMatrix::from(params);
  const std::size_t stages = static_cast<std::size_t>(params.horizon) + 2;
  const std::size_t n = grid.size();
  RiskNeutralResult res{LogValueTable(stages, n, 0.0), PolicyTable(stages, n, 0)};

  for (std::size_t k = 0; k + 1 < stages; ++k) {
    const std::array<SquaredInterpolator, 2> v{SquaredInterpolator(grid, res.value.data[k][0]),
                                               SquaredInterpolator(grid, res.value.data[k][1])};
    auto expect = [&](int c, double mean) {
      return p(c, 0) * expect_linear(params, grid, quad, v[0], mean) +
             p(c, 1) * expect_linear(params, grid, quad, v[1], mean);
    };
    const double reset = expect(1, 0.0);
    parallel_for(n, 0, [&](std::size_t i) {
      const double delta = grid.node(i);
      for (int c = 0; c < 2; ++c) {
        const double idle = stage_cost(delta, c, 0, params) + expect(c, params.a * delta);
        const double send = c == 1 ? stage_cost(delta, 1, 1, params) + reset
                                   : stage_cost(delta, 0, 1, params) + expect(0, params.a * delta);
        const std::uint8_t u = send < idle ? 1 : 0;
        res.policy(k + 1, c, i) = u;
        res.value(k + 1, c, i) = u == 1 ? send : idle;
      }
    });
  }
  return res;
}

}  // namespace rsched
