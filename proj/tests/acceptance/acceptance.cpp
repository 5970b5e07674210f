// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "rsched/oracle.hpp"
#include "rsched/policy.hpp"
#include "rsched/sim.hpp"
#include "rsched/solver.hpp"

using namespace rsched;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ModelParams base_params() { return ModelParams{}; }

const QuadratureSpec kHermite{QuadRule::gauss_hermite, 64};
const QuadratureSpec kTrapezoid{QuadRule::trapezoid, 64};

SolveResult solve(const ModelParams& p, Space space, const QuadratureSpec& q = kHermite,
                  SolveOptions opts = {}, const GridSpec& gs = {}) {
  return value_iterate(p, make_grid(p, gs, space), q, opts);
}

// Default-option solves shared by the structural criteria.
const SolveResult& cached_solve(const ModelParams& p, Space space, const QuadratureSpec& q) {
  using Key = std::tuple<double, double, int, int, int>;
  static std::map<Key, SolveResult> cache;
  const Key key{p.lambda, p.gamma, p.horizon, static_cast<int>(space), static_cast<int>(q.rule)};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, solve(p, space, q)).first;
  return it->second;
}

// Parameter points for the structural criteria: the 3 x 3 (lambda, gamma)
// product at T = 5 where feasible and at T = 3 (feasible for all nine).
struct Point {
  ModelParams params;
  bool feasible;
};

std::vector<Point> structural_points() {
  std::vector<Point> pts;
  for (int horizon : {5, 3}) {
    for (double lambda : {0.5, 1.0, 2.0}) {
      for (double gamma : {0.01, 0.05, 0.1}) {
        ModelParams p = base_params();
        p.lambda = lambda;
        p.gamma = gamma;
        p.horizon = horizon;
        pts.push_back({p, check_feasibility(p).feasible});
      }
    }
  }
  return pts;
}

// -------------------------------------------------------------- criteria

Outcome c1_closed_form() {
  ModelParams p = base_params();
  SolveOptions opts;
  opts.forced_action = 0;
  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult r = solve(p, Space::original, kHermite, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  for (std::size_t k = 0; k < r.log_value.stages(); ++k) {
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < r.grid.size(); ++i) {
        const double exact = closed_form_never_transmit(p, r.grid.node(i), static_cast<int>(k));
        worst = std::max(worst, std::abs(r.log_value(k, c, i) - exact));
      }
    }
  }
  return {worst <= 1e-6 && secs < 10.0,
          fmt("max |dlogV| = %.3g over %zu nodes x %zu iterates (tol 1e-6), delta_max = %g, "
              "%.2f s (limit 10 s)",
              worst, r.grid.size(), r.log_value.stages(), r.grid.delta_max(), secs)};
}

Outcome c2_small_instance() {
  ModelParams p = base_params();
  p.horizon = 3;
  const auto t0 = std::chrono::steady_clock::now();
  const QuantizedChain chain = quantize(p, 9, 3);
  const BruteForceResult bf = brute_force_optimal(chain);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  std::size_t disagreements = 0;
  std::uint64_t policies = 0;
  for (const auto& s : bf.starts) {
    worst = std::max(worst, s.max_relative_discrepancy());
    disagreements += s.disagreements;
    policies += s.policies_enumerated;
  }
  return {worst <= 1e-12 && disagreements == 0 && secs < 60.0,
          fmt("enumeration / backward induction / certified cost max rel. diff = %.3g (tol "
              "1e-12), %llu policies over 2 starts, %zu policy disagreements, %.1f s (limit 60 s)",
              worst, static_cast<unsigned long long>(policies), disagreements, secs)};
}

Outcome c3_threshold_structure() {
  std::size_t solved = 0;
  std::size_t failures = 0;
  std::size_t skipped = 0;
  std::string skipped_list;
  for (const auto& pt : structural_points()) {
    if (!pt.feasible) {
      ++skipped;
      skipped_list += fmt(" (T=%d,l=%g,g=%g)", pt.params.horizon, pt.params.lambda,
                          pt.params.gamma);
      continue;
    }
    for (Space space : {Space::folded, Space::original}) {
      const SolveResult& r = cached_solve(pt.params, space, kHermite);
      ++solved;
      try {
        (void)extract_thresholds(r.policy, r.grid);
      } catch (const NonThresholdPolicy&) {
        ++failures;
      }
    }
  }
  return {failures == 0 && solved > 0,
          fmt("%zu solves (folded + original), %zu up-set violations / extraction failures; "
              "infeasible and skipped:%s",
              solved, failures, skipped_list.empty() ? " none" : skipped_list.c_str())};
}

Outcome c4_bad_channel_idle() {
  std::size_t checked = 0;
  std::size_t transmits = 0;
  for (const auto& pt : structural_points()) {
    if (!pt.feasible) continue;
    for (Space space : {Space::folded, Space::original}) {
      for (const auto& q : {kHermite, kTrapezoid}) {
        const SolveResult& r = cached_solve(pt.params, space, q);
        for (std::size_t k = 1; k < r.policy.stages(); ++k) {
          for (std::size_t i = 0; i < r.grid.size(); ++i) {
            ++checked;
            transmits += r.policy(k, 0, i);
          }
        }
      }
    }
  }
  return {transmits == 0 && checked > 0,
          fmt("u = 1 at %zu of %zu (stage, node) entries with c = 0 across all feasible points, "
              "both grids, both rules",
              transmits, checked)};
}

double evenness_error(const SolveResult& r) {
  double worst = 0.0;
  for (std::size_t k = 0; k < r.log_value.stages(); ++k) {
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < r.grid.size(); ++i) {
        worst = std::max(worst, std::abs(r.log_value(k, c, i) -
                                         r.log_value(k, c, r.grid.mirror(i))));
      }
    }
  }
  return worst;
}

Outcome c5_evenness() {
  double worst = 0.0;
  std::size_t runs = 0;
  for (const auto& pt : structural_points()) {
    if (!pt.feasible) continue;
    for (const auto& q : {kHermite, kTrapezoid}) {
      worst = std::max(worst, evenness_error(cached_solve(pt.params, Space::original, q)));
      ++runs;
    }
  }
  return {worst <= 1e-12, fmt("max |W(d) - W(-d)| = %.3g over %zu original-grid solves (tol 1e-12)",
                              worst, runs)};
}

Outcome c6_fold_unfold() {
  double worst = 0.0;
  std::size_t mismatches = 0;
  std::size_t compared = 0;
  std::size_t runs = 0;
  for (const auto& pt : structural_points()) {
    if (!pt.feasible) continue;
    for (const auto& q : {kHermite, kTrapezoid}) {
      const SolveResult& orig = cached_solve(pt.params, Space::original, q);
      const SolveResult& fold = cached_solve(pt.params, Space::folded, q);
      ++runs;
      for (std::size_t k = 0; k < orig.log_value.stages(); ++k) {
        for (int c = 0; c < 2; ++c) {
          for (std::size_t i = 0; i < orig.grid.size(); ++i) {
            const auto j = static_cast<std::size_t>(std::abs(orig.grid.offset(i)));
            worst = std::max(worst, std::abs(orig.log_value(k, c, i) - fold.log_value(k, c, j)));
            if (k == 0) continue;
            if (orig.q_gap(k, c, i) <= 1e-9 || fold.q_gap(k, c, j) <= 1e-9) continue;
            ++compared;
            mismatches += orig.policy(k, c, i) != fold.policy(k, c, j);
          }
        }
      }
    }
  }
  return {worst <= 1e-8 && mismatches == 0,
          fmt("max |W_orig - W_fold| = %.3g (tol 1e-8); %zu policy mismatches among %zu entries "
              "outside the 1e-9 tie band; %zu parameter/rule pairs",
              worst, mismatches, compared, runs)};
}

Outcome c7_monotonicity() {
  std::size_t space_violations = 0;
  std::size_t time_violations = 0;
  std::size_t runs = 0;
  double worst = 0.0;
  for (const auto& pt : structural_points()) {
    if (!pt.feasible) continue;
    for (const auto& q : {kHermite, kTrapezoid}) {
      const SolveResult& r = cached_solve(pt.params, Space::folded, q);
      ++runs;
      for (std::size_t k = 0; k < r.log_value.stages(); ++k) {
        for (int c = 0; c < 2; ++c) {
          for (std::size_t i = 0; i < r.grid.size(); ++i) {
            if (i + 1 < r.grid.size() && r.log_value(k, c, i + 1) < r.log_value(k, c, i)) {
              ++space_violations;
              worst = std::max(worst, r.log_value(k, c, i) - r.log_value(k, c, i + 1));
            }
            if (k + 1 < r.log_value.stages() && r.log_value(k + 1, c, i) < r.log_value(k, c, i)) {
              ++time_violations;
              worst = std::max(worst, r.log_value(k, c, i) - r.log_value(k + 1, c, i));
            }
          }
        }
      }
    }
  }
  return {space_violations == 0 && time_violations == 0,
          fmt("%zu violations along the folded grid, %zu in the iterate index (largest drop "
              "%.3g); %zu solves",
              space_violations, time_violations, worst, runs)};
}

// D(gamma) = max over nodes of |W / gamma - V_rn| at the start iterate, on a
// grid sized for the largest gamma and shared by all three solves.
std::vector<double> risk_neutral_gaps(const ModelParams& p, const std::vector<double>& gammas) {
  ModelParams widest = p;
  widest.gamma = *std::max_element(gammas.begin(), gammas.end());
  const Grid grid = make_grid(widest, {}, Space::folded);
  const RiskNeutralResult rn = risk_neutral_value_iterate(p, grid, kHermite);
  const std::size_t last = static_cast<std::size_t>(p.horizon) + 1;
  std::vector<double> d;
  for (double gamma : gammas) {
    ModelParams q = p;
    q.gamma = gamma;
    const SolveResult r = value_iterate(q, grid, kHermite);
    double worst = 0.0;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, std::abs(r.log_value(last, c, i) / gamma - rn.value(last, c, i)));
      }
    }
    d.push_back(worst);
  }
  return d;
}

Outcome c8_risk_neutral_limit() {
  // Instance: defaults with the longest horizon keeping 2 sigma^2 beta_T <= 1/2
  // at gamma = 0.1, so all three gammas sit well inside the feasible region.
  const std::vector<double> gammas{0.1, 0.05, 0.025};
  ModelParams p = base_params();
  ModelParams probe = p;
  probe.gamma = gammas.front();
  int horizon = 0;
  for (int t = 1; t <= 10; ++t) {
    probe.horizon = t;
    const auto rep = check_feasibility(probe);
    if (!rep.feasible || 2.0 * p.sigma2 * rep.beta[static_cast<std::size_t>(t)] > 0.5) break;
    horizon = t;
  }
  p.horizon = horizon;
  const std::vector<double> d = risk_neutral_gaps(p, gammas);
  const double ratio = d[1] / d[0];
  const bool decreasing = d[1] < d[0] && d[2] < d[1];

  // Near the feasibility boundary the expansion is not yet first order.
  ModelParams edge = base_params();
  edge.horizon = 3;
  const std::vector<double> de = risk_neutral_gaps(edge, gammas);

  return {decreasing && ratio >= 0.35 && ratio <= 0.65,
          fmt("T = %d: D(0.1) = %.5g, D(0.05) = %.5g, D(0.025) = %.5g; D(0.05)/D(0.1) = %.4f "
              "(want [0.35, 0.65]); info T = 3 (2 sigma^2 beta_3 = 0.75 at gamma = 0.1): "
              "ratio %.4f",
              horizon, d[0], d[1], d[2], ratio, de[1] / de[0])};
}

Outcome c9_monte_carlo() {
  ModelParams p = base_params();
  p.gamma = 0.02;
  constexpr std::size_t kRollouts = 1'000'000;
  constexpr std::uint64_t kSeed = 20240601;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;

  for (const auto& q : {kHermite, kTrapezoid}) {
    const SolveResult r = solve(p, Space::folded, q);
    const ThresholdSchedule sched = extract_thresholds(r.policy, r.grid);
    for (int c0 : {1, 0}) {
      RolloutOptions opts;
      opts.c0 = c0;
      const RiskEstimate est =
          estimate_risk_objective(p, schedule_rule(sched), kRollouts, kSeed, opts);
      const double target = r.value_at_start(0.0, c0);
      const double z = (est.log_objective - target) / est.se_log;
      const bool pass = std::abs(z) <= 3.0 && !est.heavy_tail;
      ok = ok && pass;
      detail += fmt("%s c0=%d: z=%+.2f; ", q.rule == QuadRule::gauss_hermite ? "hermite" : "trapezoid",
                    c0, z);
    }
  }
  RolloutOptions opts;
  opts.c0 = 1;
  const RiskEstimate idle = estimate_risk_objective(p, idle_rule(), kRollouts, kSeed + 1, opts);
  const double target = closed_form_never_transmit(p, 0.0, p.horizon + 1);
  const double z = (idle.log_objective - target) / idle.se_log;
  const bool idle_pass = std::abs(z) <= 3.0 && !idle.heavy_tail;
  ok = ok && idle_pass;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 300.0;
  detail += fmt("never-transmit vs closed form: z=%+.2f (top-0.1%% share %.3g); 10^6 rollouts "
                "each, %.1f s (limit 300 s)",
                z, idle.top_share, secs);
  return {ok, detail};
}

Outcome c10_normalization() {
  double worst = 0.0;
  std::size_t mismatches = 0;
  std::size_t compared = 0;
  std::vector<ModelParams> points{base_params()};
  ModelParams wide = base_params();
  wide.sigma2 = 2.0;
  wide.horizon = 3;
  points.push_back(wide);
  for (const auto& p : points) {
    for (Space space : {Space::folded, Space::original}) {
      const Grid grid = make_grid(p, {}, space);
      const SolveResult n = value_iterate(p, grid, kHermite);
      SolveOptions un_opts;
      un_opts.norm = KernelNorm::unnormalized;
      const SolveResult u = value_iterate(p, grid, kHermite, un_opts);
      const double shift = 0.5 * std::log(2.0 * std::numbers::pi * p.sigma2);
      for (std::size_t k = 0; k < n.log_value.stages(); ++k) {
        for (int c = 0; c < 2; ++c) {
          for (std::size_t i = 0; i < grid.size(); ++i) {
            const double expected = static_cast<double>(k) * shift;
            worst = std::max(worst,
                             std::abs(u.log_value(k, c, i) - n.log_value(k, c, i) - expected));
            if (k == 0 || n.q_gap(k, c, i) <= 1e-9 || u.q_gap(k, c, i) <= 1e-9) continue;
            ++compared;
            mismatches += n.policy(k, c, i) != u.policy(k, c, i);
          }
        }
      }
    }
  }
  return {worst <= 1e-10 && mismatches == 0,
          fmt("max |W_un - W_norm - k ln(2 pi sigma^2)/2| = %.3g (tol 1e-10); %zu policy "
              "mismatches among %zu entries outside the tie band; sigma2 in {1, 2}",
              worst, mismatches, compared)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"closed-form oracle (never transmit)", c1_closed_form},
      {"small-instance optimality (enumeration)", c2_small_instance},
      {"threshold structure", c3_threshold_structure},
      {"bad channel never transmits", c4_bad_channel_idle},
      {"evenness on the original grid", c5_evenness},
      {"fold/unfold agreement", c6_fold_unfold},
      {"monotonicity in |delta| and in the iterate", c7_monotonicity},
      {"risk-neutral limit as gamma -> 0", c8_risk_neutral_limit},
      {"Monte Carlo consistency", c9_monte_carlo},
      {"normalization invariance", c10_normalization},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2zu [PRIMARY] %-44s %s  %s\n", i + 1, criteria[i].name,
                o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed;
}
