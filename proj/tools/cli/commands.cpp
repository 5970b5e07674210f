#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "config.hpp"
#include "rsched/oracle.hpp"
#include "rsched/sim.hpp"
#include "rsched/solver.hpp"

namespace rsched::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string num(int v) { return std::to_string(v); }
std::string num(long v) { return std::to_string(v); }
std::string num(unsigned long v) { return std::to_string(v); }
std::string num(unsigned long long v) { return std::to_string(v); }
std::string num(const std::string& v) { return v; }
std::string num(const char* v) { return v; }

/// CSV file whose first lines are '#' comments carrying provenance.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header,
            const std::string& columns)
      : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (const auto& line : header) out_ << "# " << line << '\n';
    out_ << columns << '\n';
  }

  template <typename... Args>
  void row(const Args&... args) {
    bool first = true;
    ((out_ << (first ? "" : ",") << num(args), first = false), ...);
    out_ << '\n';
  }

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ofstream out_;
};

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> settings;
  std::string out_dir = ".";
  bool plot_data = false;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("-c,--config", o.config_path, "Flat key=value config file")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", o.settings, "Override one config key (KEY=VALUE), repeatable");
  sub->add_option("-o,--out", o.out_dir, "Output directory (created if missing)");
  sub->add_flag("--plot-data", o.plot_data, "Also write tidy long-format plot tables");
  sub->add_option("--threads", o.threads, "Worker threads (0 = hardware concurrency)");
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  validate(c);
  return c;
}

fs::path prepare_out(const CommonOptions& o) {
  fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + o.out_dir + "'");
  return dir;
}

std::vector<std::string> provenance(const std::string& command, const RunConfig& c,
                                    const Grid* grid = nullptr,
                                    const std::vector<std::string>& extra = {}) {
  std::vector<std::string> lines{"rsched " + command};
  for (auto& kv : describe(c, grid)) lines.push_back(std::move(kv));
  for (const auto& e : extra) lines.push_back(e);
  return lines;
}

void print_beta_trace(const FeasibilityReport& r, double sigma2, std::ostream& os) {
  os << "beta recursion (feasible iff 2*sigma2*beta_t < 1 for t <= T):\n";
  for (std::size_t t = 0; t < r.beta.size(); ++t) {
    const double s = 2.0 * sigma2 * r.beta[t];
    os << "  t=" << t << " beta=" << num(r.beta[t]) << " 2*sigma2*beta=" << num(s)
       << (static_cast<int>(t) <= r.horizon && !(s < 1.0) ? "  VIOLATED" : "") << '\n';
  }
}

void write_feasibility(const fs::path& dir, const std::vector<std::string>& header,
                       const FeasibilityReport& r, double sigma2) {
  CsvWriter csv(dir / "feasibility.csv", header, "t,beta,log_k,two_sigma2_beta,ok");
  for (std::size_t t = 0; t < r.beta.size(); ++t) {
    const double s = 2.0 * sigma2 * r.beta[t];
    // beta_{T+1} never enters an integral, so it is not constrained.
    const bool ok = static_cast<int>(t) > r.horizon || s < 1.0;
    csv.row(static_cast<unsigned long>(t), r.beta[t], r.log_k[t], s, ok ? 1 : 0);
  }
}

/// Returns kExitInfeasible (after printing the trace) when infeasible.
std::optional<int> guard_feasible(const RunConfig& c, std::ostream& err,
                                  const fs::path* dir = nullptr,
                                  const std::vector<std::string>& header = {}) {
  const auto r = check_feasibility(c.params);
  if (dir) write_feasibility(*dir, header, r, c.params.sigma2);
  if (r.feasible) return std::nullopt;
  print_beta_trace(r, c.params.sigma2, err);
  err << "infeasible at stage " << *r.first_violation_stage << '\n';
  return kExitInfeasible;
}

struct Solved {
  Grid grid;
  SolveResult result;
  ThresholdSchedule schedule;
};

Solved solve(const RunConfig& c, Space space, unsigned threads) {
  Grid grid = make_grid(c.params, c.grid, space);
  SolveOptions opts;
  opts.threads = threads;
  SolveResult res = value_iterate(c.params, grid, c.quad, opts);
  ThresholdSchedule schedule = extract_thresholds(res.policy, grid);
  return {grid, std::move(res), std::move(schedule)};
}

void write_thresholds(const fs::path& path, const std::vector<std::string>& header,
                      const ThresholdSchedule& s) {
  CsvWriter csv(path, header, "stage,c,threshold");
  for (int t = 0; t <= s.horizon(); ++t) {
    for (int c = 0; c < 2; ++c) csv.row(t, c, s.at(t, c));
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

double parse_double(const std::string& what, const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("invalid " + what + ": '" + s + "'");
  }
  return v;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  CommonOptions common;
  std::string space = "folded";
};

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve_config(a.common);
  const fs::path dir = prepare_out(a.common);
  if (auto code = guard_feasible(c, err, &dir, provenance("solve", c))) return *code;

  const Space space = a.space == "original" ? Space::original : Space::folded;
  const Solved s = solve(c, space, a.common.threads);
  const auto& r = s.result;
  const auto header = provenance("solve", c, &s.grid, {"space=" + a.space});
  const int horizon = c.params.horizon;
  const std::size_t last = static_cast<std::size_t>(horizon) + 1;

  {
    CsvWriter csv(dir / "values.csv", header, "iterate,stage,c,delta,log_value");
    for (std::size_t k = 0; k <= last; ++k) {
      for (int ch = 0; ch < 2; ++ch) {
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
          csv.row(static_cast<unsigned long>(k), static_cast<long>(last - k), ch, s.grid.node(i),
                  r.log_value(k, ch, i));
        }
      }
    }
  }
  {
    CsvWriter csv(dir / "policy.csv", header,
                  "stage,iterate,c,delta,u,log_q_idle,log_q_transmit");
    for (int stage = 0; stage <= horizon; ++stage) {
      const std::size_t k = last - static_cast<std::size_t>(stage);
      for (int ch = 0; ch < 2; ++ch) {
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
          csv.row(stage, static_cast<unsigned long>(k), ch, s.grid.node(i),
                  static_cast<int>(r.policy(k, ch, i)), r.log_q_idle(k, ch, i),
                  r.log_q_transmit(k, ch, i));
        }
      }
    }
  }
  write_thresholds(dir / "thresholds.csv", header, s.schedule);

  if (a.common.plot_data) {
    CsvWriter csv(dir / "plot_values.csv", header, "stage,c,delta,series,y");
    for (int stage = 0; stage <= horizon; ++stage) {
      const std::size_t k = last - static_cast<std::size_t>(stage);
      for (int ch = 0; ch < 2; ++ch) {
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
          const double d = s.grid.node(i);
          csv.row(stage, ch, d, "log_value", r.log_value(k, ch, i));
          csv.row(stage, ch, d, "log_q_idle", r.log_q_idle(k, ch, i));
          csv.row(stage, ch, d, "log_q_transmit", r.log_q_transmit(k, ch, i));
          csv.row(stage, ch, d, "u", static_cast<double>(r.policy(k, ch, i)));
        }
      }
    }
  }

  out << "grid: " << to_string(c.quad.rule) << ", " << s.grid.size() << " nodes, delta_max="
      << num(s.grid.delta_max()) << ", spacing=" << num(s.grid.spacing()) << '\n';
  out << "tail mass beyond delta_max: " << num(r.tail_mass)
      << (r.truncation_ok ? "" : "  (above tolerance; enlarge delta_max)") << '\n';
  for (int ch = 0; ch < 2; ++ch) {
    out << "log value at delta=0, c=" << ch << ": " << num(r.value_at_start(0.0, ch)) << '\n';
  }
  out << "thresholds (stage: c=0, c=1):\n";
  for (int t = 0; t <= horizon; ++t) {
    out << "  " << t << ": " << num(s.schedule.at(t, 0)) << ", " << num(s.schedule.at(t, 1))
        << '\n';
  }
  out << "wrote values.csv, policy.csv, thresholds.csv, feasibility.csv to " << dir.string()
      << '\n';
  return kExitOk;
}

// ------------------------------------------------------------- simulate

struct SimulateArgs {
  CommonOptions common;
  std::string policy = "solved";
  std::string threshold_file;
  std::string c0 = "stationary";
  bool trace = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve_config(a.common);
  const auto& p = c.params;

  RolloutOptions opts;
  if (a.c0 == "0" || a.c0 == "1") {
    opts.c0 = a.c0 == "1" ? 1 : 0;
  } else if (a.c0 != "stationary") {
    throw ConfigError("--c0 must be 0, 1 or stationary");
  }

  std::string source = a.policy;
  std::string file = a.threshold_file;
  if (source.rfind("threshold-file:", 0) == 0) {
    file = source.substr(std::string("threshold-file:").size());
    source = "threshold-file";
  }

  DecisionRule rule;
  std::optional<double> reference;
  std::optional<Grid> grid;
  if (source == "solved") {
    if (auto code = guard_feasible(c, err)) return *code;
    const Solved s = solve(c, Space::folded, a.common.threads);
    grid = s.grid;
    rule = schedule_rule(s.schedule);
    const double w1 = s.result.value_at_start(0.0, 1);
    const double w0 = s.result.value_at_start(0.0, 0);
    if (opts.c0) {
      reference = *opts.c0 == 1 ? w1 : w0;
    } else {
      const double pi1 = ChannelMatrix::from(p).stationary_good();
      reference = std::log(pi1 * std::exp(w1) + (1.0 - pi1) * std::exp(w0));
    }
  } else if (source == "threshold-file") {
    if (file.empty()) throw ConfigError("--policy threshold-file needs --thresholds PATH");
    rule = schedule_rule(read_threshold_file(file, p.horizon));
  } else if (source == "builtin:idle") {
    rule = idle_rule();
    const auto r = check_feasibility(p);
    if (r.feasible) reference = closed_form_never_transmit(p, 0.0, p.horizon + 1);
  } else if (source == "builtin:always") {
    rule = always_rule();
  } else {
    throw ConfigError("unknown policy source '" + a.policy + "'");
  }

  const fs::path dir = prepare_out(a.common);
  const auto header = provenance("simulate", c, grid ? &*grid : nullptr,
                                 {"policy=" + a.policy, "c0=" + a.c0});
  const MonteCarloResult mc = simulate_policy(p, rule, c.n_rollouts, c.seed, opts, a.common.threads);

  const double taylor = mc.cost.mean + 0.5 * p.gamma * mc.cost.variance;
  {
    CsvWriter csv(dir / "metrics.csv", header,
                  "policy,c0,n,seed,log_objective,se_log,mean_cost,var_cost,taylor_log_objective,"
                  "top_share,heavy_tail,reference,z_score");
    const std::string ref = reference ? num(*reference) : "";
    const std::string z =
        reference && mc.risk.se_log > 0.0
            ? num((mc.risk.log_objective - *reference) / mc.risk.se_log)
            : "";
    csv.row(source, a.c0, static_cast<unsigned long>(mc.risk.n), static_cast<unsigned long long>(c.seed),
            mc.risk.log_objective, mc.risk.se_log, mc.cost.mean, mc.cost.variance,
            p.gamma * taylor, mc.risk.top_share, mc.risk.heavy_tail ? 1 : 0, ref, z);
  }

  if (a.trace) {
    const SimTrace tr = rollout(p, rule, c.seed, opts, 0);
    CsvWriter csv(dir / "trace.csv", header, "t,x,x_hat,delta,c,u,cost");
    for (std::size_t t = 0; t < tr.x.size(); ++t) {
      csv.row(static_cast<unsigned long>(t), tr.x[t], tr.x_hat[t], tr.delta[t], tr.c[t], tr.u[t],
              tr.cost[t]);
    }
  }

  if (a.common.plot_data) {
    const std::size_t n = std::min<std::size_t>(c.n_rollouts, 100000);
    const std::size_t stages = static_cast<std::size_t>(p.horizon) + 1;
    std::vector<double> cost(stages), tx(stages), delivered(stages), err2(stages);
    for (std::size_t i = 0; i < n; ++i) {
      const SimTrace tr = rollout(p, rule, c.seed, opts, i);
      for (std::size_t t = 0; t < stages; ++t) {
        cost[t] += tr.cost[t];
        tx[t] += tr.u[t];
        delivered[t] += tr.u[t] * tr.c[t];
        const double e = tr.x[t] - tr.x_hat[t];
        err2[t] += e * e;
      }
    }
    CsvWriter csv(dir / "plot_stages.csv", header, "stage,series,y");
    const double dn = static_cast<double>(n);
    for (std::size_t t = 0; t < stages; ++t) {
      const auto st = static_cast<unsigned long>(t);
      csv.row(st, "mean_cost", cost[t] / dn);
      csv.row(st, "transmit_rate", tx[t] / dn);
      csv.row(st, "delivery_rate", delivered[t] / dn);
      csv.row(st, "mean_squared_error", err2[t] / dn);
    }
  }

  out << "policy " << source << ", " << mc.risk.n << " rollouts, seed " << c.seed << '\n';
  out << "log E[exp(gamma S)] = " << num(mc.risk.log_objective) << " +- "
      << num(mc.risk.se_log) << " (1 SE)\n";
  if (reference) {
    out << "reference = " << num(*reference) << ", z = "
        << num((mc.risk.log_objective - *reference) / mc.risk.se_log) << '\n';
  }
  out << "mean S = " << num(mc.cost.mean) << ", var S = " << num(mc.cost.variance) << '\n';
  out << "top 0.1% share of the mean = " << num(mc.risk.top_share) << '\n';
  if (mc.risk.heavy_tail) {
    err << "warning: heavy tail, the top 0.1% of rollouts carry "
        << num(mc.risk.top_share) << " of the estimated mean; the estimate is unreliable\n";
  }
  out << "wrote metrics.csv to " << dir.string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- oracle

struct OracleArgs {
  CommonOptions common;
  int n_delta = 9;
  int noise_points = 3;
  std::optional<double> delta_q;
  int max_bits = 34;
};

struct CheckRow {
  std::string check;
  std::string start;
  double value;
  double tolerance;
  std::string verdict;  // PASS, FAIL or INFO
};

int cmd_oracle(const OracleArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve_config(a.common);
  const auto& p = c.params;
  const QuantizedChain chain = quantize(p, a.n_delta, a.noise_points, a.delta_q);

  EnumerationLimits limits;
  limits.max_decision_bits = a.max_bits;
  limits.threads = a.common.threads;
  BruteForceResult bf;
  try {
    bf = brute_force_optimal(chain, {}, limits);
  } catch (const BudgetExceeded& e) {
    err << "enumeration budget exceeded: " << e.what() << '\n';
    return kExitBudget;
  }
  const auto& bi = bf.backward;
  const std::size_t n = chain.size();
  const int horizon = p.horizon;

  std::vector<CheckRow> rows;
  auto add = [&](std::string check, std::string start, double value, double tol, bool pass) {
    rows.push_back({std::move(check), std::move(start), value, tol, pass ? "PASS" : "FAIL"});
  };
  auto info = [&](std::string check, std::string start, double value) {
    rows.push_back({std::move(check), std::move(start), value,
                    std::numeric_limits<double>::quiet_NaN(), "INFO"});
  };

  std::optional<Solved> solved;
  if (check_feasibility(p).feasible) solved = solve(c, Space::folded, a.common.threads);

  for (const auto& cert : bf.starts) {
    const std::string start = "c0=" + std::to_string(cert.c0);
    const auto rel = [](double x, double y) { return std::abs(x - y) / std::min(x, y); };
    add("enumeration_vs_backward", start, rel(cert.enumeration_value, cert.backward_value), 1e-12,
        rel(cert.enumeration_value, cert.backward_value) <= 1e-12);
    add("certified_cost_vs_enumeration", start, rel(cert.certified_cost, cert.enumeration_value),
        1e-12, rel(cert.certified_cost, cert.enumeration_value) <= 1e-12);
    add("policy_disagreements", start, static_cast<double>(cert.disagreements), 0,
        cert.disagreements == 0);
    std::size_t bad_tx = 0;
    for (const auto& st : cert.policy) {
      bad_tx += static_cast<std::size_t>(std::count(st[0].begin(), st[0].end(), 1));
    }
    add("enumerated_bad_channel_idle", start, static_cast<double>(bad_tx), 0, bad_tx == 0);
    info("policies_enumerated", start, static_cast<double>(cert.policies_enumerated));
    info("optimal_value", start, cert.backward_value);

    if (solved) {
      const ThresholdSchedule& sched = solved->schedule;
      const double cost = exact_policy_cost(
          chain,
          [&](int t, std::size_t i, int ch) { return decide(sched, chain.delta_states[i], ch, t); },
          0.0, cert.c0);
      add("solver_policy_not_below_optimum", start, cost / cert.backward_value - 1.0, 1e-12,
          cost >= cert.backward_value * (1.0 - 1e-12));
      info("solver_policy_relative_excess", start, cost / cert.backward_value - 1.0);
      info("solver_log_value", start, solved->result.value_at_start(0.0, cert.c0));
      info("chain_log_value", start, std::log(cert.backward_value));
    }
  }

  std::size_t bad_tx = 0;
  std::size_t odd_policy = 0;
  std::size_t not_upset = 0;
  double odd_value = 0.0;
  for (int stage = 0; stage <= horizon; ++stage) {
    const auto& pol = bi.policy[static_cast<std::size_t>(stage)];
    const auto& gap = bi.relative_gap[static_cast<std::size_t>(stage)];
    bad_tx += static_cast<std::size_t>(std::count(pol[0].begin(), pol[0].end(), 1));
    for (int ch = 0; ch < 2; ++ch) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = n - 1 - i;
        if (pol[ch][i] != pol[ch][m] && gap[ch][i] > limits.tie_tolerance &&
            gap[ch][m] > limits.tie_tolerance) {
          ++odd_policy;
        }
      }
      // up-set in |delta|: walking outward from 0, once 1 always 1
      for (std::size_t side = 0; side < 2; ++side) {
        bool seen = false;
        for (std::size_t j = 0; j <= n / 2; ++j) {
          const std::size_t i = side == 0 ? n / 2 + j : n / 2 - j;
          if (pol[ch][i] == 1) {
            seen = true;
          } else if (seen && gap[ch][i] > limits.tie_tolerance) {
            ++not_upset;
          }
        }
      }
    }
  }
  for (const auto& v : bi.value) {
    for (int ch = 0; ch < 2; ++ch) {
      for (std::size_t i = 0; i < n; ++i) {
        odd_value = std::max(odd_value, std::abs(v[ch][i] - v[ch][n - 1 - i]) / v[ch][i]);
      }
    }
  }
  add("backward_bad_channel_idle", "all", static_cast<double>(bad_tx), 0, bad_tx == 0);
  add("backward_value_evenness", "all", odd_value, 1e-12, odd_value <= 1e-12);
  add("backward_policy_evenness", "all", static_cast<double>(odd_policy), 0, odd_policy == 0);
  add("backward_threshold_structure", "all", static_cast<double>(not_upset), 0, not_upset == 0);

  const fs::path dir = prepare_out(a.common);
  std::ostringstream dq;
  dq << "delta_q=" << num(chain.delta_states.back());
  const auto header = provenance(
      "oracle", c, solved ? &solved->grid : nullptr,
      {"n_delta=" + std::to_string(a.n_delta), "noise_points=" + std::to_string(a.noise_points),
       dq.str(), "noise_scheme=" + chain.noise_scheme,
       "snapping=nearest state, ties toward smaller |delta|, clamped at the ends"});
  {
    CsvWriter csv(dir / "oracle_report.csv", header, "check,start,value,tolerance,result");
    for (const auto& r : rows) {
      csv.row(r.check, r.start, r.value, std::isnan(r.tolerance) ? std::string() : num(r.tolerance),
              r.verdict);
    }
  }
  {
    CsvWriter csv(dir / "oracle_chain.csv", header, "kind,index,value,probability");
    for (std::size_t k = 0; k < chain.noise.size(); ++k) {
      csv.row("noise", static_cast<unsigned long>(k), chain.noise[k].value, chain.noise[k].prob);
    }
    for (std::size_t i = 0; i < n; ++i) {
      csv.row("delta_state", static_cast<unsigned long>(i), chain.delta_states[i], "");
    }
  }
  {
    CsvWriter csv(dir / "oracle_policy.csv", header, "stage,c,delta,u_backward,relative_gap");
    for (int stage = 0; stage <= horizon; ++stage) {
      const auto s = static_cast<std::size_t>(stage);
      for (int ch = 0; ch < 2; ++ch) {
        for (std::size_t i = 0; i < n; ++i) {
          csv.row(stage, ch, chain.delta_states[i], static_cast<int>(bi.policy[s][ch][i]),
                  bi.relative_gap[s][ch][i]);
        }
      }
    }
  }
  if (a.common.plot_data) {
    CsvWriter csv(dir / "plot_oracle.csv", header, "iterate,c,delta,series,y");
    for (std::size_t k = 0; k < bi.value.size(); ++k) {
      for (int ch = 0; ch < 2; ++ch) {
        for (std::size_t i = 0; i < n; ++i) {
          csv.row(static_cast<unsigned long>(k), ch, chain.delta_states[i], "log_value",
                  std::log(bi.value[k][ch][i]));
        }
      }
    }
  }

  out << "chain: " << n << " error states (spacing " << num(chain.spacing) << "), "
      << chain.noise_scheme << '\n';
  bool all_pass = true;
  for (const auto& r : rows) {
    out << "  " << r.verdict << "  " << r.check << " [" << r.start << "] = " << num(r.value)
        << '\n';
    all_pass = all_pass && r.verdict != "FAIL";
  }
  out << (all_pass ? "all checks passed" : "some checks FAILED") << "; wrote oracle_report.csv to "
      << dir.string() << '\n';
  return all_pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  CommonOptions common;
  std::string axis;
  std::string values;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig base = resolve_config(a.common);
  if (a.axis != "gamma" && a.axis != "lambda") throw ConfigError("--axis must be gamma or lambda");
  const auto items = split_list(a.values);
  if (items.empty()) throw ConfigError("--values is empty");
  std::vector<double> values;
  for (const auto& s : items) values.push_back(parse_double("sweep value", s));

  const fs::path dir = prepare_out(a.common);
  const auto header = provenance("sweep", base, nullptr, {"axis=" + a.axis, "values=" + a.values});
  CsvWriter csv(dir / "sweep.csv", header, "axis,axis_value,metric,stage,c,value");
  for (double v : values) {
    RunConfig c = base;
    (a.axis == "gamma" ? c.params.gamma : c.params.lambda) = v;
    validate(c);
    const auto feas = check_feasibility(c.params);
    csv.row(a.axis, v, "feasible", "", "", feas.feasible ? 1 : 0);
    if (!feas.feasible) {
      err << a.axis << "=" << num(v) << ": infeasible at stage " << *feas.first_violation_stage
          << ", skipped\n";
      continue;
    }
    const Solved s = solve(c, Space::folded, a.common.threads);
    const RiskNeutralResult rn = risk_neutral_value_iterate(c.params, s.grid, c.quad);
    const std::size_t last = static_cast<std::size_t>(c.params.horizon) + 1;
    for (int t = 0; t <= c.params.horizon; ++t) {
      for (int ch = 0; ch < 2; ++ch) csv.row(a.axis, v, "threshold", t, ch, s.schedule.at(t, ch));
    }
    double gap = 0.0;
    for (int ch = 0; ch < 2; ++ch) {
      const double w = s.result.value_at_start(0.0, ch);
      const double r = rn.value(last, ch, s.grid.zero_index());
      csv.row(a.axis, v, "log_value_start", "", ch, w);
      csv.row(a.axis, v, "scaled_log_value_start", "", ch, w / c.params.gamma);
      csv.row(a.axis, v, "risk_neutral_start", "", ch, r);
      for (std::size_t i = 0; i < s.grid.size(); ++i) {
        gap = std::max(gap, std::abs(s.result.log_value(last, ch, i) / c.params.gamma -
                                     rn.value(last, ch, i)));
      }
    }
    csv.row(a.axis, v, "taylor_gap_max", "", "", gap);
    out << a.axis << "=" << num(v) << ": stage-0 threshold (c=1) " << num(s.schedule.at(0, 1))
        << ", log value at 0 (c=1) " << num(s.result.value_at_start(0.0, 1))
        << ", max |W/gamma - V_rn| " << num(gap) << '\n';
  }
  out << "wrote sweep.csv to " << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- check

int cmd_check(const CommonOptions& o, bool write, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve_config(o);
  const auto r = check_feasibility(c.params);
  print_beta_trace(r, c.params.sigma2, out);
  if (write) write_feasibility(prepare_out(o), provenance("check", c), r, c.params.sigma2);
  if (!r.feasible) {
    err << "infeasible at stage " << *r.first_violation_stage << '\n';
    return kExitInfeasible;
  }
  out << "feasible through stage " << c.params.horizon << '\n';
  return kExitOk;
}

const char* kSolveHelp = R"(Outputs (every file starts with '# ' lines: command, resolved config, seed):
  values.csv       iterate,stage,c,delta,log_value   iterate k = Bellman applications,
                   stage = T+1-k (k = 0 is the terminal V_0 = 1)
  policy.csv       stage,iterate,c,delta,u,log_q_idle,log_q_transmit   for stages 0..T
  thresholds.csv   stage,c,threshold   2(T+1) rows; transmit iff |delta| >= threshold; inf = never
  feasibility.csv  t,beta,log_k,two_sigma2_beta,ok
  plot_values.csv  stage,c,delta,series,y   (--plot-data; series log_value|log_q_idle|log_q_transmit|u)
Exit codes: 0 ok, 1 usage/config error, 2 infeasible, 4 policy without threshold structure.)";

const char* kSimulateHelp = R"(Policy sources: solved | threshold-file (with --thresholds PATH, or
threshold-file:PATH) | builtin:idle | builtin:always.
Outputs:
  metrics.csv      policy,c0,n,seed,log_objective,se_log,mean_cost,var_cost,taylor_log_objective,
                   top_share,heavy_tail,reference,z_score
                   log_objective = log mean exp(gamma S), S = total cost over stages 0..T;
                   se_log = delta-method SE; taylor_log_objective = gamma (mean + gamma/2 var);
                   reference = solver value (solved) or closed form (builtin:idle)
  trace.csv        t,x,x_hat,delta,c,u,cost   (--trace; rollout 0 of the seed)
  plot_stages.csv  stage,series,y   (--plot-data; mean_cost|transmit_rate|delivery_rate|
                   mean_squared_error over up to 1e5 rollouts)
Exit codes: 0 ok, 1 usage/config error or unreadable policy file, 2 infeasible (solved).)";

const char* kOracleHelp = R"(Builds the quantized chain, enumerates every deterministic Markov policy on
the states reachable from delta=0 (c0 = 0 and 1), runs backward induction,
and evaluates the solver's threshold policy on the chain.
Outputs:
  oracle_report.csv  check,start,value,tolerance,result   result PASS|FAIL|INFO
  oracle_chain.csv   kind,index,value,probability   noise support and error states
  oracle_policy.csv  stage,c,delta,u_backward,relative_gap
  plot_oracle.csv    iterate,c,delta,series,y   (--plot-data)
Exit codes: 0 all checks pass, 1 usage, 3 enumeration budget exceeded, 4 a check failed.)";

const char* kSweepHelp = R"(Outputs:
  sweep.csv  axis,axis_value,metric,stage,c,value   metric in feasible|threshold|
             log_value_start|scaled_log_value_start|risk_neutral_start|taylor_gap_max
Infeasible points are recorded with feasible=0 and skipped.
Exit codes: 0 ok, 1 usage/config error (including an empty value list).)";

const char* kCheckHelp = R"(Prints the beta recursion. With --out also writes
  feasibility.csv  t,beta,log_k,two_sigma2_beta,ok
Exit codes: 0 feasible, 1 usage/config error, 2 infeasible.)";

}  // namespace

ThresholdSchedule read_threshold_file(const std::string& path, int horizon) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open threshold file '" + path + "'");
  ThresholdSchedule s;
  s.threshold.assign(static_cast<std::size_t>(horizon) + 1, {kNoTransmit, kNoTransmit});
  std::vector<std::array<bool, 2>> seen(s.threshold.size(), {false, false});
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "stage,c,threshold") throw ConfigError("threshold file: unexpected header");
      header = true;
      continue;
    }
    const auto f = split_list(line);
    if (f.size() != 3) throw ConfigError("threshold file: malformed row '" + line + "'");
    const double stage = parse_double("stage", f[0]);
    const double ch = parse_double("channel", f[1]);
    const double th = f[2] == "inf" ? kNoTransmit : parse_double("threshold", f[2]);
    if (stage < 0 || stage > horizon || stage != std::floor(stage) || (ch != 0 && ch != 1) ||
        !(th >= 0)) {
      throw ConfigError("threshold file: invalid row '" + line + "'");
    }
    const auto t = static_cast<std::size_t>(stage);
    const int c = static_cast<int>(ch);
    if (seen[t][c]) throw ConfigError("threshold file: duplicate row '" + line + "'");
    seen[t][c] = true;
    s.threshold[t][c] = th;
  }
  for (const auto& st : seen) {
    if (!st[0] || !st[1]) {
      throw ConfigError("threshold file does not cover stages 0.." + std::to_string(horizon));
    }
  }
  return s;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-sensitive transmission scheduling over a Gilbert-Elliott channel"};
  app.require_subcommand(1);
  app.footer(
      "Config keys (flat key=value): a, sigma2, lambda, gamma, T, p01, p10, delta_max, "
      "n_points, quad_rule, quad_nodes, seed, n_rollouts.\n"
      "Exit codes: 0 ok, 1 usage/config, 2 infeasible, 3 budget exceeded, 4 check failed.");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Value iteration, policy and thresholds");
  add_common(solve_cmd, solve_args.common);
  solve_cmd->add_option("--space", solve_args.space, "Grid: folded (default) or original")
      ->check(CLI::IsMember({"folded", "original"}));
  solve_cmd->footer(kSolveHelp);

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo evaluation of a policy");
  add_common(sim_cmd, sim_args.common);
  sim_cmd->add_option("--policy", sim_args.policy, "Policy source (default solved)");
  sim_cmd->add_option("--thresholds", sim_args.threshold_file, "Threshold file for threshold-file");
  sim_cmd->add_option("--c0", sim_args.c0, "Initial channel: 0, 1 or stationary (default)");
  sim_cmd->add_flag("--trace", sim_args.trace, "Write trace.csv for rollout 0");
  sim_cmd->footer(kSimulateHelp);

  OracleArgs oracle_args;
  double delta_q = 0.0;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact certification on a quantized chain");
  add_common(oracle_cmd, oracle_args.common);
  oracle_cmd->add_option("--n-delta", oracle_args.n_delta, "Error states (odd, >= 3)");
  oracle_cmd->add_option("--noise-points", oracle_args.noise_points, "Noise support size: 2, 3, 5");
  auto* dq_opt = oracle_cmd->add_option(
      "--delta-q", delta_q, "Largest error state (default: spacing = smallest noise value)");
  oracle_cmd->add_option("--max-bits", oracle_args.max_bits,
                         "Enumeration budget, log2 of the policy count (default 34)");
  oracle_cmd->footer(kOracleHelp);

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Thresholds and values across gamma or lambda");
  add_common(sweep_cmd, sweep_args.common);
  sweep_cmd->add_option("--axis", sweep_args.axis, "gamma or lambda")->required();
  sweep_cmd->add_option("--values", sweep_args.values, "Comma-separated values")->required();
  sweep_cmd->footer(kSweepHelp);

  CommonOptions check_opts;
  auto* check_cmd = app.add_subcommand("check", "Feasibility check only");
  add_common(check_cmd, check_opts);
  check_cmd->footer(kCheckHelp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_args, out, err);
    if (*sim_cmd) return cmd_simulate(sim_args, out, err);
    if (*oracle_cmd) {
      if (*dq_opt) oracle_args.delta_q = delta_q;
      return cmd_oracle(oracle_args, out, err);
    }
    if (*sweep_cmd) return cmd_sweep(sweep_args, out, err);
    if (*check_cmd) return cmd_check(check_opts, check_cmd->count("--out") > 0, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InfeasibleError& e) {
    err << e.what() << '\n';
    return kExitInfeasible;
  } catch (const NonThresholdPolicy& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace rsched::cli
