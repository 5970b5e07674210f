#include "config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace rsched::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"a",         "sigma2",   "lambda",     "gamma",
                                             "T",         "p01",      "p10",        "delta_max",
                                             "n_points",  "quad_rule", "quad_nodes", "seed",
                                             "n_rollouts"};
  return keys;
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  auto& p = c.params;
  if (key == "a") {
    p.a = parse_number<double>(key, value);
  } else if (key == "sigma2") {
    p.sigma2 = parse_number<double>(key, value);
  } else if (key == "lambda") {
    p.lambda = parse_number<double>(key, value);
  } else if (key == "gamma") {
    p.gamma = parse_number<double>(key, value);
  } else if (key == "T") {
    p.horizon = parse_number<int>(key, value);
  } else if (key == "p01") {
    p.p01 = parse_number<double>(key, value);
  } else if (key == "p10") {
    p.p10 = parse_number<double>(key, value);
  } else if (key == "delta_max") {
    if (value == "auto") {
      c.grid.delta_max.reset();
    } else {
      c.grid.delta_max = parse_number<double>(key, value);
    }
  } else if (key == "n_points") {
    if (value == "auto") {
      c.grid.n_points.reset();
    } else {
      c.grid.n_points = parse_number<int>(key, value);
    }
  } else if (key == "quad_rule") {
    try {
      c.quad.rule = parse_quad_rule(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "quad_nodes") {
    c.quad.n_nodes = parse_number<int>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "n_rollouts") {
    c.n_rollouts = parse_number<std::size_t>(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    try {
      apply_setting(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, std::move(base));
}

void validate(const RunConfig& c) {
  try {
    c.params.validate();
    c.quad.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.grid.delta_max && !(*c.grid.delta_max > 0.0)) {
    throw ConfigError("delta_max must be > 0 or auto");
  }
  if (c.grid.n_points && (*c.grid.n_points < 3 || *c.grid.n_points % 2 == 0)) {
    throw ConfigError("n_points must be odd and >= 3, or auto");
  }
  if (c.n_rollouts == 0) throw ConfigError("n_rollouts must be > 0");
}

std::vector<std::string> describe(const RunConfig& c, const Grid* grid) {
  const auto& p = c.params;
  auto grid_value = [&](bool automatic, const std::string& resolved, const std::string& fixed) {
    if (!automatic) return fixed;
    return grid ? "auto(" + resolved + ")" : std::string("auto");
  };
  std::vector<std::string> out{
      "a=" + format_double(p.a),
      "sigma2=" + format_double(p.sigma2),
      "lambda=" + format_double(p.lambda),
      "gamma=" + format_double(p.gamma),
      "T=" + std::to_string(p.horizon),
      "p01=" + format_double(p.p01),
      "p10=" + format_double(p.p10),
      "delta_max=" + grid_value(!c.grid.delta_max, grid ? format_double(grid->delta_max()) : "",
                                c.grid.delta_max ? format_double(*c.grid.delta_max) : ""),
      "n_points=" + grid_value(!c.grid.n_points, grid ? std::to_string(grid->n_points()) : "",
                               c.grid.n_points ? std::to_string(*c.grid.n_points) : ""),
      "quad_rule=" + to_string(c.quad.rule),
      "quad_nodes=" + std::to_string(c.quad.n_nodes),
      "seed=" + std::to_string(c.seed),
      "n_rollouts=" + std::to_string(c.n_rollouts),
  };
  return out;
}

}  // namespace rsched::cli
