#pragma once

// Flat key=value run configuration.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rsched/params.hpp"
#include "rsched/quadrature.hpp"
#include "rsched/solver.hpp"

namespace rsched::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelParams params;
  GridSpec grid;
  QuadratureSpec quad;
  std::uint64_t seed = 12345;
  std::size_t n_rollouts = 100000;
};

/// Accepted keys, in the order they are echoed in output headers.
const std::vector<std::string>& config_keys();

/// Sets one key; throws ConfigError on unknown keys or malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses "key = value" lines; '#' starts a comment, blank lines are
/// ignored. Keys not present keep their defaults. Repeated keys are errors.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Validates parameters and the discretization settings.
void validate(const RunConfig& config);

/// "key=value" per key, in config_keys() order. Automatic grid settings are
/// shown with their resolved value when `grid` is given.
std::vector<std::string> describe(const RunConfig& config, const Grid* grid = nullptr);

}  // namespace rsched::cli
