#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "sigattack/domain.hpp"

namespace sigattack {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines. `#` starts a comment. Unknown keys, malformed values and
/// duplicate keys raise ConfigError naming the line.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Emits every key with its current value; parse_config(to_text(c)) reproduces c.
std::string to_text(const ScenarioConfig& config);

/// Range checks that do not belong to any single key (e.g. g_min < g_max).
void check_config(const ScenarioConfig& config);

}  // namespace sigattack
