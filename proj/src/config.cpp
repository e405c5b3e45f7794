#include "sigattack/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace sigattack {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("not a number: '" + v + "'");
  return out;
}

template <typename Int>
Int to_int(const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError("not an integer: '" + v + "'");
  return out;
}

struct Key {
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

Key real(double ScenarioConfig::*m) {
  return {[m](ScenarioConfig& c, const std::string& v) { c.*m = to_double(v); },
          [m](const ScenarioConfig& c) { return fmt::format("{}", c.*m); }};
}

Key integer(int ScenarioConfig::*m) {
  return {[m](ScenarioConfig& c, const std::string& v) { c.*m = to_int<int>(v); },
          [m](const ScenarioConfig& c) { return fmt::format("{}", c.*m); }};
}

Key choice(std::string ScenarioConfig::*m, std::initializer_list<const char*> allowed) {
  std::vector<const char*> options(allowed);
  return {[m, options](ScenarioConfig& c, const std::string& v) {
            for (const char* a : options)
              if (v == a) {
                c.*m = v;
                return;
              }
            std::string list;
            for (const char* a : options) list += std::string(list.empty() ? "" : "|") + a;
            throw ConfigError("expected one of " + list + ", got '" + v + "'");
          },
          [m](const ScenarioConfig& c) { return c.*m; }};
}

const std::map<std::string, Key>& keys() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    t["demand"] = {[](ScenarioConfig& c, const std::string& v) { c.demand_vph.fill(to_double(v)); },
                   nullptr};
    for (int p = 1; p <= 8; ++p) {
      t[fmt::format("demand.{}", p)] = {
          [p](ScenarioConfig& c, const std::string& v) { c.demand_vph[p - 1] = to_double(v); },
          [p](const ScenarioConfig& c) { return fmt::format("{}", c.demand_vph[p - 1]); }};
    }
    t["comm_range"] = real(&ScenarioConfig::comm_range);
    t["free_flow_speed"] = real(&ScenarioConfig::free_flow_speed);
    t["g_min"] = real(&ScenarioConfig::g_min);
    t["g_max"] = real(&ScenarioConfig::g_max);
    t["transition"] = real(&ScenarioConfig::transition);
    t["red_clearance"] = real(&ScenarioConfig::red_clearance);
    t["sim_hz"] = integer(&ScenarioConfig::sim_hz);
    t["seed"] = {[](ScenarioConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>(v); },
                 [](const ScenarioConfig& c) { return fmt::format("{}", c.seed); }};
    t["duration_h"] = real(&ScenarioConfig::duration_h);
    t["approach_length"] = real(&ScenarioConfig::approach_length);
    t["jam_spacing"] = real(&ScenarioConfig::jam_spacing);
    t["wave_speed"] = real(&ScenarioConfig::wave_speed);
    t["floor_speed"] = real(&ScenarioConfig::floor_speed);
    t["saturation_headway"] = real(&ScenarioConfig::saturation_headway);
    t["objective"] = choice(&ScenarioConfig::objective, {"delay", "queue"});
    t["planning_horizon"] = real(&ScenarioConfig::planning_horizon);
    t["queue_speed"] = real(&ScenarioConfig::queue_speed);
    t["fr_window"] = real(&ScenarioConfig::fr_window);
    t["hw_cap"] = real(&ScenarioConfig::hw_cap);
    t["max_depth"] = integer(&ScenarioConfig::max_depth);
    t["min_samples_leaf"] = integer(&ScenarioConfig::min_samples_leaf);
    t["gain"] = choice(&ScenarioConfig::gain, {"unweighted", "weighted"});
    t["tree2_mode"] = choice(&ScenarioConfig::tree2_mode, {"per_ring", "pooled"});
    t["cv_repeats"] = integer(&ScenarioConfig::cv_repeats);
    t["cv_train_fraction"] = real(&ScenarioConfig::cv_train_fraction);
    t["budget"] = integer(&ScenarioConfig::budget);
    t["replications"] = integer(&ScenarioConfig::replications);
    t["training_hours"] = real(&ScenarioConfig::training_hours);
    return t;
  }();
  return table;
}

}  // namespace

void check_config(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  for (double d : c.demand_vph) require(d >= 0.0, "demand must be non-negative");
  require(c.comm_range > 0.0, "comm_range must be positive");
  require(c.free_flow_speed > 0.0, "free_flow_speed must be positive");
  require(c.g_min > 0.0 && c.g_min <= c.g_max, "need 0 < g_min <= g_max");
  require(c.transition >= 0.0, "transition must be non-negative");
  require(c.red_clearance >= 0.0 && c.red_clearance <= c.transition,
          "red_clearance must lie in [0, transition]");
  require(c.sim_hz > 0, "sim_hz must be positive");
  require(c.approach_length >= c.comm_range, "approach_length must cover comm_range");
  require(c.jam_spacing > 0.0 && c.wave_speed > 0.0, "jam_spacing and wave_speed must be positive");
  require(c.wave_speed * c.dt() < c.jam_spacing, "wave_speed * dt must stay below jam_spacing");
  require(c.floor_speed > 0.0, "floor_speed must be positive");
  require(c.saturation_headway > 0.0, "saturation_headway must be positive");
  require(c.planning_horizon >= 2.0 * c.max_barrier_length() - 1e-9,
          "planning_horizon must cover two barriers of maximum length");
  require(c.fr_window > 0.0 && c.hw_cap > 0.0, "fr_window and hw_cap must be positive");
  require(c.max_depth >= 0 && c.min_samples_leaf >= 1, "bad tree limits");
  require(c.cv_repeats >= 1, "cv_repeats must be >= 1");
  require(c.cv_train_fraction > 0.0 && c.cv_train_fraction < 1.0, "cv_train_fraction must be in (0,1)");
  require(c.budget >= 0, "budget must be >= 0");
  require(c.replications >= 1, "replications must be >= 1");
}

ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig config;
  std::set<std::string> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = keys().find(key);
    if (it == keys().end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    if (!seen.insert(key).second)
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    try {
      it->second.set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}: {}", line_no, key, e.what()));
    }
  }
  check_config(config);
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

std::string to_text(const ScenarioConfig& config) {
  std::string out;
  for (const auto& [name, key] : keys()) {
    if (!key.get) continue;
    out += fmt::format("{} = {}\n", name, key.get(config));
  }
  return out;
}

}  // namespace sigattack
