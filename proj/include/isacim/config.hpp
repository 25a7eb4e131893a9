#pragma once

// Simulation configuration: a flat, typed key=value file with defaults from
// the reference operating table. Unknown keys are rejected with their line
// number; CLI flags override file values.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isacim/common.hpp"
#include "isacim/dof.hpp"

namespace isacim {

struct SimConfig {
  SchemeParams scheme;  // family plus its structural parameters
  double snr_db_min = -5.0;
  double snr_db_max = 35.0;
  double snr_db_step = 5.0;
  int n_symbols = 1000;
  int n_trials = 100;
  double tx_power_dbm = 30.0;
  double pathloss_exponent = 3.5;
  double rx_distance_min_m = 50.0;
  double rx_distance_max_m = 100.0;
  double target_distance_min_m = 10.0;
  double target_distance_max_m = 50.0;
  double power_split_comm = 0.5;
  double power_split_sens = 0.5;
  std::uint64_t seed = 12345;
  int threads = 1;
  std::string out_dir = ".";

  std::vector<double> snr_points() const {
    std::vector<double> v;
    for (double s = snr_db_min; s <= snr_db_max + 1e-9; s += snr_db_step) v.push_back(s);
    return v;
  }

  void validate() const {
    if (snr_db_step <= 0) throw config_error("config: snr_db_step must be positive");
    if (snr_db_min > snr_db_max) throw config_error("config: empty SNR range");
    if (n_symbols < 1) throw config_error("config: n_symbols must be >= 1");
    if (n_trials < 1) throw config_error("config: n_trials must be >= 1");
    if (threads < 1) throw config_error("config: threads must be >= 1");
    if (pathloss_exponent < 0) throw config_error("config: pathloss_exponent must be >= 0");
    if (rx_distance_min_m <= 0 || rx_distance_min_m > rx_distance_max_m)
      throw config_error("config: invalid receiver distance range");
    if (target_distance_min_m <= 0 || target_distance_min_m > target_distance_max_m)
      throw config_error("config: invalid target distance range");
    if (power_split_comm < 0 || power_split_sens < 0 ||
        std::abs(power_split_comm + power_split_sens - 1.0) > 1e-9)
      throw config_error("config: power split must be nonnegative and sum to 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw config_error("config line " + std::to_string(line) + ": invalid number for '" +
                       key + "': " + v);
  }
}

inline long long parse_int(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw config_error("config line " + std::to_string(line) + ": invalid integer for '" +
                       key + "': " + v);
  }
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw config_error("config line " + std::to_string(line) + ": invalid boolean for '" +
                     key + "': " + v);
}

inline std::vector<int> parse_int_list(const std::string& v, int line, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(static_cast<int>(parse_int(item, line, key)));
  }
  if (out.empty())
    throw config_error("config line " + std::to_string(line) + ": empty list for '" + key + "'");
  return out;
}

}  // namespace detail

// Applies key=value text onto cfg. '#' starts a comment; blank lines are
// skipped. Unknown keys and malformed values are reported with their line.
inline void apply_config_text(SimConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::string s = raw.substr(0, raw.find('#'));
    s = detail::trim(s);
    if (s.empty()) continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(line) + ": expected key = value");
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    if (key == "scheme") {
      cfg.scheme.family = scheme_family_from_string(val);
    } else if (key == "K") {
      cfg.scheme.K = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "U") {
      cfg.scheme.U = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "D") {
      cfg.scheme.D = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "d") {
      cfg.scheme.d = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "m") {
      cfg.scheme.m = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "n") {
      cfg.scheme.n = detail::parse_int_list(val, line, key);
    } else if (key == "add_mode") {
      cfg.scheme.add_mode = detail::parse_bool(val, line, key);
    } else if (key == "snr_db_min") {
      cfg.snr_db_min = detail::parse_double(val, line, key);
    } else if (key == "snr_db_max") {
      cfg.snr_db_max = detail::parse_double(val, line, key);
    } else if (key == "snr_db_step") {
      cfg.snr_db_step = detail::parse_double(val, line, key);
    } else if (key == "n_symbols") {
      cfg.n_symbols = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "n_trials") {
      cfg.n_trials = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "tx_power_dbm") {
      cfg.tx_power_dbm = detail::parse_double(val, line, key);
    } else if (key == "pathloss_exponent") {
      cfg.pathloss_exponent = detail::parse_double(val, line, key);
    } else if (key == "rx_distance_min_m") {
      cfg.rx_distance_min_m = detail::parse_double(val, line, key);
    } else if (key == "rx_distance_max_m") {
      cfg.rx_distance_max_m = detail::parse_double(val, line, key);
    } else if (key == "target_distance_min_m") {
      cfg.target_distance_min_m = detail::parse_double(val, line, key);
    } else if (key == "target_distance_max_m") {
      cfg.target_distance_max_m = detail::parse_double(val, line, key);
    } else if (key == "power_split_comm") {
      cfg.power_split_comm = detail::parse_double(val, line, key);
    } else if (key == "power_split_sens") {
      cfg.power_split_sens = detail::parse_double(val, line, key);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::parse_int(val, line, key));
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(detail::parse_int(val, line, key));
    } else if (key == "out_dir") {
      cfg.out_dir = val;
    } else {
      throw config_error("config line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
}

// Defaults overlaid with the file's contents, then validated. An empty file
// yields the full default configuration.
inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  SimConfig cfg;
  apply_config_text(cfg, buf.str());
  cfg.validate();
  return cfg;
}

inline nlohmann::json config_to_json(const SimConfig& c) {
  nlohmann::json j;
  j["scheme"] = to_string(c.scheme.family);
  j["K"] = c.scheme.K;
  j["U"] = c.scheme.U;
  j["D"] = c.scheme.D;
  j["d"] = c.scheme.d;
  j["m"] = c.scheme.m;
  j["n"] = c.scheme.n;
  j["add_mode"] = c.scheme.add_mode;
  j["snr_db_min"] = c.snr_db_min;
  j["snr_db_max"] = c.snr_db_max;
  j["snr_db_step"] = c.snr_db_step;
  j["n_symbols"] = c.n_symbols;
  j["n_trials"] = c.n_trials;
  j["tx_power_dbm"] = c.tx_power_dbm;
  j["pathloss_exponent"] = c.pathloss_exponent;
  j["rx_distance_min_m"] = c.rx_distance_min_m;
  j["rx_distance_max_m"] = c.rx_distance_max_m;
  j["target_distance_min_m"] = c.target_distance_min_m;
  j["target_distance_max_m"] = c.target_distance_max_m;
  j["power_split_comm"] = c.power_split_comm;
  j["power_split_sens"] = c.power_split_sens;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  return j;
}

}  // namespace isacim
