#pragma once

// Run configuration for the command-line front end.
//
// Config files are flat "key = value" lines. '#' starts a comment. A line
// "[name]" opens a section; keys under a section apply only when running the
// subcommand of that name, keys before the first section apply to all.
// Command-line "key=value" overrides win over the file.

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dynvoi/errors.hpp"
#include "dynvoi/format.hpp"

namespace dynvoi {

inline const std::map<std::string, std::set<std::string>>& subcommand_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"filter", {"d", "f", "g", "h", "c", "mu0", "sigma0", "T"}},
      {"steady", {"d", "f", "g", "h", "tol", "max_iter"}},
      {"voi-sweep", {"d", "f", "g", "h", "plot"}},
      {"region", {"g"}},
      {"simulate", {"d", "f", "g", "h", "c", "mu0", "sigma0", "T", "paths", "seed"}},
      {"bellman",
       {"d", "f", "h", "b", "c", "delta", "n_mu", "n_sigma", "tol", "max_sweeps", "quad"}},
      {"euler-limit", {"d", "f", "b", "p", "h"}},
  };
  return keys;
}

inline const std::set<std::string>& common_keys() {
  static const std::set<std::string> keys = {"out", "format", "seed"};
  return keys;
}

struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> params;

  bool has(const std::string& key) const { return params.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }

  double number(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : parse_double(it->second, key);
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15)
      throw ConfigError("key '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;

  bool operator==(const RunConfig&) const = default;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

// "x", "x1,x2,..." or "start:step:stop" (stop included when on the lattice).
inline std::vector<double> parse_range(const std::string& text, const std::string& key) {
  const auto colon = split(text, ':');
  if (colon.size() == 3) {
    const double start = parse_double(colon[0], key);
    const double step = parse_double(colon[1], key);
    const double stop = parse_double(colon[2], key);
    if (!(step > 0.0)) throw ConfigError("key '" + key + "': range step must be positive");
    if (!(stop >= start)) throw ConfigError("key '" + key + "': range stop precedes start");
    const double span = (stop - start) / step;
    if (span > 1e7) throw ConfigError("key '" + key + "': range has too many points");
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = start + step * static_cast<double>(i);
    return v;
  }
  if (colon.size() != 1) throw ConfigError("key '" + key + "': ranges use start:step:stop");
  std::vector<double> v;
  for (const auto& item : split(text, ',')) v.push_back(parse_double(item, key));
  if (v.empty()) throw ConfigError("key '" + key + "' is empty");
  return v;
}

inline std::vector<double> RunConfig::list(const std::string& key,
                                           const std::vector<double>& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : parse_range(it->second, key);
}

inline void check_keys(const RunConfig& cfg) {
  const auto& table = subcommand_keys();
  auto it = table.find(cfg.subcommand);
  if (it == table.end()) throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
  for (const auto& [key, value] : cfg.params) {
    if (!it->second.count(key) && !common_keys().count(key))
      throw ConfigError("unknown key '" + key + "' for subcommand " + cfg.subcommand);
    if (value.empty()) throw ConfigError("key '" + key + "' has an empty value");
  }
}

inline std::pair<std::string, std::string> parse_assignment(const std::string& line,
                                                             const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + line + "'");
  std::string key = trim(std::string_view(line).substr(0, eq));
  std::string value = trim(std::string_view(line).substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": missing key");
  return {std::move(key), std::move(value)};
}

// Reads the keys that apply to `subcommand` from config text.
inline std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                            const std::string& subcommand,
                                                            const std::string& origin = "config") {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!subcommand_keys().count(section))
        throw ConfigError(where + ": unknown section '" + section + "'");
      continue;
    }
    auto [key, value] = parse_assignment(line, where);
    if (section.empty() || section == subcommand) out[key] = value;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Builds and key-checks a RunConfig. Values are validated at dispatch.
inline RunConfig make_run_config(const std::string& subcommand, const std::string& config_text,
                                 const std::vector<std::string>& overrides) {
  RunConfig cfg;
  cfg.subcommand = subcommand;
  if (!subcommand_keys().count(subcommand))
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  cfg.params = parse_config_text(config_text, subcommand);
  for (const auto& o : overrides) {
    auto [key, value] = parse_assignment(o, "command line");
    cfg.params[key] = value;
  }
  check_keys(cfg);
  return cfg;
}

}  // namespace dynvoi
