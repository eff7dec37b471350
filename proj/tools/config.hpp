#pragma once

// Sectioned key=value scenario files and the report every run produces.
//
//   # comment
//   [scenario]
//   kind = verify
//   gauge = power:p=0.5
//   suites = theorem-chain, regularizer
//
// Every section and key must be known; errors carry the line number.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bmo/error.hpp"

namespace bmo::cli {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Known keys per section.
using Schema = std::map<std::string, std::set<std::string>>;

class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(const std::string& text, const Schema& schema, const std::string& origin = "config") {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(is, raw)) {
      ++line;
      const std::string s = trim(raw);
      if (s.empty() || s[0] == '#' || s[0] == ';') continue;
      if (s.front() == '[') {
        if (s.back() != ']') cfg.error(line, "unterminated section header");
        section = trim(s.substr(1, s.size() - 2));
        if (!schema.count(section)) cfg.error(line, "unknown section [" + section + "]");
        cfg.sections_[section];
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) cfg.error(line, "expected key = value");
      if (section.empty()) cfg.error(line, "key outside any section");
      const std::string key = trim(s.substr(0, eq));
      if (key.empty()) cfg.error(line, "empty key");
      if (!schema.at(section).count(key)) cfg.error(line, "unknown key '" + key + "' in [" + section + "]");
      auto& entries = cfg.sections_[section];
      if (entries.count(key)) cfg.error(line, "duplicate key '" + key + "' in [" + section + "]");
      entries[key] = {trim(s.substr(eq + 1)), line};
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path, const Schema& schema) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::Config, "cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), schema, path);
  }

  bool has_section(const std::string& section) const { return sections_.count(section) != 0; }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = {value, 0};
  }

  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    return e ? to_double(*e, key) : fallback;
  }

  long get_long(const std::string& section, const std::string& key, long fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const double v = to_double(*e, key);
    if (v != std::floor(v) || std::fabs(v) > 9e15) error(e->line, "key '" + key + "' needs an integer");
    return static_cast<long>(v);
  }

  std::vector<std::string> get_list(const std::string& section, const std::string& key,
                                    const std::vector<std::string>& fallback) const {
    const Entry* e = find(section, key);
    return e ? split(e->value, ',') : fallback;
  }

  std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const auto& item : split(e->value, ',')) out.push_back(to_double({item, e->line}, key));
    return out;
  }

  /// Line of a key for error context, 0 when absent or set programmatically.
  int line_of(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    return e ? e->line : 0;
  }

  [[noreturn]] void error(int line, const std::string& what) const {
    fail(ErrorKind::Config, origin_ + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what);
  }

  const std::map<std::string, std::map<std::string, Entry>>& sections() const { return sections_; }

 private:
  double to_double(const Entry& e, const std::string& key) const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(e.value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != e.value.size() || !std::isfinite(v)) error(e.line, "key '" + key + "' needs a number, got '" + e.value + "'");
    return v;
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

/// Keys accepted by bmotool scenario files.
inline const Schema& scenario_schema() {
  static const Schema schema = {
      {"scenario", {"kind", "gauge", "n", "seed", "suites", "jobs", "out"}},
      {"theorem-chain", {"gauges", "dims", "trials", "max_depth_1", "max_depth_2", "max_depth_3", "min_grid",
                         "tolerance"}},
      {"bellman-geometry", {"gauges", "dims", "t", "boundary_points", "seam_samples", "convexity_trials",
                            "domain_trials", "ode_checkpoints", "induction_trials", "boundary_tolerance",
                            "closing_tolerance", "seam_tolerance", "convexity_tolerance", "ode_tolerance",
                            "induction_tolerance"}},
      {"truncation-lemmas", {"gauges", "dims", "trials", "max_depth_1", "max_depth_2", "max_depth_3", "tolerance"}},
      {"regularizer", {"gauge", "shift", "horizon", "eps", "scan_points", "tolerance"}},
      {"counterexamples", {"gauge", "trials", "max_depth", "annealing_steps", "annealing_depth", "annealing_grid",
                           "annealing_bound", "haar_terms", "haar_M", "haar_horizon", "audit_rows_depth"}},
      {"surface", {"t", "resolution", "x1_max"}},
      {"oracle", {"points", "depth", "budget"}},
  };
  return schema;
}

struct ScenarioConfig {
  std::string kind;
  std::string gauge = "power:p=0.5";
  int n = 1;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> suites;
  unsigned jobs = 1;
  std::string out = "out";
  ConfigFile file;

  std::uint64_t require_seed() const {
    require(seed.has_value(), ErrorKind::Config, "scenario '" + kind + "' is randomized and needs a seed");
    return *seed;
  }
};

inline ScenarioConfig make_scenario(ConfigFile file) {
  ScenarioConfig cfg;
  cfg.kind = file.get_string("scenario", "kind", "");
  static const std::set<std::string> kinds = {"verify", "surface", "oracle", "counterexample"};
  if (!kinds.count(cfg.kind))
    file.error(file.line_of("scenario", "kind"), "[scenario] kind must be verify, surface, oracle or counterexample");
  cfg.gauge = file.get_string("scenario", "gauge", cfg.gauge);
  cfg.n = static_cast<int>(file.get_long("scenario", "n", 1));
  if (cfg.n < 1 || cfg.n > 3) file.error(file.line_of("scenario", "n"), "n must be 1, 2 or 3");
  if (file.find("scenario", "seed")) {
    const long s = file.get_long("scenario", "seed", 0);
    if (s < 0) file.error(file.line_of("scenario", "seed"), "seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  cfg.suites = file.get_list("scenario", "suites", {});
  const long jobs = file.get_long("scenario", "jobs", 1);
  if (jobs < 1) file.error(file.line_of("scenario", "jobs"), "jobs must be >= 1");
  cfg.jobs = static_cast<unsigned>(jobs);
  cfg.out = file.get_string("scenario", "out", cfg.out);
  cfg.file = std::move(file);
  return cfg;
}

inline ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "config") {
  return make_scenario(ConfigFile::parse(text, scenario_schema(), origin));
}

inline ScenarioConfig load_scenario(const std::string& path) {
  return make_scenario(ConfigFile::load(path, scenario_schema()));
}

struct Check {
  std::string suite;
  std::string name;
  double margin = 0.0;
  double tolerance = 0.0;
  bool pass() const { return margin >= -tolerance; }  // false for NaN
};

struct Report {
  std::string kind;
  std::vector<std::pair<std::string, std::string>> echo;  // section.key, value
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  std::vector<std::string> artifacts;
  double wall_seconds = 0.0;

  void add(std::string suite, std::string name, double margin, double tolerance) {
    checks.push_back({std::move(suite), std::move(name), margin, tolerance});
  }
  void warn(const std::string& w) {
    if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
  }
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
  const Check* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass()) return &c;
    return nullptr;
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// suite,check,margin,tolerance,pass with round-trip precision. Holds no
/// timings, so equal inputs give equal bytes.
inline void write_margins_csv(std::ostream& os, const Report& r) {
  std::ostringstream line;
  os << "suite,check,margin,tolerance,pass\n";
  for (const auto& c : r.checks) {
    line.str("");
    line.precision(17);
    line << c.suite << ',' << c.name << ',' << c.margin << ',' << c.tolerance << ',' << (c.pass() ? 1 : 0) << '\n';
    os << line.str();
  }
}

inline void write_report_txt(std::ostream& os, const Report& r) {
  os << "scenario: " << r.kind << '\n';
  for (const auto& [k, v] : r.echo) os << "  " << k << " = " << v << '\n';
  std::size_t passed = 0;
  for (const auto& c : r.checks) passed += c.pass() ? 1 : 0;
  os << "\nchecks: " << passed << " / " << r.checks.size() << " passed\n";
  std::ostringstream row;
  row.precision(6);
  for (const auto& c : r.checks) {
    row.str("");
    row << (c.pass() ? "  PASS  " : "  FAIL  ") << c.suite << "  " << c.name << "  margin " << c.margin
        << "  tolerance " << c.tolerance << '\n';
    os << row.str();
  }
  if (!r.notes.empty()) {
    os << "\nnotes:\n";
    for (const auto& n : r.notes) os << "  " << n << '\n';
  }
  if (!r.warnings.empty()) {
    os << "\nwarnings:\n";
    for (const auto& w : r.warnings) os << "  " << w << '\n';
  }
  os << "\nwall time: " << r.wall_seconds << " s\n";
  if (!r.artifacts.empty()) {
    os << "artifacts:\n";
    for (const auto& a : r.artifacts) os << "  " << a << '\n';
  }
}

/// Scenario echo: every key that was read, in section and key order.
inline std::vector<std::pair<std::string, std::string>> echo_of(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [section, entries] : cfg.file.sections())
    for (const auto& [key, entry] : entries) out.push_back({section + "." + key, entry.value});
  return out;
}

}  // namespace bmo::cli
