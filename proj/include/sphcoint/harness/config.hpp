#pragma once

// Experiment configuration: a flat "key = value" file with dotted keys.
// See docs/config.md for the grammar and the full key list.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphcoint/fgn.hpp"
#include "sphcoint/memest.hpp"
#include "sphcoint/spectral.hpp"

namespace sphcoint::harness {

/// Raised for malformed or inconsistent configuration; carries every
/// violation found, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

enum class Sigma1Case { a, b, none };

struct ExperimentConfig {
  int band_limit = 10;
  std::vector<double> memory{0.3};   // one value for every multipole, or one per multipole
  std::vector<double> weights{1.0};  // relative C_l(0), rescaled to unit variance
  std::size_t length = 1000;
  std::size_t replications = 200;
  std::size_t full_replications = 1000;
  std::vector<double> levels{-0.1, 0.1};
  int n_theta = 64;
  std::uint64_t master_seed = 2024;
  double bandwidth_exponent = 0.5;
  LagRule lag_rule = LagRule::paper();
  std::size_t report_lags = 20;
  bool area = true;
  bool length_functional = false;
  std::vector<int> chaos_orders;
  std::string output_dir = "out";
  unsigned workers = 1;
  std::vector<std::size_t> excursion_times{1, 2, 3, 10};
  std::optional<double> excursion_level;
  Sigma1Case sigma1_case = Sigma1Case::a;
  std::optional<double> sigma1_pilot;
  std::optional<int> ell_star;
  std::optional<double> sigma1_level;  // case b: use this level instead of u*

  std::vector<double> memory_per_multipole() const { return expand(memory); }
  std::vector<double> weights_per_multipole() const { return expand(weights); }

  /// Throws ConfigError listing every violation.
  MultipoleSpec spec() const {
    validate();
    return MultipoleSpec::normalized(memory_per_multipole(), weights_per_multipole());
  }

  std::size_t bandwidth() const { return default_bandwidth(length, bandwidth_exponent); }
  double snapshot_level() const { return excursion_level.value_or(levels.empty() ? 0.0 : levels.back()); }

  void validate() const {
    std::vector<std::string> v;
    if (band_limit < 0) v.push_back("field.band_limit must be >= 0");
    const auto n = static_cast<std::size_t>(std::max(band_limit, 0)) + 1;
    if (memory.size() != 1 && memory.size() != n)
      v.push_back("field.memory needs 1 or L+1 = " + std::to_string(n) + " values, got " + std::to_string(memory.size()));
    if (weights.size() != 1 && weights.size() != n)
      v.push_back("field.weights needs 1 or L+1 = " + std::to_string(n) + " values, got " +
                  std::to_string(weights.size()));
    if (length < 8) v.push_back("time.length must be >= 8");
    if (replications < 1) v.push_back("mc.replications must be >= 1");
    if (full_replications < 1) v.push_back("mc.full_replications must be >= 1");
    if (n_theta < 2) v.push_back("grid.n_theta must be >= 2");
    if (workers < 1) v.push_back("mc.workers must be >= 1");
    if (!(bandwidth_exponent > 0.0 && bandwidth_exponent < 1.0)) v.push_back("estimate.bandwidth_exponent must lie in (0, 1)");
    if (lag_rule.kind == LagRule::Kind::power && !(lag_rule.exponent > 0.0 && lag_rule.exponent < 1.0))
      v.push_back("estimate.lag_rule power exponent must lie in (0, 1)");
    if (report_lags < 1) v.push_back("output.report_lags must be >= 1");
    if (!area && !length_functional && chaos_orders.empty())
      v.push_back("functionals must request at least one of area, length, chaos:q");
    if ((area || length_functional) && levels.empty()) v.push_back("levels must not be empty");
    for (std::size_t i = 0; i < levels.size(); ++i)
      for (std::size_t j = i + 1; j < levels.size(); ++j)
        if (levels[i] == levels[j]) v.push_back("levels must be distinct");
    for (int q : chaos_orders)
      if (q < 1) v.push_back("chaos orders must be >= 1");
    if (sigma1_pilot && !(*sigma1_pilot > 0.0)) v.push_back("sigma1.pilot must be positive");
    if (sigma1_level && !(*sigma1_level > 0.0)) v.push_back("sigma1.level must be positive");
    if (ell_star && (*ell_star < 1 || *ell_star > band_limit)) v.push_back("sigma1.ell_star must lie in [1, L]");
    if (v.empty()) {
      try {
        MultipoleSpec::normalized(memory_per_multipole(), weights_per_multipole());
      } catch (const std::exception& e) {
        v.push_back(std::string("field: ") + e.what());
      }
    }
    if (!v.empty()) throw ConfigError(std::move(v));
  }

  /// Canonical text form; parse(to_text()) reproduces the configuration.
  std::string to_text(bool include_runtime = true) const {
    std::ostringstream os;
    os << "field.band_limit = " << band_limit << '\n';
    os << "field.memory = " << list(memory) << '\n';
    os << "field.weights = " << list(weights) << '\n';
    os << "time.length = " << length << '\n';
    os << "mc.replications = " << replications << '\n';
    os << "mc.full_replications = " << full_replications << '\n';
    os << "mc.master_seed = " << master_seed << '\n';
    os << "levels = " << list(levels) << '\n';
    os << "grid.n_theta = " << n_theta << '\n';
    os << "estimate.bandwidth_exponent = " << num(bandwidth_exponent) << '\n';
    os << "estimate.lag_rule = " << lag_rule_text() << '\n';
    os << "output.report_lags = " << report_lags << '\n';
    os << "functionals = " << functionals_text() << '\n';
    os << "excursion.times = " << list(excursion_times) << '\n';
    if (excursion_level) os << "excursion.level = " << num(*excursion_level) << '\n';
    os << "sigma1.case = " << (sigma1_case == Sigma1Case::a ? "a" : sigma1_case == Sigma1Case::b ? "b" : "none") << '\n';
    if (sigma1_pilot) os << "sigma1.pilot = " << num(*sigma1_pilot) << '\n';
    if (ell_star) os << "sigma1.ell_star = " << *ell_star << '\n';
    if (sigma1_level) os << "sigma1.level = " << num(*sigma1_level) << '\n';
    if (include_runtime) {
      os << "mc.workers = " << workers << '\n';
      os << "output.dir = " << output_dir << '\n';
    }
    return os.str();
  }

  /// FNV-1a of the canonical text without runtime-only keys (workers, output
  /// directory), so the hash identifies the numbers, not the machine.
  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_text(false)) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["field.band_limit"] = band_limit;
    j["field.memory"] = memory;
    j["field.weights"] = weights;
    j["time.length"] = length;
    j["mc.replications"] = replications;
    j["mc.master_seed"] = master_seed;
    j["levels"] = levels;
    j["grid.n_theta"] = n_theta;
    j["estimate.bandwidth_exponent"] = bandwidth_exponent;
    j["estimate.lag_rule"] = lag_rule_text();
    j["output.report_lags"] = report_lags;
    j["functionals"] = functionals_text();
    j["excursion.times"] = excursion_times;
    j["excursion.level"] = snapshot_level();
    j["sigma1.case"] = sigma1_case == Sigma1Case::a ? "a" : sigma1_case == Sigma1Case::b ? "b" : "none";
    if (sigma1_pilot) j["sigma1.pilot"] = *sigma1_pilot;
    if (ell_star) j["sigma1.ell_star"] = *ell_star;
    if (sigma1_level) j["sigma1.level"] = *sigma1_level;
    return j;
  }

  std::string lag_rule_text() const {
    return lag_rule.kind == LagRule::Kind::paper ? std::string("paper") : "power(" + num(lag_rule.exponent) + ")";
  }

  std::string functionals_text() const {
    std::vector<std::string> parts;
    if (area) parts.emplace_back("area");
    if (length_functional) parts.emplace_back("length");
    for (int q : chaos_orders) parts.push_back("chaos:" + std::to_string(q));
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
    return out;
  }

  static std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }

 private:
  std::vector<double> expand(const std::vector<double>& v) const {
    const auto n = static_cast<std::size_t>(std::max(band_limit, 0)) + 1;
    return v.size() == 1 ? std::vector<double>(n, v.front()) : v;
  }

  template <typename T>
  static std::string list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      if constexpr (std::is_floating_point_v<T>)
        out += num(v[i]);
      else
        out += std::to_string(v[i]);
    }
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    const double x = std::stod(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return x;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<long long> to_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t pos = 0;
  try {
    const long long x = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return x;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<std::uint64_t> to_unsigned(const std::string& s) {
  if (s.empty() || s.front() == '-') return std::nullopt;
  std::size_t pos = 0;
  try {
    const unsigned long long x = std::stoull(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return x;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Applies one "key = value" assignment; appends to `violations` on error.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw,
                          std::vector<std::string>& violations) {
  const std::string value = detail::trim(raw);
  auto bad = [&](const std::string& what) { violations.push_back(key + ": " + what + " (got '" + value + "')"); };
  auto doubles = [&]() -> std::optional<std::vector<double>> {
    std::vector<double> out;
    for (const auto& item : detail::split_list(value)) {
      const auto x = detail::to_double(item);
      if (!x) return std::nullopt;
      out.push_back(*x);
    }
    if (out.empty()) return std::nullopt;
    return out;
  };
  auto count = [&](std::size_t& dst) {
    if (const auto x = detail::to_unsigned(value)) dst = static_cast<std::size_t>(*x);
    else bad("expected a nonnegative integer");
  };
  auto real = [&](double& dst) {
    if (const auto x = detail::to_double(value)) dst = *x;
    else bad("expected a number");
  };

  if (key == "field.band_limit") {
    if (const auto x = detail::to_integer(value)) c.band_limit = static_cast<int>(*x);
    else bad("expected an integer");
  } else if (key == "field.memory") {
    if (const auto x = doubles()) c.memory = *x;
    else bad("expected a number or comma-separated list");
  } else if (key == "field.weights") {
    if (const auto x = doubles()) c.weights = *x;
    else bad("expected a number or comma-separated list");
  } else if (key == "time.length") {
    count(c.length);
  } else if (key == "mc.replications") {
    count(c.replications);
  } else if (key == "mc.full_replications") {
    count(c.full_replications);
  } else if (key == "mc.master_seed") {
    if (const auto x = detail::to_unsigned(value)) c.master_seed = *x;
    else bad("expected a nonnegative integer");
  } else if (key == "mc.workers") {
    std::size_t w = 0;
    count(w);
    c.workers = static_cast<unsigned>(w);
  } else if (key == "levels") {
    if (value.empty()) c.levels.clear();
    else if (const auto x = doubles()) c.levels = *x;
    else bad("expected a comma-separated list of numbers");
  } else if (key == "grid.n_theta") {
    if (const auto x = detail::to_integer(value)) c.n_theta = static_cast<int>(*x);
    else bad("expected an integer");
  } else if (key == "estimate.bandwidth_exponent") {
    real(c.bandwidth_exponent);
  } else if (key == "estimate.lag_rule") {
    if (value == "paper") {
      c.lag_rule = LagRule::paper();
    } else if (value.rfind("power(", 0) == 0 && value.back() == ')') {
      if (const auto x = detail::to_double(detail::trim(value.substr(6, value.size() - 7))))
        c.lag_rule = LagRule::power(*x);
      else
        bad("expected power(<exponent>)");
    } else {
      bad("expected 'paper' or 'power(<exponent>)'");
    }
  } else if (key == "output.report_lags") {
    count(c.report_lags);
  } else if (key == "functionals") {
    c.area = false;
    c.length_functional = false;
    c.chaos_orders.clear();
    for (const auto& item : detail::split_list(value)) {
      if (item == "area") {
        c.area = true;
      } else if (item == "length") {
        c.length_functional = true;
      } else if (item.rfind("chaos:", 0) == 0) {
        const auto q = detail::to_integer(item.substr(6));
        if (q) c.chaos_orders.push_back(static_cast<int>(*q));
        else bad("chaos order must be an integer");
      } else {
        bad("unknown functional '" + item + "'");
      }
    }
  } else if (key == "output.dir") {
    c.output_dir = value;
  } else if (key == "excursion.times") {
    c.excursion_times.clear();
    if (!value.empty()) {
      for (const auto& item : detail::split_list(value)) {
        const auto t = detail::to_unsigned(item);
        if (t && *t >= 1) c.excursion_times.push_back(static_cast<std::size_t>(*t));
        else bad("times are 1-based positive integers");
      }
    }
  } else if (key == "excursion.level") {
    double u = 0.0;
    real(u);
    c.excursion_level = u;
  } else if (key == "sigma1.case") {
    if (value == "a") c.sigma1_case = Sigma1Case::a;
    else if (value == "b") c.sigma1_case = Sigma1Case::b;
    else if (value == "none") c.sigma1_case = Sigma1Case::none;
    else bad("expected a, b or none");
  } else if (key == "sigma1.pilot") {
    double s = 0.0;
    real(s);
    c.sigma1_pilot = s;
  } else if (key == "sigma1.level") {
    double u = 0.0;
    real(u);
    c.sigma1_level = u;
  } else if (key == "sigma1.ell_star") {
    if (const auto x = detail::to_integer(value)) c.ell_star = static_cast<int>(*x);
    else bad("expected an integer");
  } else {
    violations.push_back("unknown key '" + key + "'");
  }
}

/// Parses configuration text on top of `base`. Lines are "key = value";
/// '#' starts a comment; blank lines are ignored; a key may appear once.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  std::vector<std::string> violations;
  std::map<std::string, int> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      violations.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) {
      violations.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    if (auto [it, fresh] = seen.emplace(key, lineno); !fresh) {
      violations.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                           std::to_string(it->second) + ")");
      continue;
    }
    apply_setting(base, key, line.substr(eq + 1), violations);
  }
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Table presets: L = 10, d = 0.3, T = 1000, levels +-u.
inline ExperimentConfig paper_preset(double u) {
  ExperimentConfig c;
  c.band_limit = 10;
  c.memory = {0.3};
  c.weights = {1.0};
  c.length = 1000;
  c.replications = 200;
  c.full_replications = 1000;
  c.levels = {-u, u};
  c.n_theta = 64;
  c.lag_rule = LagRule::paper();
  c.area = true;
  c.length_functional = false;
  c.sigma1_case = Sigma1Case::a;
  c.excursion_level = u;
  return c;
}

inline ExperimentConfig paper_table1() { return paper_preset(0.1); }
inline ExperimentConfig paper_table2() { return paper_preset(0.5); }

}  // namespace sphcoint::harness
