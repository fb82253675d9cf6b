#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lprop/domain.hpp"
#include "lprop/errors.hpp"
#include "lprop/expr.hpp"
#include "lprop/operators.hpp"

namespace lprop {

/// One parsed `section.key = value` line.
struct ConfigEntry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

/// Line-oriented experiment configuration. Keys are `section.key`,
/// expression values are double-quoted, lists are comma separated.
/// Unknown keys are rejected after typed extraction.
class ExperimentConfig {
 public:
  static ExperimentConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), path);
  }

  static ExperimentConfig from_text(const std::string& text, const std::string& name = "<config>") {
    ExperimentConfig cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto first = line.find_first_not_of(" \t\r\n");
      if (first == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": expected 'section.key = value'");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty() || key.find('.') == std::string::npos)
        throw ConfigError(name + ":" + std::to_string(lineno) + ": key must look like section.key");
      cfg.entries_[key] = ConfigEntry{value, lineno, false};
    }
    return cfg;
  }

  /// Apply a `--set section.key=value` style override.
  void set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + assignment + "' must look like section.key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos)
      throw ConfigError("override key '" + key + "' must look like section.key");
    entries_[key] = ConfigEntry{trim(assignment.substr(eq + 1)), 0, false};
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string raw(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
    it->second.used = true;
    return it->second.value;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double get_real(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError("missing config key '" + key + "'");
    }
    return parse_real(key, raw(key));
  }

  std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError("missing config key '" + key + "'");
    }
    const std::string v = raw(key);
    try {
      std::size_t used = 0;
      const long long r = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected an integer, got '" + v + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(where(key) + ": expected true/false, got '" + v + "'");
  }

  std::vector<double> get_list(const std::string& key) const {
    const std::string v = raw(key);
    std::vector<double> out;
    std::string token;
    std::istringstream ss(v);
    while (std::getline(ss, token, ',')) out.push_back(parse_real(key, trim(token)));
    if (out.empty()) throw ConfigError(where(key) + ": expected a comma-separated list");
    return out;
  }

  /// Expression values must be double-quoted.
  std::string get_expression_text(const std::string& key) const {
    const std::string v = raw(key);
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
      throw ConfigError(where(key) + ": expression value must be double-quoted");
    return v.substr(1, v.size() - 2);
  }

  /// Every key must have been consumed by a typed getter.
  void reject_unknown_keys() const {
    for (const auto& [key, entry] : entries_) {
      if (!entry.used)
        throw ConfigError(name_ + ":" + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }

  template <class Fn>
  void for_each_key(Fn&& fn) const {
    for (const auto& [key, entry] : entries_) fn(key, entry.line);
  }

  std::string where(const std::string& key) const {
    const auto it = entries_.find(key);
    const int line = (it != entries_.end()) ? it->second.line : 0;
    return name_ + ":" + std::to_string(line) + ": " + key;
  }

  const std::string& name() const { return name_; }

 private:
  static std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    const auto b = s.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
  }

  double parse_real(const std::string& key, const std::string& v) const {
    try {
      std::size_t used = 0;
      const double r = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError(where(key) + ": expected a real number, got '" + v + "'");
    }
  }

  std::string name_;
  std::map<std::string, ConfigEntry> entries_;
};

/// Typed views assembled from a config.

inline OperatorSpec make_operator(const ExperimentConfig& cfg) {
  const int n = static_cast<int>(cfg.get_int("operator.n"));
  if (n < 1 || n > 9) throw ConfigError("operator.n must be in 1..9");
  OperatorSpec op = OperatorSpec::make(n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      const std::string key = "operator.a" + std::to_string(i) + std::to_string(j);
      if (!cfg.has(key)) continue;
      try {
        op.A(i - 1, j - 1) = parse_expression(cfg.get_expression_text(key), n);
      } catch (const ParseError& e) {
        throw ConfigError(cfg.where(key) + ": " + e.what());
      }
    }
    const std::string key = "operator.b" + std::to_string(i);
    if (!cfg.has(key)) continue;
    try {
      op.b[static_cast<std::size_t>(i - 1)] = parse_expression(cfg.get_expression_text(key), n);
    } catch (const ParseError& e) {
      throw ConfigError(cfg.where(key) + ": " + e.what());
    }
  }
  return op;
}

inline DomainSpec make_domain(const ExperimentConfig& cfg, int n) {
  const std::string kind = cfg.get_string("domain.kind", "box");
  auto interval_at = [&](int k) {
    const std::string key = "domain.box" + std::to_string(k);
    const auto v = cfg.get_list(key);
    if (v.size() != 2) throw ConfigError(cfg.where(key) + ": expected 'lo, hi'");
    return Interval{v[0], v[1]};
  };
  if (kind == "box") {
    std::vector<Interval> ivs;
    for (int k = 1; k <= n; ++k) ivs.push_back(interval_at(k));
    return DomainSpec::box(std::move(ivs));
  }
  if (kind == "boxball") {
    const auto center = cfg.get_list("domain.ball_center");
    const double radius = cfg.get_real("domain.ball_radius");
    const int leading = n - static_cast<int>(center.size());
    if (leading < 1)
      throw ConfigError("domain.ball_center leaves no leading box axis");
    std::vector<Interval> ivs;
    for (int k = 1; k <= leading; ++k) ivs.push_back(interval_at(k));
    return DomainSpec::box_ball(std::move(ivs), center, radius);
  }
  throw ConfigError("domain.kind must be box or boxball, got '" + kind + "'");
}

/// Boundary data spec: `constant <v>` | `expression "<expr>"` |
/// `indicator lo1,hi1,lo2,hi2,...`.
struct BoundarySpec {
  enum class Kind { Constant, Expression, Indicator } kind = Kind::Constant;
  double constant = 1.0;
  Expr expression;
  std::vector<Interval> box;

  double operator()(std::span<const double> x) const {
    switch (kind) {
      case Kind::Constant: return constant;
      case Kind::Expression: return expression.evaluate(x);
      case Kind::Indicator: {
        for (std::size_t d = 0; d < box.size(); ++d) {
          if (x[d] < box[d].lo || x[d] > box[d].hi) return 0.0;
        }
        return 1.0;
      }
    }
    return 0.0;
  }
};

inline BoundarySpec make_boundary_spec(const ExperimentConfig& cfg, int n) {
  BoundarySpec spec;
  if (!cfg.has("pde.boundary")) return spec;  // defaults to constant 1
  const std::string v = cfg.raw("pde.boundary");
  std::istringstream ss(v);
  std::string kind;
  ss >> kind;
  std::string rest;
  std::getline(ss, rest);
  const auto a = rest.find_first_not_of(" \t");
  rest = (a == std::string::npos) ? "" : rest.substr(a);
  if (kind == "constant") {
    try {
      spec.kind = BoundarySpec::Kind::Constant;
      spec.constant = std::stod(rest);
    } catch (const std::exception&) {
      throw ConfigError(cfg.where("pde.boundary") + ": expected 'constant <value>'");
    }
  } else if (kind == "expression") {
    if (rest.size() < 2 || rest.front() != '"' || rest.back() != '"')
      throw ConfigError(cfg.where("pde.boundary") + ": expression must be double-quoted");
    spec.kind = BoundarySpec::Kind::Expression;
    try {
      spec.expression = parse_expression(rest.substr(1, rest.size() - 2), n);
    } catch (const ParseError& e) {
      throw ConfigError(cfg.where("pde.boundary") + ": " + e.what());
    }
  } else if (kind == "indicator") {
    spec.kind = BoundarySpec::Kind::Indicator;
    std::vector<double> vals;
    std::string token;
    std::istringstream ls(rest);
    while (std::getline(ls, token, ',')) {
      try {
        vals.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw ConfigError(cfg.where("pde.boundary") + ": bad indicator box");
      }
    }
    if (vals.size() != static_cast<std::size_t>(2 * n))
      throw ConfigError(cfg.where("pde.boundary") + ": indicator box needs 2n numbers");
    for (int d = 0; d < n; ++d) spec.box.push_back({vals[2 * d], vals[2 * d + 1]});
  } else {
    throw ConfigError(cfg.where("pde.boundary") +
                      ": kind must be constant, expression or indicator");
  }
  return spec;
}

}  // namespace lprop
