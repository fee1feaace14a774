#pragma once

#include "vskgp/kernels.hpp"

#include <cctype>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vskgp {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string strip_quotes(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  return t;
}

/// Splits on commas outside quotes and parentheses.
inline std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool quoted = false;
  for (const char c : s) {
    if (c == '"') quoted = !quoted;
    if (!quoted) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      if (c == ',' && depth == 0) {
        out.push_back(cur);
        cur.clear();
        continue;
      }
    }
    cur += c;
  }
  if (!trim(cur).empty()) out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(trim(s), &pos);
    if (pos != trim(s).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("could not parse number '" + s + "' in " + what);
  }
}

}  // namespace detail

inline RadialFamily parse_family(const std::string& name) {
  const std::string n = detail::trim(name);
  if (n == "gaussian" || n == "sqexp" || n == "se") return RadialFamily::Gaussian;
  if (n == "maternc0" || n == "matern12") return RadialFamily::MaternC0;
  if (n == "maternc2" || n == "matern32") return RadialFamily::MaternC2;
  if (n == "maternc4" || n == "matern52") return RadialFamily::MaternC4;
  if (n == "wendland") return RadialFamily::Wendland;
  if (n == "imq") return RadialFamily::InverseMultiquadric;
  throw ConfigError("unknown kernel family '" + n + "'");
}

/// Scaling-map grammar:
///   "zero" | "jump(0.5)" | "corner(0.5,0.5)" | "weierstrass(0.5,3,4)" | "target"
/// "target" mimics the experiment's target function and needs that context.
inline ScalingMap parse_scaling_config(const std::string& text,
                                       const std::optional<TargetFunction>& target_context = {}) {
  const std::string s = detail::strip_quotes(text);
  if (s == "zero") return ScalingMap::zero();
  if (s == "target") {
    if (!target_context)
      throw ConfigError("psi \"target\" needs an experiment target to mimic");
    return ScalingMap::target_mimic(*target_context);
  }
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    throw ConfigError("could not parse scaling map '" + s + "'");
  const std::string head = detail::trim(s.substr(0, open));
  const auto args = detail::split_fields(s.substr(open + 1, s.size() - open - 2));
  if (head == "jump") {
    if (args.size() != 1) throw ConfigError("jump(x0) takes one argument");
    return ScalingMap::jump_indicator(detail::parse_number(args[0], "jump"));
  }
  if (head == "corner") {
    if (args.size() != 2) throw ConfigError("corner(x0,R) takes two arguments");
    return ScalingMap::corner_bump(detail::parse_number(args[0], "corner"),
                                   detail::parse_number(args[1], "corner"));
  }
  if (head == "weierstrass") {
    if (args.size() != 3) throw ConfigError("weierstrass(a,b,K) takes three arguments");
    return ScalingMap::weierstrass_partial(
        detail::parse_number(args[0], "weierstrass"), detail::parse_number(args[1], "weierstrass"),
        static_cast<int>(detail::parse_number(args[2], "weierstrass")));
  }
  throw ConfigError("unknown scaling map '" + head + "'");
}

/// Parsed form of: {family = "maternc2", lengthscale = 0.0650, vsk = "jump(0.5)"}
struct KernelConfig {
  RadialFamily family = RadialFamily::Gaussian;
  double lengthscale = 1.0;
  std::string vsk;  // empty means no scaling map

  [[nodiscard]] StationaryKernel stationary() const { return {family, lengthscale}; }

  [[nodiscard]] KernelFn kernel(const std::optional<TargetFunction>& target_context = {}) const {
    if (vsk.empty() || detail::strip_quotes(vsk) == "zero") return stationary();
    return VskKernel(stationary(), parse_scaling_config(vsk, target_context));
  }
};

inline KernelConfig parse_kernel_config(const std::string& text) {
  std::string s = detail::trim(text);
  if (!s.empty() && s.front() == '{') {
    if (s.back() != '}') throw ConfigError("kernel config: unbalanced braces");
    s = s.substr(1, s.size() - 2);
  }
  KernelConfig cfg;
  bool have_family = false;
  for (const std::string& field : detail::split_fields(s)) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ConfigError("kernel config: expected key = value in '" + field + "'");
    const std::string key = detail::trim(field.substr(0, eq));
    const std::string value = field.substr(eq + 1);
    if (key == "family") {
      cfg.family = parse_family(detail::strip_quotes(value));
      have_family = true;
    } else if (key == "lengthscale") {
      cfg.lengthscale = detail::parse_number(value, "lengthscale");
      if (!(cfg.lengthscale > 0.0)) throw ConfigError("kernel config: lengthscale must be positive");
    } else if (key == "vsk" || key == "psi") {
      cfg.vsk = detail::strip_quotes(value);
    } else {
      throw ConfigError("kernel config: unknown key '" + key + "'");
    }
  }
  if (!have_family) throw ConfigError("kernel config: missing family");
  return cfg;
}

}  // namespace vskgp
