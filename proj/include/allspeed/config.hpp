#pragma once

// Run configuration: flat `key = value` files and their validation.

#include <allspeed/elliptic.hpp>
#include <allspeed/errors.hpp>
#include <allspeed/integrate.hpp>
#include <allspeed/state.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace allspeed {

class ConfigError : public Error {
public:
  using Error::Error;
};

enum class Preset { Example1, Example2, Example3, Custom };

inline const char* to_string(Preset p) {
  switch (p) {
  case Preset::Example1: return "example1";
  case Preset::Example2: return "example2";
  case Preset::Example3: return "example3";
  case Preset::Custom: return "custom";
  }
  return "?";
}

struct RunConfig {
  Preset preset = Preset::Example1;
  int dimension = 1;
  double lambda_coeff = 1.0;
  double gamma = 2.0;
  double epsilon = 1.0;
  double alpha = 1.0;
  double sigma = 0.9;
  std::size_t m = 100;
  std::size_t m1 = 20;
  std::size_t m2 = 20;
  double domain_a = 0.0; ///< custom 1D only
  double domain_b = 1.0;
  std::optional<double> dt; ///< fixed step; adaptive when absent
  double t_final = 0.1;
  StepperKind stepper = StepperKind::AP;
  SchemeVariant variant = SchemeVariant::LD;
  Stencil2D stencil = Stencil2D::Reduced;
  std::vector<double> snapshot_times; ///< defaults to {t_final}
  std::string output_dir = "out";
  std::string initial_csv; ///< custom preset only
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double linear_tol = 1e-11;
  bool dphi2_literal = true;

  SchemeParams scheme_params() const {
    SchemeParams p;
    p.epsilon = epsilon;
    p.alpha = alpha;
    p.sigma = sigma;
    if (dt) p.dt_policy = FixedDt{*dt};
    p.newton_tol = newton_tol;
    p.newton_max_iter = newton_max_iter;
    p.linear_tol = linear_tol;
    p.dphi2_literal = dphi2_literal;
    return p;
  }

  EquationOfState eos() const { return {lambda_coeff, gamma}; }

  std::vector<double> effective_snapshots() const {
    return snapshot_times.empty() ? std::vector<double>{t_final} : snapshot_times;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  // Accept n/d fractions such as 1/340, the natural way to write mesh steps.
  if (const auto slash = v.find('/'); slash != std::string::npos) {
    const double r =
        parse_double(key, trim(v.substr(0, slash))) / parse_double(key, trim(v.substr(slash + 1)));
    if (!std::isfinite(r)) throw ConfigError("key '" + key + "': '" + v + "' is not a finite number");
    return r;
  }
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty() || !std::isfinite(out))
    throw ConfigError("key '" + key + "': '" + v + "' is not a finite number");
  return out;
}

inline long parse_int(const std::string& key, const std::string& v) {
  long out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  return out;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  const long n = parse_int(key, v);
  if (n <= 0) throw ConfigError("key '" + key + "' must be a positive integer");
  return static_cast<std::size_t>(n);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': '" + v + "' is not a boolean");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

} // namespace detail

inline Preset parse_preset(const std::string& v) {
  if (v == "example1") return Preset::Example1;
  if (v == "example2") return Preset::Example2;
  if (v == "example3") return Preset::Example3;
  if (v == "custom") return Preset::Custom;
  throw ConfigError("unknown preset '" + v + "'");
}

inline StepperKind parse_stepper(const std::string& v) {
  if (v == "ap") return StepperKind::AP;
  if (v == "explicit_llf") return StepperKind::ExplicitLLF;
  if (v == "ice") return StepperKind::ICE;
  throw ConfigError("unknown stepper '" + v + "'");
}

inline SchemeVariant parse_variant(const std::string& v) {
  if (v == "NL" || v == "nl") return SchemeVariant::NL;
  if (v == "L" || v == "l") return SchemeVariant::L;
  if (v == "LD" || v == "ld") return SchemeVariant::LD;
  throw ConfigError("unknown variant '" + v + "'");
}

inline Stencil2D parse_stencil(const std::string& v) {
  if (v == "wide") return Stencil2D::Wide;
  if (v == "reduced") return Stencil2D::Reduced;
  throw ConfigError("unknown stencil '" + v + "'");
}

/// Key/value pairs in the order given; later entries override earlier ones.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline ConfigEntries parse_config_text(const std::string& text) {
  ConfigEntries out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

inline ConfigEntries read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

struct PresetDefaults {
  int dimension;
  double lambda_coeff;
  double gamma;
};

inline std::optional<PresetDefaults> preset_defaults(Preset p) {
  switch (p) {
  case Preset::Example1: return PresetDefaults{1, 1.0, 2.0};
  case Preset::Example2: return PresetDefaults{1, 1.0, 1.4};
  case Preset::Example3: return PresetDefaults{2, 1.0, 2.0};
  case Preset::Custom: return std::nullopt;
  }
  return std::nullopt;
}

} // namespace detail

/// Builds a RunConfig from entries. The preset is applied first so that it
/// fixes the equation of state and dimension; an explicit value that
/// contradicts it is an error. Unknown keys are errors.
inline RunConfig build_config(const ConfigEntries& entries) {
  RunConfig c;
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : entries) kv[k] = v;

  if (auto it = kv.find("preset"); it != kv.end()) c.preset = parse_preset(it->second);
  const auto defaults = detail::preset_defaults(c.preset);
  if (defaults) {
    c.dimension = defaults->dimension;
    c.lambda_coeff = defaults->lambda_coeff;
    c.gamma = defaults->gamma;
    if (c.preset == Preset::Example2) {
      c.domain_a = -1.0;
      c.domain_b = 1.0;
    }
    if (c.preset == Preset::Example3) c.alpha = 0.0;
  }

  auto fixed_by_preset = [&](const std::string& key, double preset_value, double given) {
    if (defaults && given != preset_value)
      throw ConfigError("key '" + key + "' contradicts preset " + to_string(c.preset));
  };

  for (const auto& [key, v] : kv) {
    if (key == "preset") continue;
    if (key == "dimension") {
      const long d = detail::parse_int(key, v);
      if (d != 1 && d != 2) throw ConfigError("dimension must be 1 or 2");
      fixed_by_preset(key, defaults ? defaults->dimension : 0, static_cast<double>(d));
      c.dimension = static_cast<int>(d);
    } else if (key == "lambda_coeff") {
      const double x = detail::parse_double(key, v);
      fixed_by_preset(key, c.lambda_coeff, x);
      c.lambda_coeff = x;
    } else if (key == "gamma") {
      const double x = detail::parse_double(key, v);
      fixed_by_preset(key, c.gamma, x);
      c.gamma = x;
    } else if (key == "domain_a" || key == "domain_b") {
      if (c.preset != Preset::Custom) throw ConfigError("key '" + key + "' is only valid for the custom preset");
      (key == "domain_a" ? c.domain_a : c.domain_b) = detail::parse_double(key, v);
    } else if (key == "epsilon") c.epsilon = detail::parse_double(key, v);
    else if (key == "alpha") c.alpha = detail::parse_double(key, v);
    else if (key == "sigma") c.sigma = detail::parse_double(key, v);
    else if (key == "m") c.m = detail::parse_count(key, v);
    else if (key == "m1") c.m1 = detail::parse_count(key, v);
    else if (key == "m2") c.m2 = detail::parse_count(key, v);
    else if (key == "dt") {
      if (v == "adaptive") c.dt.reset();
      else c.dt = detail::parse_double(key, v);
    } else if (key == "t_final") c.t_final = detail::parse_double(key, v);
    else if (key == "stepper") c.stepper = parse_stepper(v);
    else if (key == "variant") c.variant = parse_variant(v);
    else if (key == "stencil") c.stencil = parse_stencil(v);
    else if (key == "snapshot_times") c.snapshot_times = detail::parse_list(key, v);
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "initial_csv") c.initial_csv = v;
    else if (key == "newton_tol") c.newton_tol = detail::parse_double(key, v);
    else if (key == "newton_max_iter") c.newton_max_iter = static_cast<int>(detail::parse_int(key, v));
    else if (key == "linear_tol") c.linear_tol = detail::parse_double(key, v);
    else if (key == "dphi2_literal") c.dphi2_literal = detail::parse_bool(key, v);
    else throw ConfigError("unknown key '" + key + "'");
  }
  return c;
}

/// Checks everything a run needs before it starts.
inline void validate_config(const RunConfig& c) {
  if (!(c.t_final > 0.0)) throw ConfigError("t_final must be positive");
  for (double t : c.snapshot_times)
    if (!(t >= 0.0 && t <= c.t_final)) throw ConfigError("snapshot time outside [0, t_final]");
  if (auto issues = validate_params(c.scheme_params()); !issues.empty())
    throw ConfigError(ParamError(issues).what());
  if (!(c.lambda_coeff > 0.0) || !(c.gamma >= 1.0)) throw ConfigError("invalid equation of state");
  if (c.preset == Preset::Custom && c.initial_csv.empty())
    throw ConfigError("custom preset requires initial_csv");
  if (c.dimension == 2) {
    if (c.stepper != StepperKind::AP) throw ConfigError("2D runs support only the ap stepper");
    if (c.m1 < 4 || c.m2 < 4) throw ConfigError("m1 and m2 must be >= 4");
    if (c.stencil == Stencil2D::Wide && (c.m1 % 2 != 0 || c.m2 % 2 != 0))
      throw ConfigError("wide stencil requires even m1 and m2");
  } else {
    if (c.stepper == StepperKind::AP && c.variant != SchemeVariant::LD && c.m % 2 != 0)
      throw ConfigError("variants NL and L require an even cell count");
    if (!(c.domain_b > c.domain_a)) throw ConfigError("domain_b must exceed domain_a");
  }
}

/// Echo of every field as key/value strings, in a fixed order.
inline ConfigEntries config_echo(const RunConfig& c) {
  auto num = [](double x) {
    std::ostringstream o;
    o.precision(17);
    o << x;
    return o.str();
  };
  std::string snaps;
  for (double t : c.effective_snapshots()) snaps += (snaps.empty() ? "" : ",") + num(t);
  ConfigEntries e{{"preset", to_string(c.preset)},
                  {"dimension", std::to_string(c.dimension)},
                  {"lambda_coeff", num(c.lambda_coeff)},
                  {"gamma", num(c.gamma)},
                  {"epsilon", num(c.epsilon)},
                  {"alpha", num(c.alpha)},
                  {"sigma", num(c.sigma)}};
  if (c.dimension == 1) {
    e.emplace_back("m", std::to_string(c.m));
    e.emplace_back("stepper", to_string(c.stepper));
    e.emplace_back("variant", to_string(c.variant));
  } else {
    e.emplace_back("m1", std::to_string(c.m1));
    e.emplace_back("m2", std::to_string(c.m2));
    e.emplace_back("stencil", to_string(c.stencil));
    e.emplace_back("dphi2_literal", c.dphi2_literal ? "true" : "false");
  }
  if (c.preset == Preset::Custom) {
    e.emplace_back("initial_csv", c.initial_csv);
    if (c.dimension == 1) {
      e.emplace_back("domain_a", num(c.domain_a));
      e.emplace_back("domain_b", num(c.domain_b));
    }
  }
  e.emplace_back("dt", c.dt ? num(*c.dt) : "adaptive");
  e.emplace_back("t_final", num(c.t_final));
  e.emplace_back("snapshot_times", snaps);
  e.emplace_back("newton_tol", num(c.newton_tol));
  e.emplace_back("newton_max_iter", std::to_string(c.newton_max_iter));
  e.emplace_back("linear_tol", num(c.linear_tol));
  return e;
}

} // namespace allspeed
