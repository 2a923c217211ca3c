#pragma once

/// \file config.hpp
/// Experiment configuration from plain `key = value` text.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "remform/errors.hpp"
#include "remform/grid_domain.hpp"

namespace remform {

enum class Theorem { steklov_even, steklov_odd, steklov_base, friedrichs, sigma_table, eigensolve, constant_check };
enum class BackendKind { finite_difference, spectral };
enum class PhiSource { eigen, manufactured, file };
enum class TrialKind { automatic, bump, sine, ground, ground_perturbed };

struct DomainSpec {
  int axes = 1;
  std::vector<double> lower{0.0};
  std::vector<double> upper{1.0};
  std::vector<int> points{129};
  std::string mask = "box";
  Point center{0, 0, 0};
  double radius = 1.0;
  double inner_radius = 0.5;
  double outer_radius = 1.0;
};

struct Tolerances {
  double eigen = 1e-10;
  double residual = 1e-8;   ///< relative identity residual, spectral backend
  double order_min = 1.7;
  double order_max = 2.3;
  double balance = 1e-4;    ///< relative balance of integrated identities
  double divergence = 1e-4; ///< |∫divergence| relative to the integrated scale
  double nonnegativity = 1e-12;
  double equality = 1e-6;
  double constant = 1e-3;
};

struct ExperimentConfig {
  Theorem theorem = Theorem::eigensolve;
  DomainSpec domain;
  std::string family = "euclidean";
  std::string coefficients;  ///< CSV for family = custom
  BackendKind backend = BackendKind::finite_difference;
  int m = 1;
  int refinements = 1;
  std::uint64_t seed = 1;
  int trials = 100;
  int max_m = 60;
  PhiSource phi = PhiSource::eigen;
  std::string phi_file;
  double phi_lambda = std::numeric_limits<double>::quiet_NaN();
  TrialKind trial = TrialKind::automatic;
  int modes = 5;
  int bump_exponent = 0;      ///< 0: theorem default
  double bump_radius = 0.0;   ///< fraction of each side; 0: theorem default
  double perturbation = 0.1;
  int max_iter = 500;
  double divergence_sign = 1.0;  ///< −1 flips every divergence term (negative control)
  Tolerances tol;
  std::map<std::string, std::string> raw;  ///< keys as given, for echoing into reports
};

inline const char* theorem_name(Theorem t) {
  switch (t) {
    case Theorem::steklov_even: return "steklov_even";
    case Theorem::steklov_odd: return "steklov_odd";
    case Theorem::steklov_base: return "steklov_base";
    case Theorem::friedrichs: return "friedrichs";
    case Theorem::sigma_table: return "sigma_table";
    case Theorem::eigensolve: return "eigensolve";
    case Theorem::constant_check: return "constant_check";
  }
  return "?";
}

inline const char* backend_name(BackendKind b) { return b == BackendKind::spectral ? "spectral" : "fd"; }

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(x)) throw InvalidInput("key '" + key + "': not a real number: '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size()) throw InvalidInput("key '" + key + "': not an integer: '" + v + "'");
  return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::vector<double> parse_reals(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(parse_real(key, s));
  return out;
}

}  // namespace detail

/// Applies one key. Unknown keys and malformed values are errors.
inline void set_config_value(ExperimentConfig& c, const std::string& key_in, const std::string& value_in) {
  using namespace detail;
  const std::string key = trim(key_in);
  const std::string v = trim(value_in);
  auto integer = [&] { return parse_integer(key, v); };
  auto real = [&] { return parse_real(key, v); };
  if (key == "theorem") {
    static const std::map<std::string, Theorem> names{
        {"steklov_even", Theorem::steklov_even}, {"steklov_odd", Theorem::steklov_odd},
        {"steklov_base", Theorem::steklov_base}, {"friedrichs", Theorem::friedrichs},
        {"sigma_table", Theorem::sigma_table},   {"eigensolve", Theorem::eigensolve},
        {"constant_check", Theorem::constant_check}};
    const auto it = names.find(v);
    if (it == names.end()) throw InvalidInput("unknown theorem '" + v + "'");
    c.theorem = it->second;
  } else if (key == "axes") {
    c.domain.axes = static_cast<int>(integer());
  } else if (key == "lower") {
    c.domain.lower = parse_reals(key, v);
  } else if (key == "upper") {
    c.domain.upper = parse_reals(key, v);
  } else if (key == "points") {
    c.domain.points.clear();
    for (double p : parse_reals(key, v)) {
      if (p != std::floor(p)) throw InvalidInput("points must be integers");
      c.domain.points.push_back(static_cast<int>(p));
    }
  } else if (key == "mask") {
    if (v != "box" && v != "disk" && v != "annulus") throw InvalidInput("mask must be box, disk or annulus");
    c.domain.mask = v;
  } else if (key == "center") {
    const auto xs = parse_reals(key, v);
    if (xs.size() > static_cast<std::size_t>(kMaxDim)) throw InvalidInput("center has too many coordinates");
    c.domain.center = {0, 0, 0};
    for (std::size_t i = 0; i < xs.size(); ++i) c.domain.center[i] = xs[i];
  } else if (key == "radius") {
    c.domain.radius = real();
  } else if (key == "inner_radius") {
    c.domain.inner_radius = real();
  } else if (key == "outer_radius") {
    c.domain.outer_radius = real();
  } else if (key == "family") {
    c.family = v;
  } else if (key == "coefficients") {
    c.coefficients = v;
  } else if (key == "backend") {
    if (v == "fd" || v == "finite_difference") c.backend = BackendKind::finite_difference;
    else if (v == "spectral") c.backend = BackendKind::spectral;
    else throw InvalidInput("backend must be fd or spectral");
  } else if (key == "m") {
    c.m = static_cast<int>(integer());
  } else if (key == "refinements") {
    c.refinements = static_cast<int>(integer());
  } else if (key == "seed") {
    const long long s = integer();
    if (s < 0) throw InvalidInput("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "trials") {
    c.trials = static_cast<int>(integer());
  } else if (key == "max_m") {
    c.max_m = static_cast<int>(integer());
  } else if (key == "phi") {
    if (v == "eigen") c.phi = PhiSource::eigen;
    else if (v == "manufactured") c.phi = PhiSource::manufactured;
    else if (v == "file") c.phi = PhiSource::file;
    else throw InvalidInput("phi must be eigen, manufactured or file");
  } else if (key == "phi_file") {
    c.phi_file = v;
    c.phi = PhiSource::file;
  } else if (key == "phi_lambda") {
    c.phi_lambda = real();
  } else if (key == "trial") {
    static const std::map<std::string, TrialKind> names{{"auto", TrialKind::automatic},
                                                        {"bump", TrialKind::bump},
                                                        {"sine", TrialKind::sine},
                                                        {"ground", TrialKind::ground},
                                                        {"ground_perturbed", TrialKind::ground_perturbed}};
    const auto it = names.find(v);
    if (it == names.end()) throw InvalidInput("unknown trial '" + v + "'");
    c.trial = it->second;
  } else if (key == "modes") {
    c.modes = static_cast<int>(integer());
  } else if (key == "bump_exponent") {
    c.bump_exponent = static_cast<int>(integer());
  } else if (key == "bump_radius") {
    c.bump_radius = real();
  } else if (key == "perturbation") {
    c.perturbation = real();
  } else if (key == "max_iter") {
    c.max_iter = static_cast<int>(integer());
  } else if (key == "divergence_sign") {
    c.divergence_sign = real();
  } else if (key == "eigen_tol") {
    c.tol.eigen = real();
  } else if (key == "residual_tol") {
    c.tol.residual = real();
  } else if (key == "order_min") {
    c.tol.order_min = real();
  } else if (key == "order_max") {
    c.tol.order_max = real();
  } else if (key == "balance_tol") {
    c.tol.balance = real();
  } else if (key == "divergence_tol") {
    c.tol.divergence = real();
  } else if (key == "nonnegativity_tol") {
    c.tol.nonnegativity = real();
  } else if (key == "equality_tol") {
    c.tol.equality = real();
  } else if (key == "constant_tol") {
    c.tol.constant = real();
  } else {
    throw InvalidInput("unknown config key '" + key + "'");
  }
  c.raw[key] = v;
}

/// Lines of `key = value`; `#` starts a comment; blank lines are ignored.
inline void apply_config_text(ExperimentConfig& c, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(c, line.substr(0, eq), line.substr(eq + 1));
  }
}

inline void apply_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_text(c, ss.str());
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  apply_config_text(c, text);
  return c;
}

/// Broadcasts single-valued bounds/points over the axes and checks cross-key constraints.
inline void validate(ExperimentConfig& c) {
  DomainSpec& d = c.domain;
  if (d.axes < 1 || d.axes > kMaxDim) throw InvalidInput("axes must be 1, 2 or 3");
  auto broadcast = [&](auto& v, const char* name) {
    if (v.size() == 1) v.resize(static_cast<std::size_t>(d.axes), v.front());
    if (v.size() != static_cast<std::size_t>(d.axes))
      throw InvalidInput(std::string(name) + " needs 1 or " + std::to_string(d.axes) + " values");
  };
  broadcast(d.lower, "lower");
  broadcast(d.upper, "upper");
  broadcast(d.points, "points");
  if (c.refinements < 1) throw InvalidInput("refinements must be at least 1");
  if (c.refinements > 6) throw InvalidInput("refinements above 6 are not supported");
  if (c.family == "heisenberg" && d.axes != 3) throw InvalidInput("the heisenberg family needs axes = 3");
  if (c.family == "custom" && c.coefficients.empty()) throw InvalidInput("family = custom needs coefficients = <csv>");
  if (c.family != "euclidean" && c.family != "heisenberg" && c.family != "custom")
    throw InvalidInput("unknown family '" + c.family + "'");
  if (c.family == "custom" && c.refinements > 1)
    throw InvalidInput("a custom coefficient table is sampled on one grid; use refinements = 1");
  if (c.backend == BackendKind::spectral) {
    if (c.family != "euclidean") throw InvalidInput("the spectral backend requires family = euclidean");
    if (d.mask != "box") throw InvalidInput("the spectral backend requires mask = box");
  }
  const int steklov_limit = c.backend == BackendKind::spectral ? 3 : 2;
  switch (c.theorem) {
    case Theorem::steklov_even:
      if (c.m < 1 || c.m > steklov_limit)
        throw InvalidInput("steklov_even needs 1 ≤ m ≤ " + std::to_string(steklov_limit) + " on this backend");
      break;
    case Theorem::steklov_odd:
      if (c.m < 0 || c.m > steklov_limit)
        throw InvalidInput("steklov_odd needs 0 ≤ m ≤ " + std::to_string(steklov_limit) + " on this backend");
      break;
    case Theorem::friedrichs:
      if (c.m < 1 || c.m > 10) throw InvalidInput("friedrichs needs 1 ≤ m ≤ 10");
      if (c.phi == PhiSource::file && c.phi_file.empty()) throw InvalidInput("phi = file needs phi_file = <csv>");
      if (c.phi == PhiSource::file && c.refinements > 1)
        throw InvalidInput("a φ file is sampled on one grid; use refinements = 1");
      break;
    case Theorem::sigma_table:
      if (c.max_m < 2 || c.max_m > 62) throw InvalidInput("max_m must lie in [2, 62]");
      break;
    case Theorem::constant_check:
      if (c.trials < 1) throw InvalidInput("trials must be at least 1");
      break;
    default: break;
  }
  if (c.phi == PhiSource::file && c.theorem != Theorem::friedrichs) {
    if (c.phi_file.empty()) throw InvalidInput("phi = file needs phi_file = <csv>");
    if (!(c.phi_lambda > 0.0)) throw InvalidInput("a φ file for Steklov identities needs phi_lambda > 0");
    if (c.refinements > 1) throw InvalidInput("a φ file is sampled on one grid; use refinements = 1");
  }
  if (c.modes < 1) throw InvalidInput("modes must be at least 1");
  if (c.max_iter < 1) throw InvalidInput("max_iter must be at least 1");
  if (c.tol.eigen <= 0.0) throw InvalidInput("eigen_tol must be positive");
}

/// points at refinement level l: (P − 1)·2^l + 1 per axis.
inline std::vector<int> refined_points(const std::vector<int>& base, int level) {
  std::vector<int> out;
  for (int p : base) out.push_back((p - 1) * (1 << level) + 1);
  return out;
}

inline DomainPtr build_domain(const DomainSpec& d, int level = 0) {
  const DomainPtr box = build_box_domain(d.lower, d.upper, refined_points(d.points, level));
  if (d.mask == "disk") return build_masked_domain(box, disk_indicator(d.center, d.radius), "disk");
  if (d.mask == "annulus")
    return build_masked_domain(box, annulus_indicator(d.center, d.inner_radius, d.outer_radius), "annulus");
  return box;
}

}  // namespace remform
