#pragma once

/// \file regression.hpp
/// Golden-fixture regression suite. A fixture file is JSON:
///
///   { "fixtures": [ { "name": ..., "theorem": ..., "config": { key: value, ... },
///                     "expect": [ { "term": label, "pointer": "/json/pointer", <check> }, ... ] } ] }
///
/// where <check> is one of `"equals": v`, `"max": v`, `"abs_max": v`, `"min": v`,
/// or `"value": v, "rel_tol": t`. Every fixture also requires the run's own assertions to pass.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "remform/config.hpp"
#include "remform/harness.hpp"
#include "remform/report_io.hpp"

namespace remform {

struct FixtureFailure {
  std::string fixture;
  std::string theorem;
  std::string term;
  std::string observed;
  std::string expected;
  std::string message() const {
    return fixture + " (" + theorem + "): " + term + " observed " + observed + ", expected " + expected;
  }
};

struct RegressionSummary {
  int fixtures = 0;
  int passed = 0;
  std::vector<FixtureFailure> failures;
  bool ok() const { return failures.empty() && fixtures > 0; }
};

namespace detail {

inline std::string json_scalar(const Json& j) {
  if (j.is_number_float()) return format_double(j.get<double>());
  return j.dump();
}

inline ExperimentConfig fixture_config(const Json& cfg) {
  ExperimentConfig c;
  for (const auto& [k, v] : cfg.items()) set_config_value(c, k, v.is_string() ? v.get<std::string>() : v.dump());
  return c;
}

/// Returns an empty string when the expectation holds, else the expected-side description.
inline std::string check_expectation(const Json& e, const Json& observed) {
  auto number = [&](double& out) {
    if (!observed.is_number()) return false;
    out = observed.get<double>();
    return std::isfinite(out);
  };
  double x = 0.0;
  if (e.contains("equals")) return observed == e["equals"] ? "" : "== " + json_scalar(e["equals"]);
  if (e.contains("max")) return number(x) && x <= e["max"].get<double>() ? "" : "<= " + json_scalar(e["max"]);
  if (e.contains("abs_max"))
    return number(x) && std::abs(x) <= e["abs_max"].get<double>() ? "" : "|x| <= " + json_scalar(e["abs_max"]);
  if (e.contains("min")) return number(x) && x >= e["min"].get<double>() ? "" : ">= " + json_scalar(e["min"]);
  if (e.contains("value")) {
    const double v = e["value"].get<double>(), t = e.value("rel_tol", 0.0);
    return number(x) && std::abs(x - v) <= t * std::abs(v) ? ""
                                                            : json_scalar(e["value"]) + " within " + json_scalar(e["rel_tol"]);
  }
  return "a known check kind";
}

}  // namespace detail

/// Runs every fixture in `golden` (in memory, no files written).
inline RegressionSummary regression_suite(const Json& golden, std::ostream* progress = nullptr) {
  RegressionSummary s;
  const Json& fixtures = golden.at("fixtures");
  for (const auto& f : fixtures) {
    ++s.fixtures;
    const std::string name = f.at("name").get<std::string>();
    const std::string theorem = f.value("theorem", std::string());
    const std::size_t before = s.failures.size();
    try {
      const Evaluation ev = evaluate(detail::fixture_config(f.at("config")));
      for (const auto& a : ev.assertions)
        if (!a.passed) s.failures.push_back({name, theorem, a.name, a.detail, "pass"});
      for (const auto& e : f.value("expect", Json::array())) {
        const std::string term = e.value("term", e.at("pointer").get<std::string>());
        const Json::json_pointer ptr(e.at("pointer").get<std::string>());
        if (!ev.report.contains(ptr)) {
          s.failures.push_back({name, theorem, term, "missing", e.at("pointer").get<std::string>()});
          continue;
        }
        const Json& obs = ev.report.at(ptr);
        if (const std::string want = detail::check_expectation(e, obs); !want.empty())
          s.failures.push_back({name, theorem, term, detail::json_scalar(obs), want});
      }
    } catch (const std::exception& ex) {
      s.failures.push_back({name, theorem, "run", ex.what(), "no error"});
    }
    const bool ok = s.failures.size() == before;
    if (ok) ++s.passed;
    if (progress) {
      *progress << (ok ? "PASS " : "FAIL ") << name << '\n';
      for (std::size_t i = before; i < s.failures.size(); ++i) *progress << "  " << s.failures[i].message() << '\n';
    }
  }
  return s;
}

inline Json load_golden(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot open fixture file " + path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(std::string("malformed fixture file: ") + e.what());
  }
}

inline Json to_json(const RegressionSummary& s) {
  Json fails = Json::array();
  for (const auto& f : s.failures)
    fails.push_back(Json{{"fixture", f.fixture},
                         {"theorem", f.theorem},
                         {"term", f.term},
                         {"observed", f.observed},
                         {"expected", f.expected}});
  return Json{{"fixtures", s.fixtures}, {"passed", s.passed}, {"ok", s.ok()}, {"failures", std::move(fails)}};
}

}  // namespace remform
