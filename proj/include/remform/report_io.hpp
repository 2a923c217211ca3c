#pragma once

/// \file report_io.hpp
/// JSON and CSV encodings of the report types. JSON objects keep insertion order, so equal
/// inputs give byte-identical output.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "remform/eigensolver.hpp"
#include "remform/friedrichs.hpp"
#include "remform/identity_report.hpp"
#include "remform/steklov.hpp"

namespace remform {

using Json = nlohmann::ordered_json;

/// Non-finite doubles become null (JSON has no NaN/Inf).
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const GridSpec& g) {
  return Json{{"dim", g.dim}, {"lower", g.lower}, {"upper", g.upper},
              {"points", g.points}, {"spacing", g.spacing}, {"mask", g.mask}};
}

inline Json to_json(const EigenPair& e) {
  const GridDomain& d = e.domain();
  Json j;
  j["eigenvalue"] = num(e.eigenvalue);
  j["residual_norm"] = num(e.residual_norm);
  j["relative_residual"] = num(e.relative_residual);
  j["positivity_margin"] = num(e.positivity_margin);
  const Eigen::ArrayXd& w = e.backend == "spectral" ? d.closed_weights() : d.quadrature_weights();
  j["normalization_error"] = num(std::abs((w * e.eigenfunction.values.square()).sum() - 1.0));
  j["operator_consistency"] = num(e.operator_consistency);
  j["iterations"] = e.iterations;
  j["backend"] = e.backend;
  j["family"] = e.family;
  j["grid"] = to_json(describe_grid(d));
  return j;
}

namespace detail {

inline double weighted_sum(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v) { return (w * v).sum(); }

inline double valid_min(const GridFunction& f, const std::vector<std::uint8_t>& valid) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < valid.size(); ++n)
    if (valid[n]) lo = std::min(lo, f[n]);
  return lo;
}

}  // namespace detail

/// Summary of a pointwise report; `weights` are the backend's quadrature weights.
inline Json to_json(const IdentityReport& r, const Eigen::ArrayXd& weights) {
  Json j;
  j["identity"] = r.identity;
  j["parity"] = r.parity;
  j["m"] = r.m;
  j["lambda"] = num(r.lambda);
  j["sigma"] = num(r.sigma);
  j["backend"] = r.backend;
  j["family"] = r.family;
  j["grid"] = to_json(r.grid);
  j["lhs_norm"] = num(detail::masked_weighted_norm(weights, r.lhs.values, r.valid));
  j["lhs_integral"] = num(detail::weighted_sum(weights, r.lhs.values));
  Json terms = Json::array();
  for (const auto& t : r.rhs_terms)
    terms.push_back(Json{{"name", t.name},
                         {"kind", t.kind},
                         {"j", t.j},
                         {"weight", num(t.weight)},
                         {"norm", num(detail::masked_weighted_norm(weights, t.values.values, r.valid))},
                         {"min", num(detail::valid_min(t.values, r.valid))},
                         {"integral", num(detail::weighted_sum(weights, t.values.values))}});
  j["rhs_terms"] = std::move(terms);
  j["residual_norm"] = num(r.residual_norm);
  j["relative_residual"] = num(r.relative_residual);
  j["scale"] = num(r.scale);
  j["min_square"] = num(r.min_square());
  j["excluded_nodes"] = r.excluded_nodes;
  j["eigen_residual"] = num(r.eigen_residual);
  j["notices"] = r.notices;
  return j;
}

inline Json to_json(const RemainderReport& r) {
  auto terms = [](const std::vector<RemainderTerm>& ts) {
    Json a = Json::array();
    for (const auto& t : ts) a.push_back(Json{{"name", t.name}, {"kind", t.kind}, {"j", t.j}, {"value", num(t.value)}});
    return a;
  };
  Json j;
  j["identity"] = r.identity;
  j["parity"] = r.parity;
  j["m"] = r.m;
  j["lambda"] = num(r.lambda);
  j["sigma"] = num(r.sigma);
  j["backend"] = r.backend;
  j["family"] = r.family;
  j["lhs_integral"] = num(r.lhs_integral);
  j["scaled_mass"] = num(r.scaled_mass);
  j["remainder"] = num(r.remainder);
  j["remainder_terms"] = terms(r.remainder_terms);
  j["remainder_terms_total"] = num(r.remainder_terms_total);
  j["divergence_terms"] = terms(r.divergence_terms);
  j["divergence_total"] = num(r.divergence_total);
  j["balance"] = num(r.balance);
  j["relative_balance"] = num(r.relative_balance);
  j["scale"] = num(r.scale);
  j["normalized_remainder"] = num(r.normalized_remainder);
  j["min_remainder_term"] = num(r.min_remainder_term());
  j["proportionality_defect"] = num(r.proportionality_defect);
  if (r.identity == "friedrichs") {
    j["gap"] = num(r.gap);
    j["negative_gap"] = r.negative_gap;
  }
  j["identity_residual_norm"] = num(r.identity_residual_norm);
  j["identity_relative_residual"] = num(r.identity_relative_residual);
  j["eigen_residual"] = num(r.eigen_residual);
  j["notices"] = r.notices;
  return j;
}

inline Json to_json(const SigmaRow& r) {
  Json j;
  j["m"] = r.m;
  j["p"] = r.p;
  j["log_sigma"] = num(r.log_sigma);
  j["exact_sigma"] = r.exact ? Json(*r.exact) : Json(nullptr);
  j["root"] = num(r.root);
  j["lower"] = num(r.lower);
  j["upper"] = num(r.upper);
  j["within_bounds"] = r.within_bounds;
  j["distance_to_two"] = num(r.distance_to_two);
  return j;
}

inline Json to_json(const ConstantCheckReport& c) {
  return Json{{"trials", c.trials},           {"seed", c.seed},
              {"lambda", num(c.lambda)},      {"bound", num(c.bound)},
              {"tolerance", num(c.tolerance)}, {"max_ratio", num(c.max_ratio)},
              {"gap", num(c.gap)},            {"ground_ratio", num(c.ground_ratio)},
              {"ground_gap", num(c.ground_gap)}, {"violations", c.violations},
              {"passed", c.passed()}};
}

inline Json to_json(const TelescopingReport& t) {
  return Json{{"lhs_discrepancy", num(t.lhs_discrepancy)},
              {"lower_discrepancy", num(t.lower_discrepancy)},
              {"upper_discrepancy", num(t.upper_discrepancy)},
              {"scale", num(t.scale)}};
}

/// m, p_m, σ_m (exact integer when it fits, else empty), ln σ_m, σ_m^{1/p_m}, lower, upper.
inline void write_sigma_csv(std::ostream& os, const std::vector<SigmaRow>& rows, bool include_m1 = true) {
  os << "m,p_m,sigma_m,log_sigma_m,root,lower,upper,within_bounds\n";
  if (include_m1) os << "1,2,0,-inf,,,,\n";
  for (const auto& r : rows) {
    os << r.m << ',' << r.p << ',';
    if (r.exact) os << *r.exact;
    os << ',' << format_double(r.log_sigma) << ',' << format_double(r.root) << ',' << format_double(r.lower) << ','
       << format_double(r.upper) << ',' << (r.within_bounds ? "true" : "false") << '\n';
  }
}

/// One row per node: coordinates, lhs, every rhs term, residual.
inline void write_terms_csv(std::ostream& os, const IdentityReport& r) {
  std::vector<std::pair<std::string, const GridFunction*>> cols{{"lhs", &r.lhs}};
  for (const auto& t : r.rhs_terms) cols.emplace_back(t.name, &t.values);
  cols.emplace_back("residual", &r.residual);
  write_grid_csv(os, cols);
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path);
  f << j.dump(2) << '\n';
}

}  // namespace remform
