#pragma once

/// \file steklov.hpp
/// Pointwise higher-order Steklov remainder identities and their integrated forms.
///
/// With q = Xφ/φ, −𝓛φ = λφ and v_j = 𝓛^j u:
///   base:  |Xu|² − λu² = |Xu − qu|² + X·(qu²)
///   even:  |𝓛^m u|² − λ^{2m}u² = Σ_{j<m} λ^{2(m−1−j)}|v_{j+1} + λv_j|²
///              + 2λ^{2(m−1−j)+1}(|Xv_j − qv_j|² + X·(q v_j² − v_j Xv_j))
///   odd:   |X𝓛^m u|² − λ^{2m+1}u² = |Xv_m − qv_m|² + X·(q v_m²)
///              + Σ_{j<m} λ^{2(m−j)−1}|v_{j+1} + λv_j|² + 2λ^{2(m−j)}(|Xv_j − qv_j|² + X·(q v_j² − v_j Xv_j))
/// The left side is built from L_power directly, the right side from an iterated sublaplacian,
/// so the two sides share only the primitive operators.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "remform/calculus.hpp"
#include "remform/eigensolver.hpp"
#include "remform/errors.hpp"
#include "remform/identity_report.hpp"
#include "remform/trial_functions.hpp"

namespace remform {

/// Largest m accepted per backend: high powers of 1/h swamp finite differences sooner.
template <Calculus B>
int max_steklov_order(const B& b) {
  return b.requires_collar() ? 2 : 3;
}

namespace detail {

template <Calculus B>
void check_order_and_collar(const B& b, const GridFunction& u, int m, int min_m, int collar) {
  require_domain(u, b.domain());
  if (m < min_m) throw InvalidInput("m must be at least " + std::to_string(min_m));
  if (m > max_steklov_order(b))
    throw InvalidInput("m = " + std::to_string(m) + " exceeds the limit " + std::to_string(max_steklov_order(b)) +
                       " of the " + std::string(b.name()) + " backend");
  if (b.requires_collar()) {
    const int have = collar_width(u);
    if (have < collar) throw CollarTooThin(have, collar);
  }
}

template <Calculus B>
IdentityReport start_report(const B& b, const EigenPair& eig, const char* identity, const char* parity, int m) {
  require_domain(eig.eigenfunction, b.domain());
  if (!(eig.eigenvalue > 0.0)) throw InvalidInput("eigenvalue must be positive");
  IdentityReport r;
  r.identity = identity;
  r.parity = parity;
  r.m = m;
  r.lambda = eig.eigenvalue;
  r.eigen_residual = eig.residual_norm;
  return r;
}

}  // namespace detail

/// |Xu|² − λu² = |Xu − qu|² + X·(qu²).
template <Calculus B>
IdentityReport base_identity(const B& b, const GridFunction& u, const EigenPair& eig) {
  detail::check_order_and_collar(b, u, 0, 0, 1);
  IdentityReport r = detail::start_report(b, eig, "steklov_base", "odd", 0);
  const LogGradient lg = log_gradient(b, eig.eigenfunction);
  require_positive_on_support(lg, {&u});
  const VectorGridFunction xu = b.gradient(u);
  const Eigen::ArrayXd grad2 = xu.squared_norm().values, mass = r.lambda * u.values.square();
  r.lhs = GridFunction(u.domain, grad2 - mass);
  r.rhs_terms.push_back(detail::square_x_term(lg, u, xu, 1.0, 0));
  r.rhs_terms.push_back(detail::divergence_term(b, lg, u, nullptr, 1.0, 0));
  r.valid = lg.valid;
  r.excluded_nodes = lg.excluded;
  detail::finalize(r, b, {grad2, mass});
  return r;
}

template <Calculus B>
IdentityReport even_identity(const B& b, const GridFunction& u, const EigenPair& eig, int m) {
  detail::check_order_and_collar(b, u, m, 1, 2 * (m + 1));
  IdentityReport r = detail::start_report(b, eig, "steklov_even", "even", m);
  const double lam = r.lambda;
  const LogGradient lg = log_gradient(b, eig.eigenfunction);

  const GridFunction lm = b.L_power(u, m, SupportCheck::skip);
  const Eigen::ArrayXd top = lm.values.square(), mass = std::pow(lam, 2 * m) * u.values.square();
  r.lhs = GridFunction(u.domain, top - mass);

  GridFunction v = u;
  for (int j = 0; j < m; ++j) {
    require_positive_on_support(lg, {&v});
    const GridFunction next = b.sublaplacian(v, SupportCheck::skip);
    const VectorGridFunction xv = b.gradient(v);
    const double wl = std::pow(lam, 2 * (m - 1 - j));
    const double wx = 2.0 * std::pow(lam, 2 * (m - 1 - j) + 1);
    r.rhs_terms.push_back(detail::square_l_term(next, v, lam, wl, j));
    r.rhs_terms.push_back(detail::square_x_term(lg, v, xv, wx, j));
    r.rhs_terms.push_back(detail::divergence_term(b, lg, v, &xv, wx, j));
    v = next;
  }
  r.valid = lg.valid;
  r.excluded_nodes = lg.excluded;
  detail::finalize(r, b, {top, mass});
  return r;
}

template <Calculus B>
IdentityReport odd_identity(const B& b, const GridFunction& u, const EigenPair& eig, int m) {
  detail::check_order_and_collar(b, u, m, 0, 2 * m + 1);
  IdentityReport r = detail::start_report(b, eig, "steklov_odd", "odd", m);
  const double lam = r.lambda;
  const LogGradient lg = log_gradient(b, eig.eigenfunction);

  const VectorGridFunction xlm = b.gradient(b.L_power(u, m, SupportCheck::skip));
  const Eigen::ArrayXd top = xlm.squared_norm().values, mass = std::pow(lam, 2 * m + 1) * u.values.square();
  r.lhs = GridFunction(u.domain, top - mass);

  std::vector<IdentityTerm> interior_terms;
  GridFunction v = u;
  for (int j = 0; j < m; ++j) {
    require_positive_on_support(lg, {&v});
    const GridFunction next = b.sublaplacian(v, SupportCheck::skip);
    const VectorGridFunction xv = b.gradient(v);
    const double wl = std::pow(lam, 2 * (m - j) - 1);
    const double wx = 2.0 * std::pow(lam, 2 * (m - j));
    interior_terms.push_back(detail::square_l_term(next, v, lam, wl, j));
    interior_terms.push_back(detail::square_x_term(lg, v, xv, wx, j));
    interior_terms.push_back(detail::divergence_term(b, lg, v, &xv, wx, j));
    v = next;
  }
  require_positive_on_support(lg, {&v});
  const VectorGridFunction xv = b.gradient(v);
  r.rhs_terms.push_back(detail::square_x_term(lg, v, xv, 1.0, m));
  for (auto& t : interior_terms) r.rhs_terms.push_back(std::move(t));
  r.rhs_terms.push_back(detail::divergence_term(b, lg, v, nullptr, 1.0, m));
  r.valid = lg.valid;
  r.excluded_nodes = lg.excluded;
  detail::finalize(r, b, {top, mass});
  return r;
}

enum class Parity { even, odd };

inline Parity parse_parity(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  throw InvalidInput("parity must be even or odd, got '" + s + "'");
}

/// Integrates an already evaluated even/odd/base report. The left side is recomputed from
/// L_power directly, not from the report.
template <Calculus B>
RemainderReport integrated_remainder(const B& b, const GridFunction& u, const EigenPair& eig, const IdentityReport& r) {
  const int m = r.m;
  const bool even = r.parity == "even";
  RemainderReport rr;
  detail::integrate_terms(rr, r, b);
  const double lam = eig.eigenvalue;
  const double mass = b.integrate(GridFunction(u.domain, u.values.square()));
  const GridFunction lm = b.L_power(u, m, SupportCheck::skip);
  if (even) {
    rr.lhs_integral = b.integrate(GridFunction(u.domain, lm.values.square()));
    rr.scaled_mass = std::pow(lam, 2 * m) * mass;
  } else {
    rr.lhs_integral = b.integrate(b.gradient(lm).squared_norm());
    rr.scaled_mass = std::pow(lam, 2 * m + 1) * mass;
  }
  rr.equality_scale = std::pow(lam, 2 * m) * mass;
  rr.eigen_residual = eig.residual_norm;
  rr.proportionality_defect = proportionality_defect(b, u, eig.eigenfunction);
  detail::close_balance(rr);
  return rr;
}

template <Calculus B>
RemainderReport integrated_remainder(const B& b, const GridFunction& u, const EigenPair& eig, int m, Parity parity) {
  return integrated_remainder(b, u, eig, parity == Parity::even ? even_identity(b, u, eig, m) : odd_identity(b, u, eig, m));
}

/// Pointwise check of the inductive step: even(2) − λ²·even(1) against even(1) applied to 𝓛u.
struct TelescopingReport {
  double lhs_discrepancy = 0.0;   ///< max |lhs₂ − λ²lhs₁ − lhs₁(𝓛u)| / scale
  double lower_discrepancy = 0.0;  ///< max over j = 0 terms of |t₂ − λ²t₁| / scale
  double upper_discrepancy = 0.0;  ///< max over j = 1 terms of |t₂ − t₁(𝓛u)| / scale
  double scale = 0.0;              ///< max |·| over all compared arrays
  double max_discrepancy() const { return std::max({lhs_discrepancy, lower_discrepancy, upper_discrepancy}); }
};

template <Calculus B>
TelescopingReport telescoping_check(const B& b, const GridFunction& u, const EigenPair& eig) {
  const IdentityReport e2 = even_identity(b, u, eig, 2);
  const IdentityReport e1 = even_identity(b, u, eig, 1);
  const GridFunction lu = b.sublaplacian(u, SupportCheck::skip);
  const IdentityReport e1l = even_identity(b, lu, eig, 1);
  const double l2 = eig.eigenvalue * eig.eigenvalue;
  const auto& valid = e2.valid;

  TelescopingReport t;
  auto vmax = [&](const Eigen::ArrayXd& a) {
    double s = 0.0;
    for (std::size_t n = 0; n < valid.size(); ++n)
      if (valid[n]) s = std::max(s, std::abs(a[static_cast<Eigen::Index>(n)]));
    return s;
  };
  t.scale = std::max({vmax(e2.lhs.values), vmax(l2 * e1.lhs.values), vmax(e1l.lhs.values)});
  for (const auto* r : {&e2, &e1, &e1l})
    for (const auto& term : r->rhs_terms) t.scale = std::max(t.scale, vmax(term.values.values));
  if (t.scale == 0.0) return t;

  t.lhs_discrepancy = vmax(e2.lhs.values - l2 * e1.lhs.values - e1l.lhs.values) / t.scale;
  for (const char* kind : {"square_L", "square_X", "divergence"}) {
    const auto& t20 = e2.term(term_name(kind, 0)).values.values;
    const auto& t10 = e1.term(term_name(kind, 0)).values.values;
    const auto& t21 = e2.term(term_name(kind, 1)).values.values;
    const auto& t1l = e1l.term(term_name(kind, 0)).values.values;
    t.lower_discrepancy = std::max(t.lower_discrepancy, vmax(t20 - l2 * t10) / t.scale);
    t.upper_discrepancy = std::max(t.upper_discrepancy, vmax(t21 - t1l) / t.scale);
  }
  return t;
}

/// Sharpness of ‖u‖₂ ≤ λ^{−1/2}‖Xu‖₂ over seeded random trial functions.
struct ConstantCheckReport {
  int trials = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double bound = 0.0;          ///< λ^{−1/2}
  double tolerance = 0.0;
  double max_ratio = 0.0;      ///< max_trials ‖u‖₂/‖Xu‖₂
  double gap = 0.0;            ///< bound − max_ratio
  double ground_ratio = 0.0;   ///< ratio at u = φ
  double ground_gap = 0.0;     ///< |ground_ratio − bound|
  int violations = 0;          ///< trials with ratio > bound + tolerance
  std::vector<double> ratios;
  bool passed() const { return violations == 0 && ground_gap <= tolerance; }
};

template <Calculus B>
double norm_ratio(const EnergyForm<B>& energy, const B& b, const GridFunction& u) {
  const double num = b.integrate(GridFunction(u.domain, u.values.square()));
  const double den = energy(u);
  if (!(den > 0.0)) throw InvalidInput("trial function has zero gradient");
  return std::sqrt(num / den);
}

template <Calculus B>
double norm_ratio(const B& b, const GridFunction& u) {
  return norm_ratio(EnergyForm<B>(b), b, u);
}

template <Calculus B>
ConstantCheckReport steklov_constant_check(const B& b, const EigenPair& eig, int trials, std::uint64_t seed,
                                           double tol = 1e-3) {
  if (trials < 1) throw InvalidInput("trials must be at least 1");
  require_domain(eig.eigenfunction, b.domain());
  ConstantCheckReport c;
  c.trials = trials;
  c.seed = seed;
  c.lambda = eig.eigenvalue;
  c.bound = 1.0 / std::sqrt(eig.eigenvalue);
  c.tolerance = tol;
  const bool sine = b.fields().is_euclidean() && b.domain().is_box();
  const EnergyForm<B> energy(b);
  TrialRng rng(seed);
  for (int i = 0; i < trials; ++i) {
    const double ratio = norm_ratio(energy, b, random_trial(b.domain_ptr(), sine, rng, 1));
    c.ratios.push_back(ratio);
    c.max_ratio = std::max(c.max_ratio, ratio);
    if (ratio > c.bound + tol) ++c.violations;
  }
  c.gap = c.bound - c.max_ratio;
  c.ground_ratio = norm_ratio(energy, b, eig.eigenfunction);
  c.ground_gap = std::abs(c.ground_ratio - c.bound);
  return c;
}

}  // namespace remform
