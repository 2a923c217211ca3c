#pragma once

/// \file friedrichs.hpp
/// The L^{p_m} Friedrichs representation formula (p_m = 2^m) and σ_m arithmetic.
///
/// For φ > 0 and q = Xφ/φ:
///   |Xu|^{p_m} + (𝓛φ/φ + σ_m)u^{p_m}
///     = Σ_{j=1}^{m−1} ||X(u^{p_{m−j−1}})|^{p_j} − 2^{p_j−1}u^{p_{m−1}}|²
///       + |X(u^{p_{m−1}}) − q u^{p_{m−1}}|² + X·(q u^{p_m}),
/// with σ_m = ¼ Σ_{j=1}^{m−1} 4^{p_j}. No eigen-equation is needed; with −𝓛φ = λφ the
/// integrated form gives ∫|Xu|^{p_m} − (λ − σ_m)∫u^{p_m} as a sum of squares.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "remform/calculus.hpp"
#include "remform/eigensolver.hpp"
#include "remform/errors.hpp"
#include "remform/identity_report.hpp"

namespace remform {

inline constexpr int kMaxSigmaOrder = 62;     // p_m = 2^m must fit in uint64
inline constexpr int kMaxExactSigmaOrder = 6;  // σ_6 = 4^31 + σ_5 < 2^64; σ_7 does not fit
inline constexpr int kMaxFriedrichsOrder = 10; // σ_10 < DBL_MAX; σ_11 overflows a double

struct FriedrichsParams {
  int m = 1;
  std::uint64_t p = 2;  ///< p_m = 2^m
  double log_sigma = -std::numeric_limits<double>::infinity();  ///< ln σ_m, −∞ for σ₁ = 0
  std::optional<std::uint64_t> exact;  ///< σ_m as an integer when it fits
  double value() const { return std::exp(log_sigma); }
};

inline std::uint64_t power_p(int m) { return std::uint64_t{1} << m; }

/// σ_{m+1} = σ_m + 4^{p_m − 1}, starting from σ₁ = 0.
inline std::uint64_t exact_sigma(int m) {
  if (m < 1) throw InvalidInput("σ_m needs m ≥ 1");
  if (m > kMaxExactSigmaOrder) throw InvalidInput("σ_m does not fit in 64 bits for m > 6");
  std::uint64_t s = 0;
  for (int j = 1; j < m; ++j) s += std::uint64_t{1} << (2 * (power_p(j) - 1));
  return s;
}

/// ln σ_m by log-sum-exp over the terms (p_j − 1)·ln 4, j = 1..m−1.
inline double log_sigma(int m) {
  if (m < 1) throw InvalidInput("σ_m needs m ≥ 1");
  if (m > kMaxSigmaOrder) throw InvalidInput("m too large for p_m = 2^m");
  if (m == 1) return -std::numeric_limits<double>::infinity();
  const double ln4 = 2.0 * std::numbers::ln2;
  const double top = static_cast<double>(power_p(m - 1) - 1) * ln4;
  double s = 0.0;
  for (int j = 1; j < m; ++j) s += std::exp(static_cast<double>(power_p(j) - 1) * ln4 - top);
  return top + std::log(s);
}

inline FriedrichsParams sigma(int m) {
  FriedrichsParams f;
  f.log_sigma = log_sigma(m);
  f.m = m;
  f.p = power_p(m);
  if (m <= kMaxExactSigmaOrder) f.exact = exact_sigma(m);
  return f;
}

/// σ_m as a double (finite for m ≤ 10).
inline double sigma_value(int m) {
  const FriedrichsParams f = sigma(m);
  return f.exact ? static_cast<double>(*f.exact) : f.value();
}

/// One row of the σ_m^{1/p_m} table with the sandwich
/// 4^{(p_{m−1}−1)/p_m} ≤ σ_m^{1/p_m} ≤ ((m−1)/4)^{1/p_m}·4^{p_{m−1}/p_m}.
struct SigmaRow {
  int m = 2;
  std::uint64_t p = 4;
  double log_sigma = 0.0;
  std::optional<std::uint64_t> exact;
  double root = 0.0;   ///< σ_m^{1/p_m}
  double lower = 0.0;
  double upper = 0.0;
  double log_lower = 0.0;  ///< bounds on ln σ_m
  double log_upper = 0.0;
  bool within_bounds = false;
  double distance_to_two = 0.0;
};

inline SigmaRow sigma_row(int m) {
  if (m < 2) throw InvalidInput("the σ_m bounds need m ≥ 2");
  const FriedrichsParams f = sigma(m);
  const double ln4 = 2.0 * std::numbers::ln2;
  const double pm = static_cast<double>(f.p);
  const double pm1 = static_cast<double>(power_p(m - 1));
  SigmaRow r;
  r.m = m;
  r.p = f.p;
  r.log_sigma = f.log_sigma;
  r.exact = f.exact;
  r.log_lower = (pm1 - 1.0) * ln4;
  r.log_upper = std::log((m - 1) / 4.0) + pm1 * ln4;
  r.root = std::exp(f.log_sigma / pm);
  r.lower = std::exp(r.log_lower / pm);
  r.upper = std::exp(r.log_upper / pm);
  // At m = 2 both bounds equal σ₂ exactly, so allow a few ulps of the log values.
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f.log_sigma));
  r.within_bounds = r.log_lower <= f.log_sigma + slack && f.log_sigma <= r.log_upper + slack;
  r.distance_to_two = std::abs(r.root - 2.0);
  return r;
}

inline std::vector<SigmaRow> sigma_asymptotics(int m_max) {
  if (m_max < 2) throw InvalidInput("sigma table needs max m ≥ 2");
  if (m_max > kMaxSigmaOrder) throw InvalidInput("sigma table supports m ≤ 62");
  std::vector<SigmaRow> rows;
  for (int m = 2; m <= m_max; ++m) rows.push_back(sigma_row(m));
  return rows;
}

namespace detail {

inline Eigen::ArrayXd int_power(const Eigen::ArrayXd& v, std::uint64_t p) {
  Eigen::ArrayXd out = Eigen::ArrayXd::Ones(v.size());
  Eigen::ArrayXd base = v;
  while (p) {
    if (p & 1u) out *= base;
    p >>= 1u;
    if (p) base = base.square();
  }
  return out;
}

/// (Σ_k (X_k v)²)^{p/2} for even p.
template <Calculus B>
Eigen::ArrayXd gradient_power(const B& b, const GridFunction& v, std::uint64_t p) {
  return int_power(b.gradient(v).squared_norm().values, p / 2);
}

}  // namespace detail

/// Pointwise Friedrichs identity for an arbitrary positive φ.
template <Calculus B>
IdentityReport friedrichs_identity(const B& b, const GridFunction& u_in, const GridFunction& phi, int m) {
  require_domain(u_in, b.domain());
  require_domain(phi, b.domain());
  if (m < 1) throw InvalidInput("m must be at least 1");
  if (m > kMaxFriedrichsOrder) throw InvalidInput("m must be at most " + std::to_string(kMaxFriedrichsOrder));
  if (b.requires_collar()) {
    const int have = collar_width(u_in);
    if (have < 1) throw CollarTooThin(have, 1);
  }
  IdentityReport r;
  r.identity = "friedrichs";
  r.parity = "none";
  r.m = m;
  r.sigma = sigma_value(m);

  GridFunction u = u_in;
  if ((u.values < 0.0).any()) {
    u.values = u.values.abs();
    r.notices.push_back("u has negative values; |u| was used for the powers u^p");
  }
  const LogGradient lg = log_gradient(b, phi);
  require_positive_on_support(lg, {&u});

  // Powers u^{p_k}, k = 0..m, by repeated squaring.
  std::vector<GridFunction> pw{u};
  for (int k = 1; k <= m; ++k) pw.emplace_back(u.domain, pw.back().values.square());
  std::size_t underflow = 0;
  for (std::size_t n = 0; n < u.size(); ++n)
    if (u[n] != 0.0 && !std::isnormal(pw.back()[n])) ++underflow;
  if (underflow)
    r.notices.push_back("u^p_m underflows at " + std::to_string(underflow) + " nodes where u is nonzero");

  const GridFunction lphi = b.sublaplacian(phi, SupportCheck::skip);
  Eigen::ArrayXd lphi_over_phi = Eigen::ArrayXd::Zero(phi.values.size());
  for (std::size_t n = 0; n < phi.size(); ++n)
    if (lg.valid[n]) lphi_over_phi[static_cast<Eigen::Index>(n)] = lphi[n] / phi[n];
  const std::uint64_t pm = power_p(m);
  const Eigen::ArrayXd grad = detail::gradient_power(b, u, pm), zeroth = (lphi_over_phi + r.sigma) * pw[m].values;
  r.lhs = GridFunction(u.domain, grad + zeroth);

  const GridFunction& top = pw[m - 1];  // u^{p_{m−1}}
  for (int j = 1; j <= m - 1; ++j) {
    const std::uint64_t pj = power_p(j);
    const double c = std::ldexp(1.0, static_cast<int>(pj - 1));  // 2^{p_j − 1}
    Eigen::ArrayXd s = (detail::gradient_power(b, pw[m - j - 1], pj) - c * top.values).square();
    r.rhs_terms.push_back({term_name("square_power", j), "square_power", j, 1.0, GridFunction(u.domain, std::move(s))});
  }
  r.rhs_terms.push_back(detail::square_x_term(lg, top, b.gradient(top), 1.0, m));
  // Flux q·u^{p_m} = q·(u^{p_{m−1}})².
  r.rhs_terms.push_back(detail::divergence_term(b, lg, top, nullptr, 1.0, m));

  r.valid = lg.valid;
  r.excluded_nodes = lg.excluded;
  detail::finalize(r, b, {grad, zeroth});
  return r;
}

/// ∫|Xu|^{p_m} − (λ − σ_m)∫u^{p_m} against the integrated squares of a report built with φ the ground state.
template <Calculus B>
RemainderReport friedrichs_remainder(const B& b, const GridFunction& u, const EigenPair& eig, IdentityReport r) {
  require_domain(eig.eigenfunction, b.domain());
  r.lambda = eig.eigenvalue;
  r.eigen_residual = eig.residual_norm;
  const int m = r.m;
  RemainderReport rr;
  detail::integrate_terms(rr, r, b);
  const GridFunction ua(u.domain, u.values.abs());
  const std::uint64_t pm = power_p(m);
  const double mass = b.integrate(GridFunction(u.domain, detail::int_power(ua.values, pm)));
  rr.gap = eig.eigenvalue - r.sigma;
  rr.negative_gap = rr.gap < 0.0;
  rr.lhs_integral = b.integrate(GridFunction(u.domain, detail::gradient_power(b, ua, pm)));
  rr.scaled_mass = rr.gap * mass;
  rr.equality_scale = std::abs(rr.gap) * mass;
  rr.eigen_residual = eig.residual_norm;
  rr.proportionality_defect = proportionality_defect(b, ua, eig.eigenfunction);
  if (rr.negative_gap)
    rr.notices.push_back("λ − σ_m < 0: the identity holds but yields no L^p Friedrichs inequality");
  detail::close_balance(rr);
  return rr;
}

template <Calculus B>
RemainderReport friedrichs_remainder(const B& b, const GridFunction& u, const EigenPair& eig, int m) {
  return friedrichs_remainder(b, u, eig, friedrichs_identity(b, u, eig.eigenfunction, m));
}

/// Positive, non-eigen φ with nontrivial gradient. With s_a ∈ [−1, 1] the normalized box
/// coordinates: 0.5 + sin(π(s_0 + 1)/2) in 1D, 2 + s_0·exp(−s_1²) in 2D, 2 + s_0·s_1·exp(−s_2²) in 3D.
inline GridFunction manufactured_phi(const DomainPtr& d) {
  const double pi = std::numbers::pi;
  const int dim = d->dim();
  return GridFunction::sample(d, [&](const Point& p) {
    Point s{0, 0, 0};
    for (int a = 0; a < dim; ++a) s[a] = 2.0 * (p[a] - d->lower(a)) / (d->upper(a) - d->lower(a)) - 1.0;
    if (dim == 1) return 0.5 + std::sin(0.5 * pi * (s[0] + 1.0));
    if (dim == 2) return 2.0 + s[0] * std::exp(-s[1] * s[1]);
    return 2.0 + s[0] * s[1] * std::exp(-s[2] * s[2]);
  });
}

}  // namespace remform
