#pragma once

/// \file identity_report.hpp
/// Term-by-term reports shared by the Steklov and Friedrichs evaluators, and the
/// quotient Xφ/φ with its positivity floor.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "remform/calculus.hpp"
#include "remform/errors.hpp"
#include "remform/grid_domain.hpp"

namespace remform {

/// φ values below this fraction of max φ are treated as boundary (quotient undefined).
inline constexpr double kPositivityFloor = 1e-14;

struct GridSpec {
  int dim = 1;
  std::vector<double> lower, upper, spacing;
  std::vector<int> points;
  std::string mask;
};

inline GridSpec describe_grid(const GridDomain& d) {
  GridSpec g;
  g.dim = d.dim();
  for (int a = 0; a < d.dim(); ++a) {
    g.lower.push_back(d.lower(a));
    g.upper.push_back(d.upper(a));
    g.spacing.push_back(d.spacing(a));
    g.points.push_back(d.points(a));
  }
  g.mask = d.mask_name();
  return g;
}

/// One summand of an identity's right-hand side, weight already applied to `values`.
struct IdentityTerm {
  std::string name;  ///< e.g. "square_X[j=1]"
  std::string kind;  ///< square_L | square_X | square_power | divergence
  int j = 0;
  double weight = 1.0;
  GridFunction values;

  bool is_square() const { return kind.rfind("square", 0) == 0; }
};

inline std::string term_name(const std::string& kind, int j) { return kind + "[j=" + std::to_string(j) + "]"; }

struct IdentityReport {
  std::string identity;  ///< steklov_base | steklov_even | steklov_odd | friedrichs
  std::string parity;    ///< even | odd | none
  int m = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double sigma = 0.0;
  std::string backend;
  std::string family;
  GridSpec grid;

  GridFunction lhs;
  std::vector<IdentityTerm> rhs_terms;
  GridFunction residual;
  double residual_norm = 0.0;      ///< weighted 2-norm over valid nodes
  double scale = 0.0;              ///< max(‖lhs‖, ‖lhs parts‖, max_t ‖term_t‖), same norm
  double lhs_parts_norm = 0.0;     ///< largest norm of the two pieces whose difference is lhs
  double relative_residual = 0.0;  ///< residual_norm / scale (0 when everything vanishes)
  std::vector<std::uint8_t> valid;  ///< nodes entering the norms (φ above the floor)
  std::size_t excluded_nodes = 0;
  double eigen_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notices;

  const IdentityTerm& term(const std::string& name) const {
    for (const auto& t : rhs_terms)
      if (t.name == name) return t;
    throw InvalidInput("report has no term " + name);
  }

  GridFunction rhs_sum() const {
    GridFunction s(lhs.domain);
    for (const auto& t : rhs_terms) s.values += t.values.values;
    return s;
  }

  /// Smallest value of any square term over valid nodes (+inf when there are none).
  double min_square() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& t : rhs_terms) {
      if (!t.is_square()) continue;
      for (std::size_t n = 0; n < valid.size(); ++n)
        if (valid[n]) lo = std::min(lo, t.values[n]);
    }
    return lo;
  }
};

struct RemainderTerm {
  std::string name;
  std::string kind;
  int j = 0;
  double value = 0.0;
};

struct RemainderReport {
  std::string identity;
  std::string parity;
  int m = 0;
  double lambda = 0.0;
  double sigma = 0.0;
  std::string backend;
  std::string family;
  GridSpec grid;

  double lhs_integral = 0.0;   ///< ∫|𝓛^m u|², ∫|X𝓛^m u|² or ∫|Xu|^{p_m}
  double scaled_mass = 0.0;    ///< λ^{2m}∫u², λ^{2m+1}∫u² or (λ − σ_m)∫u^{p_m}
  double remainder = 0.0;      ///< lhs_integral − scaled_mass
  std::vector<RemainderTerm> remainder_terms;   ///< integrated square terms
  std::vector<RemainderTerm> divergence_terms;  ///< integrated divergence terms
  double remainder_terms_total = 0.0;
  double divergence_total = 0.0;
  double balance = 0.0;         ///< remainder − (remainder_terms_total + divergence_total)
  double scale = 0.0;           ///< max(|lhs_integral|, |scaled_mass|, max |term|)
  double relative_balance = 0.0;
  double equality_scale = 0.0;  ///< λ^{2m}∫u² (Steklov) or |λ − σ|∫u^{p} (Friedrichs)
  double normalized_remainder = 0.0;  ///< remainder / equality_scale
  double proportionality_defect = 0.0;
  double gap = 0.0;             ///< λ − σ_m (Friedrichs only)
  bool negative_gap = false;
  double identity_residual_norm = 0.0;
  double identity_relative_residual = 0.0;
  double eigen_residual = 0.0;
  std::vector<std::string> notices;

  double min_remainder_term() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& t : remainder_terms) lo = std::min(lo, t.value);
    return lo;
  }
};

/// The vector q = Xφ/φ, zero where φ is below the positivity floor.
struct LogGradient {
  VectorGridFunction q;
  std::vector<std::uint8_t> valid;
  std::size_t excluded = 0;
};

template <Calculus B>
LogGradient log_gradient(const B& b, const GridFunction& phi, double floor_rel = kPositivityFloor) {
  require_domain(phi, b.domain());
  const double top = phi.values.maxCoeff();
  if (!(top > 0.0) || !phi.values.isFinite().all()) throw PositivityFailure("φ has no positive values");
  const double floor = floor_rel * top;
  LogGradient lg;
  lg.q = b.gradient(phi);
  lg.valid.assign(phi.size(), 0);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const bool ok = phi[n] > floor;
    lg.valid[n] = ok ? 1 : 0;
    if (!ok) ++lg.excluded;
    for (auto& c : lg.q.components) {
      auto& v = c.values[static_cast<Eigen::Index>(n)];
      v = ok ? v / phi[n] : 0.0;
    }
  }
  return lg;
}

/// Throws when φ is below the floor at a node where any of `fs` is nonzero.
inline void require_positive_on_support(const LogGradient& lg, std::initializer_list<const GridFunction*> fs) {
  for (const GridFunction* f : fs)
    for (std::size_t n = 0; n < lg.valid.size(); ++n)
      if (!lg.valid[n] && (*f)[n] != 0.0)
        throw PositivityFailure("φ is below the positivity floor where u is nonzero (node " + std::to_string(n) + ")");
}

namespace detail {

inline double masked_weighted_norm(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v,
                                   const std::vector<std::uint8_t>& valid) {
  double s = 0.0;
  for (std::size_t n = 0; n < valid.size(); ++n)
    if (valid[n]) s += w[static_cast<Eigen::Index>(n)] * v[static_cast<Eigen::Index>(n)] * v[static_cast<Eigen::Index>(n)];
  return std::sqrt(s);
}

inline void zero_invalid(Eigen::ArrayXd& v, const std::vector<std::uint8_t>& valid) {
  for (std::size_t n = 0; n < valid.size(); ++n)
    if (!valid[n]) v[static_cast<Eigen::Index>(n)] = 0.0;
}

/// residual = lhs − Σ terms, norms over valid nodes.
/// `parts` are the two pieces of the left side; when they cancel (u ∝ φ) they set the scale.
template <Calculus B>
void finalize(IdentityReport& r, const B& b, std::initializer_list<Eigen::ArrayXd> parts = {}) {
  const Eigen::ArrayXd& w = b.weights();
  for (const auto& p : parts) r.lhs_parts_norm = std::max(r.lhs_parts_norm, masked_weighted_norm(w, p, r.valid));
  r.residual = GridFunction(r.lhs.domain, r.lhs.values - r.rhs_sum().values);
  r.residual_norm = masked_weighted_norm(w, r.residual.values, r.valid);
  r.scale = std::max(masked_weighted_norm(w, r.lhs.values, r.valid), r.lhs_parts_norm);
  for (const auto& t : r.rhs_terms) r.scale = std::max(r.scale, masked_weighted_norm(w, t.values.values, r.valid));
  r.relative_residual = r.scale > 0.0 ? r.residual_norm / r.scale : 0.0;
  r.backend = std::string(b.name());
  r.family = b.fields().name();
  r.grid = describe_grid(b.domain());
}

inline VectorGridFunction zero_invalid(VectorGridFunction F, const std::vector<std::uint8_t>& valid) {
  for (auto& c : F.components) zero_invalid(c.values, valid);
  return F;
}

/// weight·|Xv − qv|², zero at floor nodes (its boundary limit).
inline IdentityTerm square_x_term(const LogGradient& lg, const GridFunction& v, const VectorGridFunction& xv,
                                  double weight, int j) {
  GridFunction s(v.domain);
  for (std::size_t k = 0; k < xv.size(); ++k) s.values += (xv[k].values - lg.q[k].values * v.values).square();
  zero_invalid(s.values, lg.valid);
  s.values *= weight;
  return {term_name("square_X", j), "square_X", j, weight, std::move(s)};
}

/// weight·|next + λv|².
inline IdentityTerm square_l_term(const GridFunction& next, const GridFunction& v, double lambda, double weight,
                                  int j) {
  GridFunction s(v.domain, weight * (next.values + lambda * v.values).square());
  return {term_name("square_L", j), "square_L", j, weight, std::move(s)};
}

/// weight·X·(q v² − v Xv), or weight·X·(q v²) when `tail`.
template <Calculus B>
IdentityTerm divergence_term(const B& b, const LogGradient& lg, const GridFunction& v, const VectorGridFunction* xv,
                             double weight, int j) {
  VectorGridFunction F;
  for (std::size_t k = 0; k < lg.q.size(); ++k) {
    Eigen::ArrayXd f = lg.q[k].values * v.values.square();
    if (xv) f -= v.values * (*xv)[k].values;
    F.components.emplace_back(v.domain, std::move(f));
  }
  GridFunction div = b.divergence(zero_invalid(std::move(F), lg.valid), SupportCheck::skip);
  div.values *= weight;
  return {term_name("divergence", j), "divergence", j, weight, std::move(div)};
}

/// Integrates lhs pieces and terms of a report into a RemainderReport skeleton.
template <Calculus B>
void integrate_terms(RemainderReport& rr, const IdentityReport& r, const B& b) {
  rr.identity = r.identity;
  rr.parity = r.parity;
  rr.m = r.m;
  rr.lambda = r.lambda;
  rr.sigma = r.sigma;
  rr.backend = r.backend;
  rr.family = r.family;
  rr.grid = r.grid;
  rr.notices = r.notices;
  rr.identity_residual_norm = r.residual_norm;
  rr.identity_relative_residual = r.relative_residual;
  for (const auto& t : r.rhs_terms) {
    RemainderTerm it{t.name, t.kind, t.j, b.integrate(t.values)};
    if (t.is_square()) {
      rr.remainder_terms.push_back(it);
      rr.remainder_terms_total += it.value;
    } else {
      rr.divergence_terms.push_back(it);
      rr.divergence_total += it.value;
    }
  }
}

inline void close_balance(RemainderReport& rr) {
  rr.remainder = rr.lhs_integral - rr.scaled_mass;
  rr.balance = rr.remainder - (rr.remainder_terms_total + rr.divergence_total);
  rr.scale = std::max(std::abs(rr.lhs_integral), std::abs(rr.scaled_mass));
  for (const auto& t : rr.remainder_terms) rr.scale = std::max(rr.scale, std::abs(t.value));
  rr.relative_balance = rr.scale > 0.0 ? std::abs(rr.balance) / rr.scale : 0.0;
  rr.normalized_remainder = rr.equality_scale > 0.0 ? rr.remainder / rr.equality_scale : 0.0;
}

}  // namespace detail

/// ‖u/φ − mean(u/φ)‖ / |mean(u/φ)| over interior nodes with φ above the floor (weighted).
/// Zero exactly when u is proportional to φ there.
template <Calculus B>
double proportionality_defect(const B& b, const GridFunction& u, const GridFunction& phi,
                              double floor_rel = kPositivityFloor) {
  require_same_domain(u, phi);
  const Eigen::ArrayXd& w = b.weights();
  const double floor = floor_rel * phi.values.maxCoeff();
  double sw = 0.0, s1 = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n)
    if (b.domain().interior(n) && phi[n] > floor) {
      sw += w[static_cast<Eigen::Index>(n)];
      s1 += w[static_cast<Eigen::Index>(n)] * u[n] / phi[n];
    }
  if (!(sw > 0.0)) throw PositivityFailure("φ is below the floor on every interior node");
  const double mean = s1 / sw;
  double s2 = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n)
    if (b.domain().interior(n) && phi[n] > floor) {
      const double r = u[n] / phi[n] - mean;
      s2 += w[static_cast<Eigen::Index>(n)] * r * r;
    }
  const double spread = std::sqrt(s2 / sw);
  if (mean == 0.0) return spread == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return spread / std::abs(mean);
}

}  // namespace remform
