#pragma once

/// \file eigensolver.hpp
/// Positive Dirichlet ground state (λ₁, u₁) of −𝓛 by inverse power iteration.

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "remform/calculus.hpp"
#include "remform/errors.hpp"
#include "remform/grid_domain.hpp"
#include "remform/vector_fields.hpp"

namespace remform {

enum class Stencil {
  fused,     ///< compact ½Σ_k Σ_± (X_k^±)ᵀX_k^± (one-sided differences); used by the eigensolver
  composed,  ///< −Σ_k C_k C_k with centered C_k, i.e. exactly what FiniteDifferenceCalculus applies
};

/// Discrete −𝓛 acting on interior nodes (Dirichlet rows eliminated).
struct SparseOperator {
  Eigen::SparseMatrix<double> matrix;
  std::vector<std::size_t> nodes;      ///< grid node of each row
  std::vector<std::ptrdiff_t> row_of;  ///< row of each grid node, −1 off the interior
  double asymmetry = 0.0;              ///< ‖A − Aᵀ‖_F / ‖A‖_F before any symmetrization
  Stencil stencil = Stencil::fused;

  Eigen::VectorXd restrict(const GridFunction& f) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t r = 0; r < nodes.size(); ++r) v[static_cast<Eigen::Index>(r)] = f[nodes[r]];
    return v;
  }

  GridFunction extend(const DomainPtr& d, const Eigen::VectorXd& v) const {
    GridFunction f(d);
    for (std::size_t r = 0; r < nodes.size(); ++r)
      f.values[static_cast<Eigen::Index>(nodes[r])] = v[static_cast<Eigen::Index>(r)];
    return f;
  }
};

namespace detail {

using Triplets = std::vector<Eigen::Triplet<double>>;

inline double relative_asymmetry(const Eigen::SparseMatrix<double>& a) {
  const Eigen::SparseMatrix<double> at = a.transpose();
  const double norm = a.norm();
  return norm == 0.0 ? 0.0 : Eigen::SparseMatrix<double>(a - at).norm() / norm;
}

// Centered X_k restricted to interior rows and columns.
inline Eigen::SparseMatrix<double> centered_field_matrix(const GridDomain& d, const VectorFieldFamily& f, int k,
                                                         const std::vector<std::ptrdiff_t>& row_of,
                                                         Eigen::Index n_int) {
  Triplets t;
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (row_of[n] < 0) continue;
    const Point p = d.coordinates(n);
    for (int i = 0; i < d.dim(); ++i) {
      if (f.is_zero(k, i)) continue;
      const double a = f.coefficient(k, i, p) / (2.0 * d.spacing(i));
      const std::size_t st = d.stride(i);
      if (row_of[n + st] >= 0) t.emplace_back(row_of[n], row_of[n + st], a);
      if (row_of[n - st] >= 0) t.emplace_back(row_of[n], row_of[n - st], -a);
    }
  }
  Eigen::SparseMatrix<double> m(n_int, n_int);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// One-sided X_k^s (s = ±1) at every box node, acting on interior columns.
inline Eigen::SparseMatrix<double> one_sided_field_matrix(const GridDomain& d, const VectorFieldFamily& f, int k,
                                                          int s, const std::vector<std::ptrdiff_t>& row_of,
                                                          Eigen::Index n_int) {
  Triplets t;
  for (std::size_t n = 0; n < d.size(); ++n) {
    const Point p = d.coordinates(n);
    const auto idx = d.multi_index(n);
    for (int i = 0; i < d.dim(); ++i) {
      if (f.is_zero(k, i)) continue;
      const int target = idx[i] + s;
      if (target < 0 || target >= d.points(i)) continue;
      const double a = f.coefficient(k, i, p) / (s * d.spacing(i));
      const std::size_t m = s > 0 ? n + d.stride(i) : n - d.stride(i);
      const auto row = static_cast<Eigen::Index>(n);
      if (row_of[m] >= 0) t.emplace_back(row, row_of[m], a);
      if (row_of[n] >= 0) t.emplace_back(row, row_of[n], -a);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(d.size()), n_int);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace detail

inline SparseOperator assemble_operator(const DomainPtr& domain, const VectorFieldFamily& fields,
                                        Stencil stencil = Stencil::fused) {
  if (!domain) throw InvalidInput("null domain");
  if (fields.dim() != domain->dim())
    throw InvalidInput("vector field dimension does not match the domain dimension");
  const GridDomain& d = *domain;
  SparseOperator op;
  op.stencil = stencil;
  op.row_of.assign(d.size(), -1);
  for (std::size_t n = 0; n < d.size(); ++n)
    if (d.interior(n)) {
      op.row_of[n] = static_cast<std::ptrdiff_t>(op.nodes.size());
      op.nodes.push_back(n);
    }
  const auto n_int = static_cast<Eigen::Index>(op.nodes.size());
  Eigen::SparseMatrix<double> a(n_int, n_int);

  if (stencil == Stencil::composed) {
    for (int k = 0; k < fields.n_fields(); ++k) {
      const auto c = detail::centered_field_matrix(d, fields, k, op.row_of, n_int);
      a -= Eigen::SparseMatrix<double>(c * c);
    }
    a.prune(0.0);
    op.asymmetry = detail::relative_asymmetry(a);
    op.matrix = std::move(a);
    return op;
  }

  for (int k = 0; k < fields.n_fields(); ++k)
    for (int s : {+1, -1}) {
      const auto x = detail::one_sided_field_matrix(d, fields, k, s, op.row_of, n_int);
      a += 0.5 * Eigen::SparseMatrix<double>(x.transpose() * x);
    }
  if (!fields.divergence_free()) {
    // −X_k² = X_k*X_k + (div a_k) X_k; the second term is not symmetric.
    std::array<double, kMaxDim> h{1, 1, 1};
    for (int i = 0; i < d.dim(); ++i) h[i] = d.spacing(i);
    for (int k = 0; k < fields.n_fields(); ++k) {
      Eigen::VectorXd div(n_int);
      for (Eigen::Index r = 0; r < n_int; ++r)
        div[r] = fields.coefficient_divergence(k, d.coordinates(op.nodes[static_cast<std::size_t>(r)]), h);
      const auto c = detail::centered_field_matrix(d, fields, k, op.row_of, n_int);
      a += Eigen::SparseMatrix<double>(div.asDiagonal() * c);
    }
  }
  a.prune(0.0);
  op.asymmetry = detail::relative_asymmetry(a);
  if (op.asymmetry > 0.0) {
    const Eigen::SparseMatrix<double> at = a.transpose();
    a = 0.5 * (a + at);
  }
  op.matrix = std::move(a);
  return op;
}

struct EigenPair {
  double eigenvalue = 0.0;
  GridFunction eigenfunction;   ///< normalized ∫φ² = 1, max φ > 0
  double residual_norm = 0.0;   ///< ‖Aφ − λφ‖ in the weighted 2-norm, A the solver's operator
  double relative_residual = 0.0;  ///< residual_norm / λ; the quantity compared with tol
  double positivity_margin = 0.0;  ///< min of φ over interior nodes
  double operator_consistency = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string backend;
  std::string family;

  const GridDomain& domain() const { return *eigenfunction.domain; }
};

namespace detail {

inline double weighted_norm(const Eigen::ArrayXd& w, const Eigen::ArrayXd& v) { return std::sqrt((w * v.square()).sum()); }

inline void fix_sign_and_check(EigenPair& e) {
  const GridDomain& d = *e.eigenfunction.domain;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t n = 0; n < d.size(); ++n)
    if (d.interior(n)) {
      lo = std::min(lo, e.eigenfunction[n]);
      hi = std::max(hi, e.eigenfunction[n]);
    }
  if (std::abs(lo) > std::abs(hi)) {
    e.eigenfunction.values = -e.eigenfunction.values;
    std::swap(lo, hi);
    lo = -lo;
    hi = -hi;
  }
  e.positivity_margin = lo;
  if (!(lo > 0.0))
    throw PositivityFailure("ground state changes sign on the interior (min " + format_double(lo) +
                            "); disconnected or pathological mask?");
}

// ‖−𝓛_composed φ − λφ‖_w / λ on nodes at depth ≥ 3 (where the composed stencil sees no boundary).
inline double composed_consistency(const FiniteDifferenceCalculus& fd, const EigenPair& e) {
  const GridFunction lphi = fd.sublaplacian(e.eigenfunction, SupportCheck::skip);
  const GridDomain& d = fd.domain();
  Eigen::ArrayXd r = lphi.values + e.eigenvalue * e.eigenfunction.values;
  for (std::size_t n = 0; n < d.size(); ++n)
    if (d.depth(n) < 3) r[static_cast<Eigen::Index>(n)] = 0.0;
  return weighted_norm(d.quadrature_weights(), r) / e.eigenvalue;
}

}  // namespace detail

struct EigenOptions {
  double tol = 1e-10;   ///< on relative_residual
  int max_iter = 500;
  std::size_t direct_limit = 40000;  ///< interior size up to which a sparse LDLᵀ is used (dim ≤ 2)
};

/// Finite-difference ground state: fused operator, inverse power iteration from a positive
/// constant start, Rayleigh-quotient eigenvalue estimate.
inline EigenPair ground_state(const DomainPtr& domain, const VectorFieldFamily& fields, double tol = 1e-10,
                              int max_iter = 500) {
  if (!(tol > 0.0)) throw InvalidInput("eigen tolerance must be positive");
  if (max_iter < 1) throw InvalidInput("max_iter must be positive");
  EigenOptions opt;
  const SparseOperator op = assemble_operator(domain, fields, Stencil::fused);
  const Eigen::SparseMatrix<double>& A = op.matrix;
  const double w = domain->quadrature_weights()[static_cast<Eigen::Index>(op.nodes.front())];

  const bool direct = domain->dim() <= 2 && op.nodes.size() <= opt.direct_limit;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::IncompleteCholesky<double>>
      cg;
  if (direct) {
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success) throw NotConverged("sparse factorization of −𝓛 failed");
  } else {
    cg.setTolerance(1e-14);
    cg.setMaxIterations(20000);
    cg.compute(A);
    if (cg.info() != Eigen::Success) throw NotConverged("preconditioner setup for −𝓛 failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows());
  EigenPair e;
  e.backend = "fd";
  e.family = fields.name();
  double lambda = 0.0, rel = std::numeric_limits<double>::infinity(), abs_res = rel;
  int it = 0;
  for (; it < max_iter && !(rel <= tol);) {
    ++it;
    Eigen::VectorXd y = direct ? Eigen::VectorXd(ldlt.solve(x)) : Eigen::VectorXd(cg.solveWithGuess(x, x / std::max(lambda, 1.0)));
    y /= std::sqrt(w) * y.norm();
    const Eigen::VectorXd ay = A * y;
    lambda = y.dot(ay) / y.squaredNorm();
    abs_res = std::sqrt(w) * (ay - lambda * y).norm();
    rel = abs_res / lambda;
    x = y;
  }
  if (!(rel <= tol))
    throw NotConverged("inverse iteration did not reach relative residual " + format_double(tol) + " within " +
                       std::to_string(max_iter) + " iterations (last " + format_double(rel) + ")");
  e.eigenvalue = lambda;
  e.eigenfunction = op.extend(domain, x);
  e.residual_norm = abs_res;
  e.relative_residual = rel;
  e.iterations = it;
  detail::fix_sign_and_check(e);
  e.operator_consistency = detail::composed_consistency(FiniteDifferenceCalculus(domain, fields), e);
  return e;
}

inline EigenPair ground_state(const FiniteDifferenceCalculus& fd, double tol = 1e-10, int max_iter = 500) {
  return ground_state(fd.domain_ptr(), fd.fields(), tol, max_iter);
}

/// Spectral ground state on a box: inverse iteration with the mode-exact solver.
inline EigenPair ground_state(const SineSpectralCalculus& sp, double tol = 1e-10, int max_iter = 500) {
  if (!(tol > 0.0)) throw InvalidInput("eigen tolerance must be positive");
  if (max_iter < 1) throw InvalidInput("max_iter must be positive");
  const DomainPtr& d = sp.domain_ptr();
  // Inverse iteration carried out on sine coefficients, where −𝓛 is diagonal; the residual is
  // measured there too (Parseval), avoiding the κ_max² roundoff of resampling.
  const Eigen::ArrayXd& k2 = sp.mode_eigenvalues();
  const double pf = sp.parseval_factor();
  Eigen::ArrayXd c = sp.to_modes(GridFunction::sample_interior(d, [](const Point&) { return 1.0; }));
  EigenPair e;
  e.backend = "spectral";
  e.family = "euclidean";
  double lambda = 0.0, rel = std::numeric_limits<double>::infinity(), abs_res = rel;
  int it = 0;
  for (; it < max_iter && !(rel <= tol);) {
    ++it;
    c = (k2 > 0.0).select(c / k2, 0.0);
    c /= std::sqrt(pf * c.square().sum());
    lambda = pf * (k2 * c.square()).sum();
    abs_res = std::sqrt(pf * ((k2 - lambda).square() * c.square()).sum());
    rel = abs_res / lambda;
  }
  GridFunction x = sp.from_modes(c);
  if (!(rel <= tol))
    throw NotConverged("spectral inverse iteration did not reach relative residual " + format_double(tol));
  e.eigenvalue = lambda;
  e.eigenfunction = std::move(x);
  e.residual_norm = abs_res;
  e.relative_residual = rel;
  e.iterations = it;
  detail::fix_sign_and_check(e);
  return e;
}

/// Wraps a user-supplied (λ, φ); residuals are measured with the backend's operator.
inline EigenPair make_eigenpair(const FiniteDifferenceCalculus& fd, double lambda, GridFunction phi) {
  require_domain(phi, fd.domain());
  if (!(lambda > 0.0)) throw InvalidInput("eigenvalue must be positive");
  const SparseOperator op = assemble_operator(fd.domain_ptr(), fd.fields(), Stencil::fused);
  EigenPair e;
  e.backend = "fd";
  e.family = fd.fields().name();
  e.eigenvalue = lambda;
  e.eigenfunction = std::move(phi);
  const double norm = detail::weighted_norm(fd.weights(), e.eigenfunction.values);
  if (!(norm > 0.0)) throw InvalidInput("supplied eigenfunction is zero");
  e.eigenfunction.values /= norm;
  detail::fix_sign_and_check(e);
  const Eigen::VectorXd v = op.restrict(e.eigenfunction);
  const double w = fd.weights()[static_cast<Eigen::Index>(op.nodes.front())];
  e.residual_norm = std::sqrt(w) * (op.matrix * v - lambda * v).norm();
  e.relative_residual = e.residual_norm / lambda;
  e.operator_consistency = detail::composed_consistency(fd, e);
  return e;
}

inline EigenPair make_eigenpair(const SineSpectralCalculus& sp, double lambda, GridFunction phi) {
  require_domain(phi, sp.domain());
  if (!(lambda > 0.0)) throw InvalidInput("eigenvalue must be positive");
  EigenPair e;
  e.backend = "spectral";
  e.family = "euclidean";
  e.eigenvalue = lambda;
  e.eigenfunction = std::move(phi);
  const double norm = detail::weighted_norm(sp.weights(), e.eigenfunction.values);
  if (!(norm > 0.0)) throw InvalidInput("supplied eigenfunction is zero");
  e.eigenfunction.values /= norm;
  detail::fix_sign_and_check(e);
  const GridFunction l = sp.sublaplacian(e.eigenfunction);
  e.residual_norm = detail::weighted_norm(sp.weights(), l.values + lambda * e.eigenfunction.values);
  e.relative_residual = e.residual_norm / lambda;
  return e;
}

/// ∫|Xu|² / ∫u² with the backend's X and quadrature.
/// Quadratic form ∫|Xu|². On the finite-difference backend it is uᵀAu with the solver's
/// operator, so boundary cells count and the discrete ground state attains its eigenvalue.
template <Calculus B>
class EnergyForm {
 public:
  explicit EnergyForm(const B& backend) : b_(backend) {
    if constexpr (std::is_same_v<B, FiniteDifferenceCalculus>) op_ = assemble_operator(backend.domain_ptr(), backend.fields());
  }

  double operator()(const GridFunction& u) const {
    require_domain(u, b_.domain());
    if (!op_) return b_.integrate(b_.gradient(u).squared_norm());
    const Eigen::VectorXd v = op_->restrict(u);
    const Eigen::VectorXd av = op_->matrix * v;
    const Eigen::ArrayXd& w = b_.weights();
    double e = 0.0;
    for (std::size_t r = 0; r < op_->nodes.size(); ++r)
      e += w[static_cast<Eigen::Index>(op_->nodes[r])] * v[static_cast<Eigen::Index>(r)] * av[static_cast<Eigen::Index>(r)];
    return e;
  }

 private:
  const B& b_;
  std::optional<SparseOperator> op_;
};

template <Calculus B>
double rayleigh_quotient(const B& backend, const GridFunction& u) {
  const double denom = backend.integrate(GridFunction(u.domain, u.values.square()));
  if (!(denom > 0.0)) throw InvalidInput("Rayleigh quotient of a zero function");
  return EnergyForm<B>(backend)(u) / denom;
}

inline double rayleigh_quotient(const DomainPtr& domain, const VectorFieldFamily& fields, const GridFunction& u) {
  return rayleigh_quotient(FiniteDifferenceCalculus(domain, fields), u);
}

}  // namespace remform
