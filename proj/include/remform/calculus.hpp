#pragma once

/// \file calculus.hpp
/// Discrete application of X_k, X = (X_1..X_N), 𝓛 = Σ X_k², 𝓛^j and X·F = Σ X_k F_k.
///
/// Two backends share one interface (the `Calculus` concept):
///  - FiniteDifferenceCalculus: centered second-order differences for arbitrary
///    coefficient families; non-interior nodes yield zero, 𝓛 is X_k composed twice.
///  - SineSpectralCalculus: Euclidean family on an unmasked box; functions are
///    sine series determined by their interior samples, 𝓛 is exact per mode and
///    X_k is evaluated on the closed box (boundary nodes included).

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

#include "remform/errors.hpp"
#include "remform/grid_domain.hpp"
#include "remform/vector_fields.hpp"

namespace remform {

/// Whether an operator checks that its input has a zero collar deep enough for the stencil.
enum class SupportCheck { enforce, skip };

template <class B>
concept Calculus = requires(const B& b, const GridFunction& u, const VectorGridFunction& F, int k) {
  { b.name() } -> std::convertible_to<std::string_view>;
  { b.domain() } -> std::same_as<const GridDomain&>;
  { b.domain_ptr() } -> std::same_as<const DomainPtr&>;
  { b.fields() } -> std::same_as<const VectorFieldFamily&>;
  { b.field(k, u) } -> std::same_as<GridFunction>;
  { b.gradient(u) } -> std::same_as<VectorGridFunction>;
  { b.sublaplacian(u) } -> std::same_as<GridFunction>;
  { b.L_power(u, k) } -> std::same_as<GridFunction>;
  { b.divergence(F) } -> std::same_as<GridFunction>;
  { b.integrate(u) } -> std::same_as<double>;
  { b.weights() } -> std::same_as<const Eigen::ArrayXd&>;
  { b.requires_collar() } -> std::same_as<bool>;
};

class FiniteDifferenceCalculus {
 public:
  FiniteDifferenceCalculus(DomainPtr domain, VectorFieldFamily fields)
      : domain_(std::move(domain)), fields_(std::move(fields)) {
    if (!domain_) throw InvalidInput("null domain");
    if (fields_.dim() != domain_->dim())
      throw InvalidInput("vector field dimension does not match the domain dimension");
    const int dim = domain_->dim();
    coeff_.resize(static_cast<std::size_t>(fields_.n_fields() * dim));
    for (int k = 0; k < fields_.n_fields(); ++k)
      for (int i = 0; i < dim; ++i) {
        if (fields_.is_zero(k, i)) continue;
        Eigen::ArrayXd a(static_cast<Eigen::Index>(domain_->size()));
        for (std::size_t n = 0; n < domain_->size(); ++n)
          a[static_cast<Eigen::Index>(n)] = fields_.coefficient(k, i, domain_->coordinates(n));
        if (!a.isFinite().all()) throw InvalidInput("non-finite vector field coefficient");
        coeff_[static_cast<std::size_t>(k * dim + i)] = std::move(a);
      }
    for (std::size_t n = 0; n < domain_->size(); ++n)
      if (domain_->interior(n)) interior_.push_back(n);
  }

  std::string_view name() const noexcept { return "fd"; }
  const GridDomain& domain() const noexcept { return *domain_; }
  const DomainPtr& domain_ptr() const noexcept { return domain_; }
  const VectorFieldFamily& fields() const noexcept { return fields_; }
  bool requires_collar() const noexcept { return true; }
  const Eigen::ArrayXd& weights() const noexcept { return domain_->quadrature_weights(); }

  /// X_k u at interior nodes, centered differences; zero on non-interior nodes.
  GridFunction field(int k, const GridFunction& u) const {
    require_domain(u, *domain_);
    if (k < 0 || k >= fields_.n_fields()) throw InvalidInput("field index " + std::to_string(k) + " out of range");
    GridFunction out(domain_);
    const int dim = domain_->dim();
    const double* in = u.values.data();
    double* res = out.values.data();
    for (int i = 0; i < dim; ++i) {
      const auto& a = coeff_[static_cast<std::size_t>(k * dim + i)];
      if (a.size() == 0) continue;
      const std::size_t st = domain_->stride(i);
      const double inv2h = 1.0 / (2.0 * domain_->spacing(i));
      const double* ca = a.data();
      const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(interior_.size());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t q = 0; q < count; ++q) {
        const std::size_t n = interior_[static_cast<std::size_t>(q)];
        res[n] += ca[n] * ((in[n + st] - in[n - st]) * inv2h);
      }
    }
    return out;
  }

  VectorGridFunction gradient(const GridFunction& u) const {
    VectorGridFunction g;
    for (int k = 0; k < fields_.n_fields(); ++k) g.components.push_back(field(k, u));
    return g;
  }

  GridFunction sublaplacian(const GridFunction& u, SupportCheck check = SupportCheck::enforce) const {
    require_collar(u, 2, check);
    GridFunction out(domain_);
    for (int k = 0; k < fields_.n_fields(); ++k) out.values += field(k, field(k, u)).values;
    return out;
  }

  GridFunction L_power(const GridFunction& u, int j, SupportCheck check = SupportCheck::enforce) const {
    if (j < 0) throw InvalidInput("L power must be nonnegative");
    require_domain(u, *domain_);
    if (j > 0) require_collar(u, 2 * j, check);
    GridFunction v = u;
    for (int s = 0; s < j; ++s) v = sublaplacian(v, SupportCheck::skip);
    return v;
  }

  /// X·F = Σ_k X_k F_k.
  GridFunction divergence(const VectorGridFunction& F, SupportCheck check = SupportCheck::enforce) const {
    if (F.size() != static_cast<std::size_t>(fields_.n_fields()))
      throw DomainMismatch("vector grid function has the wrong number of components");
    GridFunction out(domain_);
    for (int k = 0; k < fields_.n_fields(); ++k) {
      require_collar(F[static_cast<std::size_t>(k)], 1, check);
      out.values += field(k, F[static_cast<std::size_t>(k)]).values;
    }
    return out;
  }

  double integrate(const GridFunction& f) const {
    require_domain(f, *domain_);
    return remform::integrate(f);
  }

 private:
  static void require_collar(const GridFunction& u, int need, SupportCheck check) {
    if (check == SupportCheck::skip) return;
    const int have = collar_width(u);
    if (have < need) throw CollarTooThin(have, need);
  }

  DomainPtr domain_;
  VectorFieldFamily fields_;
  std::vector<Eigen::ArrayXd> coeff_;
  std::vector<std::size_t> interior_;
};

/// Euclidean sine-series backend on an unmasked box.
class SineSpectralCalculus {
 public:
  explicit SineSpectralCalculus(DomainPtr domain)
      : domain_(std::move(domain)), fields_(VectorFieldFamily::euclidean(domain_ ? domain_->dim() : 1)) {
    if (!domain_) throw InvalidInput("null domain");
    if (!domain_->is_box()) throw InvalidInput("the spectral backend requires an unmasked box domain");
    for (int a = 0; a < domain_->dim(); ++a) {
      axes_.push_back(make_axis(a));
      parseval_ *= 0.5 * (domain_->upper(a) - domain_->lower(a));
    }
    mode_kappa2_ = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(domain_->size()));
    for (std::size_t n = 0; n < domain_->size(); ++n) {
      if (!domain_->interior(n)) continue;
      const auto idx = domain_->multi_index(n);
      double k2 = 0.0;
      for (int a = 0; a < domain_->dim(); ++a) k2 += axes_[static_cast<std::size_t>(a)].kappa2[idx[a] - 1];
      mode_kappa2_[static_cast<Eigen::Index>(n)] = k2;
    }
  }

  SineSpectralCalculus(DomainPtr domain, const VectorFieldFamily& fields) : SineSpectralCalculus(std::move(domain)) {
    if (!fields.is_euclidean()) throw InvalidInput("the spectral backend supports only the euclidean family");
  }

  std::string_view name() const noexcept { return "spectral"; }
  const GridDomain& domain() const noexcept { return *domain_; }
  const DomainPtr& domain_ptr() const noexcept { return domain_; }
  const VectorFieldFamily& fields() const noexcept { return fields_; }
  bool requires_collar() const noexcept { return false; }
  const Eigen::ArrayXd& weights() const noexcept { return domain_->closed_weights(); }

  /// ∂_k of the sine series through the interior samples, on every node of the closed box.
  GridFunction field(int k, const GridFunction& u) const {
    require_domain(u, *domain_);
    if (k < 0 || k >= domain_->dim()) throw InvalidInput("field index " + std::to_string(k) + " out of range");
    GridFunction out(domain_);
    along_axis(k, u.values, out.values, axes_[static_cast<std::size_t>(k)].d1, false);
    return out;
  }

  VectorGridFunction gradient(const GridFunction& u) const {
    VectorGridFunction g;
    for (int k = 0; k < domain_->dim(); ++k) g.components.push_back(field(k, u));
    return g;
  }

  /// Σ_a ∂_a² applied mode by mode; zero on non-interior nodes.
  GridFunction sublaplacian(const GridFunction& u, SupportCheck = SupportCheck::enforce) const {
    require_domain(u, *domain_);
    return scale_modes(u, [](double kappa2_sum) { return -kappa2_sum; });
  }

  GridFunction L_power(const GridFunction& u, int j, SupportCheck = SupportCheck::enforce) const {
    if (j < 0) throw InvalidInput("L power must be nonnegative");
    require_domain(u, *domain_);
    GridFunction v = u;
    for (int s = 0; s < j; ++s) v = sublaplacian(v);
    return v;
  }

  GridFunction divergence(const VectorGridFunction& F, SupportCheck = SupportCheck::enforce) const {
    if (F.size() != static_cast<std::size_t>(domain_->dim()))
      throw DomainMismatch("vector grid function has the wrong number of components");
    GridFunction out(domain_);
    for (int k = 0; k < domain_->dim(); ++k) out.values += field(k, F[static_cast<std::size_t>(k)]).values;
    return out;
  }

  /// Closed-box trapezoid rule (exact for trigonometric polynomials of the resolved degree).
  double integrate(const GridFunction& f) const {
    require_domain(f, *domain_);
    return (domain_->closed_weights() * f.values).sum();
  }

  /// Solves −𝓛 x = b on the interior, exactly per mode.
  GridFunction solve_negative_laplacian(const GridFunction& b) const {
    require_domain(b, *domain_);
    return scale_modes(b, [](double kappa2_sum) { return 1.0 / kappa2_sum; });
  }

  /// Sine coefficients c_{k_0 k_1 k_2}, stored at the interior node with index (k_0+1, k_1+1, k_2+1).
  Eigen::ArrayXd to_modes(const GridFunction& f) const {
    require_domain(f, *domain_);
    Eigen::ArrayXd c = f.values;
    zero_off_interior(c);
    Eigen::ArrayXd tmp(c.size());
    for (int a = 0; a < domain_->dim(); ++a) {
      tmp.setZero();
      along_axis(a, c, tmp, axes_[static_cast<std::size_t>(a)].analysis, true);
      std::swap(c, tmp);
    }
    return c;
  }

  GridFunction from_modes(Eigen::ArrayXd c) const {
    if (c.size() != static_cast<Eigen::Index>(domain_->size())) throw DomainMismatch("mode array has the wrong size");
    Eigen::ArrayXd tmp(c.size());
    for (int a = 0; a < domain_->dim(); ++a) {
      tmp.setZero();
      along_axis(a, c, tmp, axes_[static_cast<std::size_t>(a)].synthesis, true);
      std::swap(c, tmp);
    }
    return GridFunction(domain_, std::move(c));
  }

  /// Σ_a κ_a² for each mode slot (zero on non-interior slots), so −𝓛 acts as multiplication by it.
  const Eigen::ArrayXd& mode_eigenvalues() const noexcept { return mode_kappa2_; }

  /// ‖Σ c sin‖² under the closed-box weights equals parseval_factor()·Σ c².
  double parseval_factor() const noexcept { return parseval_; }

 private:
  struct Axis {
    Eigen::MatrixXd synthesis;  // N×N: coefficients -> interior samples
    Eigen::MatrixXd analysis;   // N×N: interior samples -> coefficients
    Eigen::MatrixXd d1;         // P×N: interior samples -> derivative on all P nodes
    Eigen::VectorXd kappa2;     // (kπ/L)²
  };

  Axis make_axis(int a) const {
    const int P = domain_->points(a);
    const int N = P - 2;
    const double L = domain_->upper(a) - domain_->lower(a);
    const double pi = std::numbers::pi;
    Axis ax;
    ax.synthesis.resize(N, N);
    Eigen::MatrixXd cosines(P, N);
    Eigen::VectorXd kappa(N);
    for (int k = 0; k < N; ++k) kappa[k] = (k + 1) * pi / L;
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k) ax.synthesis(i, k) = std::sin((k + 1) * pi * (i + 1) / (N + 1));
    for (int p = 0; p < P; ++p)
      for (int k = 0; k < N; ++k) cosines(p, k) = std::cos((k + 1) * pi * p / (N + 1));
    ax.analysis = (2.0 / (N + 1)) * ax.synthesis;
    ax.kappa2 = kappa.array().square().matrix();
    ax.d1 = cosines * kappa.asDiagonal() * ax.analysis;
    return ax;
  }

  template <class Factor>
  GridFunction scale_modes(const GridFunction& f, Factor factor) const {
    Eigen::ArrayXd c = to_modes(f);
    for (Eigen::Index n = 0; n < c.size(); ++n)
      if (mode_kappa2_[n] > 0.0) c[n] *= factor(mode_kappa2_[n]);
    return from_modes(std::move(c));
  }

  Eigen::ArrayXd mode_kappa2_;
  double parseval_ = 1.0;

  void zero_off_interior(Eigen::ArrayXd& v) const {
    for (std::size_t n = 0; n < domain_->size(); ++n)
      if (!domain_->interior(n)) v[static_cast<Eigen::Index>(n)] = 0.0;
  }

  /// Applies `m` along every grid line of `axis`. The input is always the interior part of the
  /// line; the output is the interior part (square m) or the whole line (P rows).
  /// With `interior_lines_only`, lines lying on the boundary of another axis are skipped.
  void along_axis(int axis, const Eigen::ArrayXd& in, Eigen::ArrayXd& out, const Eigen::MatrixXd& m,
                  bool interior_lines_only) const {
    const int P = domain_->points(axis);
    const int N = P - 2;
    const std::size_t st = domain_->stride(axis);
    const bool full_output = m.rows() == P;
    std::vector<std::size_t> starts;
    for (std::size_t n = 0; n < domain_->size(); ++n) {
      const auto idx = domain_->multi_index(n);
      if (idx[axis] != 0) continue;
      bool skip = false;
      if (interior_lines_only)
        for (int b = 0; b < domain_->dim(); ++b)
          if (b != axis && (idx[b] == 0 || idx[b] == domain_->points(b) - 1)) skip = true;
      if (!skip) starts.push_back(n);
    }
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(starts.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t q = 0; q < count; ++q) {
      const std::size_t s = starts[static_cast<std::size_t>(q)];
      Eigen::VectorXd line(N);
      for (int t = 0; t < N; ++t) line[t] = in[static_cast<Eigen::Index>(s + (t + 1) * st)];
      const Eigen::VectorXd r = m * line;
      if (full_output)
        for (int t = 0; t < P; ++t) out[static_cast<Eigen::Index>(s + t * st)] = r[t];
      else
        for (int t = 0; t < N; ++t) out[static_cast<Eigen::Index>(s + (t + 1) * st)] = r[t];
    }
  }

  DomainPtr domain_;
  VectorFieldFamily fields_;
  std::vector<Axis> axes_;
};

static_assert(Calculus<FiniteDifferenceCalculus>);
static_assert(Calculus<SineSpectralCalculus>);

// Finite-difference shorthands.

inline GridFunction apply_field(const VectorFieldFamily& fields, int k, const GridFunction& u) {
  return FiniteDifferenceCalculus(u.domain, fields).field(k, u);
}

inline VectorGridFunction apply_gradient(const VectorFieldFamily& fields, const GridFunction& u) {
  return FiniteDifferenceCalculus(u.domain, fields).gradient(u);
}

inline GridFunction apply_sublaplacian(const VectorFieldFamily& fields, const GridFunction& u,
                                       SupportCheck check = SupportCheck::enforce) {
  return FiniteDifferenceCalculus(u.domain, fields).sublaplacian(u, check);
}

inline GridFunction apply_L_power(const VectorFieldFamily& fields, const GridFunction& u, int j,
                                  SupportCheck check = SupportCheck::enforce) {
  return FiniteDifferenceCalculus(u.domain, fields).L_power(u, j, check);
}

inline GridFunction divergence(const VectorFieldFamily& fields, const VectorGridFunction& F,
                               SupportCheck check = SupportCheck::enforce) {
  return FiniteDifferenceCalculus(F[0].domain, fields).divergence(F, check);
}

}  // namespace remform
