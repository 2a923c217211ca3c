#pragma once

/// \file vector_fields.hpp
/// Families X = (X_1, ..., X_N) of first-order operators X_k f = Σ_i a_{k,i}(x) ∂_i f.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "remform/errors.hpp"
#include "remform/grid_domain.hpp"

namespace remform {

using Coefficient = std::function<double(const Point&)>;

class VectorFieldFamily {
 public:
  VectorFieldFamily() = default;

  /// `coefficients[k * dim + i]` is a_{k,i}; an empty function means identically zero.
  VectorFieldFamily(std::string name, int dim, int n_fields, std::vector<Coefficient> coefficients,
                    bool divergence_free)
      : name_(std::move(name)),
        dim_(dim),
        n_fields_(n_fields),
        coefficients_(std::move(coefficients)),
        divergence_free_(divergence_free) {
    if (dim_ < 1 || dim_ > kMaxDim) throw InvalidInput("vector field dimension must be 1, 2 or 3");
    if (n_fields_ < 1) throw InvalidInput("a vector field family needs at least one field");
    if (coefficients_.size() != static_cast<std::size_t>(dim_ * n_fields_))
      throw InvalidInput("coefficient table has the wrong size");
  }

  static VectorFieldFamily euclidean(int dim) {
    std::vector<Coefficient> c(static_cast<std::size_t>(dim * dim));
    for (int k = 0; k < dim; ++k) c[static_cast<std::size_t>(k * dim + k)] = [](const Point&) { return 1.0; };
    return {"euclidean", dim, dim, std::move(c), true};
  }

  /// X_1 = ∂x − (y/2)∂t, X_2 = ∂y + (x/2)∂t on R^3 with coordinates (x, y, t).
  static VectorFieldFamily heisenberg() {
    std::vector<Coefficient> c(6);
    c[0] = [](const Point&) { return 1.0; };
    c[2] = [](const Point& p) { return -0.5 * p[1]; };
    c[4] = [](const Point&) { return 1.0; };
    c[5] = [](const Point& p) { return 0.5 * p[0]; };
    return {"heisenberg", 3, 2, std::move(c), true};
  }

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  int n_fields() const noexcept { return n_fields_; }
  bool divergence_free() const noexcept { return divergence_free_; }
  bool is_euclidean() const noexcept { return name_ == "euclidean"; }

  bool is_zero(int k, int i) const { return !coefficients_[index(k, i)]; }

  double coefficient(int k, int i, const Point& p) const {
    const auto& c = coefficients_[index(k, i)];
    return c ? c(p) : 0.0;
  }

  /// Σ_i ∂_i a_{k,i} by centered differences with step h per axis.
  double coefficient_divergence(int k, const Point& p, const std::array<double, kMaxDim>& h) const {
    double div = 0.0;
    for (int i = 0; i < dim_; ++i) {
      if (is_zero(k, i)) continue;
      Point pp = p, pm = p;
      pp[i] += h[i];
      pm[i] -= h[i];
      div += (coefficient(k, i, pp) - coefficient(k, i, pm)) / (2.0 * h[i]);
    }
    return div;
  }

 private:
  std::size_t index(int k, int i) const {
    if (k < 0 || k >= n_fields_) throw InvalidInput("field index " + std::to_string(k) + " out of range");
    if (i < 0 || i >= dim_) throw InvalidInput("axis index " + std::to_string(i) + " out of range");
    return static_cast<std::size_t>(k * dim_ + i);
  }

  std::string name_ = "euclidean";
  int dim_ = 1;
  int n_fields_ = 1;
  std::vector<Coefficient> coefficients_;
  bool divergence_free_ = true;
};

/// Custom family from a node-sampled CSV table: coordinate columns, then a_{k,i} for
/// k = 1..N, i = 1..dim (N inferred from the column count). Coefficients are looked up at the
/// nearest node of `grid`, so the table must be sampled on that grid.
inline VectorFieldFamily load_coefficient_table(const std::string& path, const DomainPtr& grid,
                                                std::string name = "custom") {
  const CsvTable t = read_csv_table(path);
  const int dim = grid->dim();
  if (t.rows.empty()) throw InvalidInput("empty coefficient table: " + path);
  const int cols = static_cast<int>(t.rows.front().size());
  if (cols <= dim || (cols - dim) % dim != 0)
    throw InvalidInput("coefficient table needs dim coordinate columns plus N*dim coefficient columns");
  const int n_fields = (cols - dim) / dim;

  auto tables = std::make_shared<std::vector<std::vector<double>>>(
      static_cast<std::size_t>(n_fields * dim), std::vector<double>(grid->size(), 0.0));
  std::vector<std::uint8_t> seen(grid->size(), 0);
  for (const auto& row : t.rows) {
    if (static_cast<int>(row.size()) != cols) throw InvalidInput("ragged coefficient table: " + path);
    Point p{0, 0, 0};
    for (int a = 0; a < dim; ++a) p[a] = row[a];
    const std::size_t n = grid->nearest_node(p);
    for (int c = 0; c < n_fields * dim; ++c) (*tables)[static_cast<std::size_t>(c)][n] = row[dim + c];
    seen[n] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0)
    throw InvalidInput("coefficient table does not cover every grid node: " + path);

  std::vector<Coefficient> coeffs(static_cast<std::size_t>(n_fields * dim));
  for (int c = 0; c < n_fields * dim; ++c) {
    const auto& col = (*tables)[static_cast<std::size_t>(c)];
    if (std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0; })) continue;
    coeffs[static_cast<std::size_t>(c)] = [tables, grid, c](const Point& p) {
      return (*tables)[static_cast<std::size_t>(c)][grid->nearest_node(p)];
    };
  }

  // Coefficient-divergence-freeness detected on deep interior nodes.
  VectorFieldFamily probe(name, dim, n_fields, coeffs, false);
  std::array<double, kMaxDim> h{1, 1, 1};
  for (int a = 0; a < dim; ++a) h[a] = grid->spacing(a);
  double max_div = 0.0, max_coeff = 0.0;
  for (std::size_t n = 0; n < grid->size(); ++n) {
    if (grid->depth(n) < 2) continue;
    const Point p = grid->coordinates(n);
    for (int k = 0; k < n_fields; ++k) {
      max_div = std::max(max_div, std::abs(probe.coefficient_divergence(k, p, h)));
      for (int i = 0; i < dim; ++i) max_coeff = std::max(max_coeff, std::abs(probe.coefficient(k, i, p)));
    }
  }
  const bool div_free = max_div <= 1e-9 * std::max(1.0, max_coeff);
  return {std::move(name), dim, n_fields, std::move(coeffs), div_free};
}

/// One grid function per field X_k.
struct VectorGridFunction {
  std::vector<GridFunction> components;

  std::size_t size() const { return components.size(); }
  const GridFunction& operator[](std::size_t k) const { return components[k]; }
  GridFunction& operator[](std::size_t k) { return components[k]; }

  /// Σ_k (F_k)^2 pointwise.
  GridFunction squared_norm() const {
    GridFunction out(components.front().domain);
    for (const auto& c : components) out.values += c.values.square();
    return out;
  }
};

}  // namespace remform
