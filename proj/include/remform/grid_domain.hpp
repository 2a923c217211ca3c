#pragma once

/// \file grid_domain.hpp
/// Uniform tensor grids on coordinate boxes in R^n (n <= 3), interior masks,
/// product-trapezoid quadrature and the grid functions that live on them.
///
/// A GridDomain is immutable once built and is shared through DomainPtr.
/// Curved domains are realized by masking the box; quadrature weights are the
/// box's product-trapezoid weights restricted to the interior.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "remform/errors.hpp"

namespace remform {

inline constexpr int kMaxDim = 3;
inline constexpr int kMinPointsPerAxis = 9;

using Point = std::array<double, kMaxDim>;
using Indicator = std::function<bool(const Point&)>;

class GridDomain;
using DomainPtr = std::shared_ptr<const GridDomain>;

class GridDomain {
 public:
  int dim() const noexcept { return dim_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  int points(int axis) const { return points_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  std::size_t size() const noexcept { return size_; }
  const std::string& mask_name() const noexcept { return mask_name_; }
  bool is_box() const noexcept { return mask_name_ == "box"; }

  /// Largest spacing over the active axes; the "h" of convergence tables.
  double max_spacing() const {
    double h = 0.0;
    for (int a = 0; a < dim_; ++a) h = std::max(h, spacing_[a]);
    return h;
  }

  std::array<int, kMaxDim> multi_index(std::size_t node) const {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      idx[a] = static_cast<int>(node % static_cast<std::size_t>(points_[a]));
      node /= static_cast<std::size_t>(points_[a]);
    }
    return idx;
  }

  std::size_t node(const std::array<int, kMaxDim>& idx) const {
    std::size_t n = 0;
    for (int a = dim_ - 1; a >= 0; --a) n = n * static_cast<std::size_t>(points_[a]) + idx[a];
    return n;
  }

  Point coordinates(std::size_t node) const {
    Point p{0.0, 0.0, 0.0};
    const auto idx = multi_index(node);
    for (int a = 0; a < dim_; ++a) p[a] = lower_[a] + idx[a] * spacing_[a];
    return p;
  }

  bool on_box_boundary(std::size_t node) const {
    const auto idx = multi_index(node);
    for (int a = 0; a < dim_; ++a)
      if (idx[a] == 0 || idx[a] == points_[a] - 1) return true;
    return false;
  }

  bool interior(std::size_t node) const { return interior_[node] != 0; }
  const std::vector<std::uint8_t>& interior_mask() const noexcept { return interior_; }
  std::size_t interior_count() const noexcept { return interior_count_; }

  /// Product-trapezoid weights restricted to the interior (zero elsewhere).
  const Eigen::ArrayXd& quadrature_weights() const noexcept { return weights_; }

  /// Product-trapezoid weights of the closed box, boundary nodes included.
  /// Used by the sine-spectral backend, whose fields are defined up to the boundary.
  const Eigen::ArrayXd& closed_weights() const noexcept { return closed_weights_; }

  /// Chebyshev (L-infinity) index distance to the nearest non-interior node; 0 on non-interior nodes.
  int depth(std::size_t node) const { return depth_[node]; }

  double measure() const { return weights_.sum(); }

  /// Same grid geometry and mask (used to accept structurally equal domains).
  bool same_grid(const GridDomain& other) const {
    if (this == &other) return true;
    if (dim_ != other.dim_) return false;
    for (int a = 0; a < dim_; ++a)
      if (points_[a] != other.points_[a] || lower_[a] != other.lower_[a] || upper_[a] != other.upper_[a])
        return false;
    return interior_ == other.interior_;
  }

  /// Nearest grid node to a point (clamped to the box).
  std::size_t nearest_node(const Point& p) const {
    std::array<int, kMaxDim> idx{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      const long i = std::lround((p[a] - lower_[a]) / spacing_[a]);
      idx[a] = static_cast<int>(std::clamp<long>(i, 0, points_[a] - 1));
    }
    return node(idx);
  }

 private:
  friend DomainPtr build_box_domain(const std::vector<double>&, const std::vector<double>&,
                                    const std::vector<int>&);
  friend DomainPtr build_masked_domain(const DomainPtr&, const Indicator&, std::string);

  void finalize() {
    interior_count_ = static_cast<std::size_t>(std::count(interior_.begin(), interior_.end(), 1));
    weights_ = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(size_));
    closed_weights_ = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(size_));
    for (std::size_t n = 0; n < size_; ++n) {
      const auto idx = multi_index(n);
      double w = 1.0;
      for (int a = 0; a < dim_; ++a)
        w *= (idx[a] == 0 || idx[a] == points_[a] - 1) ? 0.5 * spacing_[a] : spacing_[a];
      closed_weights_[static_cast<Eigen::Index>(n)] = w;
      if (interior_[n]) weights_[static_cast<Eigen::Index>(n)] = w;
    }
    compute_depth();
  }

  // Multi-source BFS over the 3^dim neighbourhood from all non-interior nodes.
  void compute_depth() {
    constexpr int kUnset = std::numeric_limits<int>::max();
    depth_.assign(size_, kUnset);
    std::queue<std::size_t> frontier;
    for (std::size_t n = 0; n < size_; ++n)
      if (!interior_[n]) {
        depth_[n] = 0;
        frontier.push(n);
      }
    while (!frontier.empty()) {
      const std::size_t n = frontier.front();
      frontier.pop();
      const auto idx = multi_index(n);
      const int reach[kMaxDim] = {1, dim_ > 1 ? 1 : 0, dim_ > 2 ? 1 : 0};
      for (int dz = -reach[2]; dz <= reach[2]; ++dz)
        for (int dy = -reach[1]; dy <= reach[1]; ++dy)
          for (int dx = -reach[0]; dx <= reach[0]; ++dx) {
            const std::array<int, kMaxDim> nb{idx[0] + dx, idx[1] + dy, idx[2] + dz};
            bool inside = true;
            for (int a = 0; a < dim_; ++a) inside = inside && nb[a] >= 0 && nb[a] < points_[a];
            if (!inside) continue;
            const std::size_t m = node(nb);
            if (depth_[m] == kUnset) {
              depth_[m] = depth_[n] + 1;
              frontier.push(m);
            }
          }
    }
  }

  int dim_ = 1;
  std::array<double, kMaxDim> lower_{0, 0, 0};
  std::array<double, kMaxDim> upper_{0, 0, 0};
  std::array<double, kMaxDim> spacing_{1, 1, 1};
  std::array<int, kMaxDim> points_{1, 1, 1};
  std::array<std::size_t, kMaxDim> stride_{1, 1, 1};
  std::size_t size_ = 0;
  std::size_t interior_count_ = 0;
  std::string mask_name_ = "box";
  std::vector<std::uint8_t> interior_;
  std::vector<int> depth_;
  Eigen::ArrayXd weights_;
  Eigen::ArrayXd closed_weights_;
};

/// Uniform grid on the box prod_i [lower_i, upper_i]; the interior is the open box.
inline DomainPtr build_box_domain(const std::vector<double>& lower, const std::vector<double>& upper,
                                  const std::vector<int>& points) {
  const std::size_t dim = lower.size();
  if (dim < 1 || dim > static_cast<std::size_t>(kMaxDim))
    throw InvalidInput("domain dimension must be 1, 2 or 3");
  if (upper.size() != dim || points.size() != dim)
    throw InvalidInput("lower, upper and points must have the same length");
  auto d = std::make_shared<GridDomain>();
  d->dim_ = static_cast<int>(dim);
  d->size_ = 1;
  for (std::size_t a = 0; a < dim; ++a) {
    if (!(upper[a] > lower[a]))
      throw InvalidInput("degenerate axis " + std::to_string(a) + ": upper must exceed lower");
    if (points[a] < kMinPointsPerAxis)
      throw InvalidInput("too few points on axis " + std::to_string(a) + " (need >= " +
                         std::to_string(kMinPointsPerAxis) + ")");
    d->lower_[a] = lower[a];
    d->upper_[a] = upper[a];
    d->points_[a] = points[a];
    d->spacing_[a] = (upper[a] - lower[a]) / (points[a] - 1);
    d->stride_[a] = d->size_;
    d->size_ *= static_cast<std::size_t>(points[a]);
  }
  d->interior_.assign(d->size_, 0);
  for (std::size_t n = 0; n < d->size_; ++n) d->interior_[n] = d->on_box_boundary(n) ? 0 : 1;
  d->finalize();
  return d;
}

/// Restricts a domain's interior to the nodes where `indicator` holds.
inline DomainPtr build_masked_domain(const DomainPtr& box, const Indicator& indicator,
                                     std::string mask_name = "custom") {
  if (!box) throw InvalidInput("null domain");
  auto d = std::make_shared<GridDomain>(*box);
  bool all_kept = true;
  for (std::size_t n = 0; n < d->size_; ++n) {
    if (!d->interior_[n]) continue;
    if (!indicator(d->coordinates(n))) {
      d->interior_[n] = 0;
      all_kept = false;
    }
  }
  d->mask_name_ = all_kept ? box->mask_name_ : std::move(mask_name);
  if (std::count(d->interior_.begin(), d->interior_.end(), 1) == 0)
    throw InvalidInput("empty interior after masking");
  d->finalize();
  return d;
}

inline Indicator disk_indicator(Point center, double radius) {
  return [center, radius](const Point& p) {
    double r2 = 0.0;
    for (int a = 0; a < kMaxDim; ++a) r2 += (p[a] - center[a]) * (p[a] - center[a]);
    return r2 < radius * radius;
  };
}

inline Indicator annulus_indicator(Point center, double inner, double outer) {
  return [center, inner, outer](const Point& p) {
    double r2 = 0.0;
    for (int a = 0; a < kMaxDim; ++a) r2 += (p[a] - center[a]) * (p[a] - center[a]);
    return r2 > inner * inner && r2 < outer * outer;
  };
}

/// Real samples on a grid. Values are expected to vanish on non-interior nodes
/// unless a routine documents otherwise (e.g. manufactured φ).
struct GridFunction {
  DomainPtr domain;
  Eigen::ArrayXd values;

  GridFunction() = default;
  explicit GridFunction(DomainPtr d)
      : domain(std::move(d)), values(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(domain->size()))) {}
  GridFunction(DomainPtr d, Eigen::ArrayXd v) : domain(std::move(d)), values(std::move(v)) {
    if (values.size() != static_cast<Eigen::Index>(domain->size()))
      throw DomainMismatch("value count does not match the domain size");
  }

  template <class F>
  static GridFunction sample(const DomainPtr& d, F&& f) {
    GridFunction g(d);
    for (std::size_t n = 0; n < d->size(); ++n) g.values[static_cast<Eigen::Index>(n)] = f(d->coordinates(n));
    return g;
  }

  /// Like sample(), but forced to zero off the interior.
  template <class F>
  static GridFunction sample_interior(const DomainPtr& d, F&& f) {
    GridFunction g(d);
    for (std::size_t n = 0; n < d->size(); ++n)
      if (d->interior(n)) g.values[static_cast<Eigen::Index>(n)] = f(d->coordinates(n));
    return g;
  }

  double operator[](std::size_t n) const { return values[static_cast<Eigen::Index>(n)]; }
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

inline void require_same_domain(const GridFunction& a, const GridFunction& b) {
  if (!a.domain || !b.domain) throw DomainMismatch("grid function without domain");
  if (a.domain != b.domain && !a.domain->same_grid(*b.domain))
    throw DomainMismatch("grid functions live on different domains");
}

inline void require_domain(const GridFunction& f, const GridDomain& d) {
  if (!f.domain) throw DomainMismatch("grid function without domain");
  if (f.domain.get() != &d && !f.domain->same_grid(d))
    throw DomainMismatch("grid function lives on a different domain");
  if (f.values.size() != static_cast<Eigen::Index>(d.size()))
    throw DomainMismatch("value count does not match the domain size");
}

/// ∫_Ω f dx with the interior-restricted trapezoid weights.
inline double integrate(const GridFunction& f) {
  if (!f.domain) throw DomainMismatch("grid function without domain");
  if (f.values.size() != f.domain->quadrature_weights().size())
    throw DomainMismatch("value count does not match the domain size");
  return (f.domain->quadrature_weights() * f.values).sum();
}

/// Number of interior layers next to the non-interior set on which f vanishes.
/// Returns -1 if f is nonzero on a non-interior node, INT_MAX if f is identically zero.
inline int collar_width(const GridFunction& f) {
  int collar = std::numeric_limits<int>::max();
  const GridDomain& d = *f.domain;
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (f.values[static_cast<Eigen::Index>(n)] == 0.0) continue;
    collar = std::min(collar, d.depth(n) - 1);
  }
  return collar;
}

inline bool is_compactly_supported(const GridFunction& f) { return collar_width(f) >= 1; }

inline const char* axis_name(int axis) {
  static constexpr const char* names[kMaxDim] = {"x", "y", "z"};
  return names[axis];
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// CSV: one row per node, coordinate columns followed by one column per function.
inline void write_grid_csv(std::ostream& os,
                           const std::vector<std::pair<std::string, const GridFunction*>>& columns) {
  if (columns.empty()) return;
  const GridDomain& d = *columns.front().second->domain;
  for (const auto& c : columns) require_domain(*c.second, d);
  for (int a = 0; a < d.dim(); ++a) os << axis_name(a) << ',';
  for (std::size_t c = 0; c < columns.size(); ++c) os << columns[c].first << (c + 1 < columns.size() ? "," : "\n");
  for (std::size_t n = 0; n < d.size(); ++n) {
    const Point p = d.coordinates(n);
    for (int a = 0; a < d.dim(); ++a) os << format_double(p[a]) << ',';
    for (std::size_t c = 0; c < columns.size(); ++c)
      os << format_double((*columns[c].second)[n]) << (c + 1 < columns.size() ? "," : "\n");
  }
}

inline void write_grid_csv(std::ostream& os, const GridFunction& f, const std::string& name = "value") {
  write_grid_csv(os, {{name, &f}});
}

/// Parsed numeric CSV (header row skipped).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open CSV file: " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      bool numeric = true;
      try {
        for (const auto& c : cells) (void)std::stod(c);
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) {
        t.header = cells;
        continue;
      }
    }
    std::vector<double> row;
    try {
      for (const auto& c : cells) row.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw InvalidInput("non-numeric CSV cell in " + path);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Reads a grid function written by write_grid_csv (coordinates, then value in column `column`).
/// Rows are matched to grid nodes by coordinates.
inline GridFunction read_grid_csv(const std::string& path, const DomainPtr& d, int column = -1) {
  const CsvTable t = read_csv_table(path);
  GridFunction f(d);
  std::vector<std::uint8_t> seen(d->size(), 0);
  for (const auto& row : t.rows) {
    if (static_cast<int>(row.size()) < d->dim() + 1) throw InvalidInput("CSV row too short in " + path);
    Point p{0, 0, 0};
    for (int a = 0; a < d->dim(); ++a) p[a] = row[a];
    const std::size_t n = d->nearest_node(p);
    const Point q = d->coordinates(n);
    for (int a = 0; a < d->dim(); ++a)
      if (std::abs(q[a] - p[a]) > 1e-6 * d->spacing(a))
        throw DomainMismatch("CSV coordinates do not match the grid: " + path);
    const int c = column < 0 ? static_cast<int>(row.size()) - 1 : d->dim() + column;
    f.values[static_cast<Eigen::Index>(n)] = row.at(static_cast<std::size_t>(c));
    seen[n] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 0) != 0)
    throw DomainMismatch("CSV does not cover every grid node: " + path);
  return f;
}

}  // namespace remform
