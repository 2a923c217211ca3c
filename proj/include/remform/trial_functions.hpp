#pragma once

/// \file trial_functions.hpp
/// Seeded, reproducible test functions: finite sine sums (vanish on the box boundary) and
/// products of per-axis squared polynomial bumps (vanish on a collar of grid layers).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "remform/errors.hpp"
#include "remform/grid_domain.hpp"

namespace remform {

/// Deterministic uniform draws in [lo, hi) from a 64-bit Mersenne twister. The conversion from
/// raw bits is done by hand because std::uniform_real_distribution is not portable across
/// standard libraries, which would break byte-identical reports.
class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }
  int integer(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

struct SineMode {
  std::array<int, kMaxDim> k{1, 1, 1};
  double amplitude = 1.0;
};

/// Σ amplitude·Π_a sin(k_a π (x_a − lower_a)/L_a) sampled on interior nodes.
inline GridFunction sine_sum(const DomainPtr& d, const std::vector<SineMode>& modes) {
  const double pi = std::numbers::pi;
  return GridFunction::sample_interior(d, [&](const Point& p) {
    double s = 0.0;
    for (const auto& m : modes) {
      double term = m.amplitude;
      for (int a = 0; a < d->dim(); ++a)
        term *= std::sin(m.k[a] * pi * (p[a] - d->lower(a)) / (d->upper(a) - d->lower(a)));
      s += term;
    }
    return s;
  });
}

/// Random sine sum of `n_modes` distinct multi-indices with 1 ≤ k_a ≤ max_mode and amplitudes in [−1, 1].
inline std::vector<SineMode> random_sine_modes(int dim, TrialRng& rng, int n_modes, int max_mode = 7) {
  if (n_modes < 1 || max_mode < 1) throw InvalidInput("sine trial needs at least one mode");
  std::vector<SineMode> modes;
  int guard = 0;
  while (static_cast<int>(modes.size()) < n_modes) {
    SineMode m;
    for (int a = 0; a < dim; ++a) m.k[a] = rng.integer(1, max_mode);
    m.amplitude = rng.uniform(-1.0, 1.0);
    bool dup = false;
    for (const auto& o : modes) dup = dup || o.k == m.k;
    if (!dup) modes.push_back(m);
    if (++guard > 10000) throw InvalidInput("cannot draw that many distinct sine modes");
  }
  return modes;
}

/// Per-axis bump factor (1 − s²)^exponent for |s| < 1, s = (x − center)/radius.
struct Bump {
  Point center{0, 0, 0};
  Point radius{1, 1, 1};
  int exponent = 12;
};

inline GridFunction bump_function(const DomainPtr& d, const Bump& b) {
  return GridFunction::sample_interior(d, [&](const Point& p) {
    double v = 1.0;
    for (int a = 0; a < d->dim(); ++a) {
      const double s = (p[a] - b.center[a]) / b.radius[a];
      if (std::abs(s) >= 1.0) return 0.0;
      v *= std::pow(1.0 - s * s, b.exponent);
    }
    return v;
  });
}

/// A bump whose support leaves at least `collar` zero layers inside the domain. The support
/// is centred at `center` with per-axis radius a fraction of the box and shrinks until the
/// collar holds (masked domains may need several shrink steps).
inline GridFunction collared_bump(const DomainPtr& d, Bump b, int collar) {
  for (int attempt = 0; attempt < 60; ++attempt) {
    GridFunction u = bump_function(d, b);
    if ((u.values != 0.0).any() && collar_width(u) >= collar) return u;
    for (int a = 0; a < d->dim(); ++a) b.radius[a] *= 0.85;
  }
  throw InvalidInput("cannot fit a bump with a collar of " + std::to_string(collar) + " layers into the domain");
}

/// Default bump: centred in the box, radius 0.35 of each side.
inline Bump centred_bump(const GridDomain& d, int exponent = 12) {
  Bump b;
  b.exponent = exponent;
  for (int a = 0; a < d.dim(); ++a) {
    b.center[a] = 0.5 * (d.lower(a) + d.upper(a));
    b.radius[a] = 0.35 * (d.upper(a) - d.lower(a));
  }
  return b;
}

/// Random bump: centre jittered by up to 15% of the side, radius in [0.2, 0.35] of the side.
inline Bump random_bump(const GridDomain& d, TrialRng& rng, int exponent = 12) {
  Bump b = centred_bump(d, exponent);
  for (int a = 0; a < d.dim(); ++a) {
    const double side = d.upper(a) - d.lower(a);
    b.center[a] += rng.uniform(-0.15, 0.15) * side;
    b.radius[a] = rng.uniform(0.2, 0.35) * side;
  }
  return b;
}

/// Random trial function: a 3–7 mode sine sum on an unmasked box with the euclidean family,
/// otherwise a product of squared bumps with the requested collar.
inline GridFunction random_trial(const DomainPtr& d, bool sine_allowed, TrialRng& rng, int collar = 1) {
  if (sine_allowed) {
    const int n = rng.integer(3, 7);
    return sine_sum(d, random_sine_modes(d->dim(), rng, n));
  }
  return collared_bump(d, random_bump(*d, rng), collar);
}

}  // namespace remform
