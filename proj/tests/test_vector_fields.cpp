#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "remform/calculus.hpp"
#include "remform/trial_functions.hpp"
#include "remform/vector_fields.hpp"

using namespace remform;

namespace {

constexpr double kPi = std::numbers::pi;

DomainPtr interval(int n) { return build_box_domain({0.0}, {1.0}, {n}); }
DomainPtr cube(int n) { return build_box_domain({-1, -1, -1}, {1, 1, 1}, {n, n, n}); }

// max |a − b| over nodes at least `depth` away from the complement of the interior.
double deep_error(const GridFunction& a, const GridFunction& b, int depth) {
  double e = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    if (a.domain->depth(n) >= depth) e = std::max(e, std::abs(a[n] - b[n]));
  return e;
}

TEST(Family, EuclideanIsKronecker) {
  const auto f = VectorFieldFamily::euclidean(3);
  EXPECT_EQ(f.n_fields(), 3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i) EXPECT_EQ(f.coefficient(k, i, {0.3, -0.2, 0.7}), k == i ? 1.0 : 0.0);
  EXPECT_TRUE(f.divergence_free());
}

TEST(Family, HeisenbergCoefficients) {
  const auto f = VectorFieldFamily::heisenberg();
  EXPECT_EQ(f.dim(), 3);
  EXPECT_EQ(f.n_fields(), 2);
  const Point p{0.4, -0.6, 0.1};
  EXPECT_EQ(f.coefficient(0, 0, p), 1.0);
  EXPECT_EQ(f.coefficient(0, 2, p), 0.3);
  EXPECT_EQ(f.coefficient(1, 1, p), 1.0);
  EXPECT_EQ(f.coefficient(1, 2, p), 0.2);
  EXPECT_TRUE(f.divergence_free());
  EXPECT_EQ(f.coefficient_divergence(0, p, {0.1, 0.1, 0.1}), 0.0);
}

TEST(ApplyField, CenteredStencilExactOnQuadratics) {
  const DomainPtr d = interval(33);
  const GridFunction u = GridFunction::sample(d, [](const Point& p) { return p[0] * p[0]; });
  const GridFunction xu = apply_field(VectorFieldFamily::euclidean(1), 0, u);
  const GridFunction exact = GridFunction::sample_interior(d, [](const Point& p) { return 2.0 * p[0]; });
  EXPECT_LE((xu.values - exact.values).abs().maxCoeff(), 1e-12);
}

TEST(ApplyField, HeisenbergOnLinearT) {
  const DomainPtr d = cube(9);
  const GridFunction u = GridFunction::sample(d, [](const Point& p) { return p[2]; });
  const GridFunction x1 = apply_field(VectorFieldFamily::heisenberg(), 0, u);
  const GridFunction exact = GridFunction::sample_interior(d, [](const Point& p) { return -0.5 * p[1]; });
  EXPECT_LE((x1.values - exact.values).abs().maxCoeff(), 1e-13);
}

TEST(ApplyField, SecondOrder2DDerivative) {
  std::vector<double> err;
  for (int n : {33, 65, 129}) {
    const DomainPtr d = build_box_domain({0.0, 0.0}, {1.0, 1.0}, {n, n});
    const GridFunction u =
        GridFunction::sample(d, [](const Point& p) { return std::sin(kPi * p[0]) * std::sin(kPi * p[1]); });
    const GridFunction exact = GridFunction::sample_interior(
        d, [](const Point& p) { return kPi * std::cos(kPi * p[0]) * std::sin(kPi * p[1]); });
    err.push_back(deep_error(apply_field(VectorFieldFamily::euclidean(2), 0, u), exact, 1));
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.1);
  EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.1);
}

TEST(Gradient, SineIn1D) {
  const DomainPtr d = interval(257);
  const GridFunction u = GridFunction::sample(d, [](const Point& p) { return std::sin(kPi * p[0]); });
  const VectorGridFunction g = apply_gradient(VectorFieldFamily::euclidean(1), u);
  ASSERT_EQ(g.size(), 1u);
  const GridFunction exact = GridFunction::sample_interior(d, [](const Point& p) { return kPi * std::cos(kPi * p[0]); });
  const double h = d->spacing(0);
  EXPECT_LE(deep_error(g[0], exact, 1), kPi * kPi * kPi / 6.0 * h * h * 1.01);
}

TEST(Gradient, ConstantsAnnihilated) {
  for (const auto& fam : {VectorFieldFamily::euclidean(3), VectorFieldFamily::heisenberg()}) {
    const DomainPtr d = cube(9);
    const GridFunction c = GridFunction::sample(d, [](const Point&) { return 3.5; });
    const VectorGridFunction g = apply_gradient(fam, c);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(g[k].values.abs().maxCoeff(), 0.0);
  }
}

TEST(Gradient, HeisenbergOnX) {
  const DomainPtr d = cube(9);
  const GridFunction u = GridFunction::sample(d, [](const Point& p) { return p[0]; });
  const VectorGridFunction g = apply_gradient(VectorFieldFamily::heisenberg(), u);
  const GridFunction one = GridFunction::sample_interior(d, [](const Point&) { return 1.0; });
  EXPECT_LE((g[0].values - one.values).abs().maxCoeff(), 1e-13);
  EXPECT_LE(g[1].values.abs().maxCoeff(), 1e-13);
}

TEST(Sublaplacian, SineIn1DSecondOrder) {
  std::vector<double> err;
  for (int n : {65, 129, 257}) {
    const DomainPtr d = interval(n);
    const GridFunction u = GridFunction::sample(d, [](const Point& p) { return std::sin(kPi * p[0]); });
    const GridFunction lu = apply_sublaplacian(VectorFieldFamily::euclidean(1), u, SupportCheck::skip);
    const GridFunction exact =
        GridFunction::sample_interior(d, [](const Point& p) { return -kPi * kPi * std::sin(kPi * p[0]); });
    err.push_back(deep_error(lu, exact, 2));
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.1);
  EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.1);
}

TEST(Sublaplacian, ConstantIsZero) {
  const DomainPtr d = interval(33);
  const GridFunction c = GridFunction::sample(d, [](const Point&) { return 2.0; });
  const GridFunction l = apply_sublaplacian(VectorFieldFamily::euclidean(1), c, SupportCheck::skip);
  EXPECT_EQ(deep_error(l, GridFunction(d), 2), 0.0);
}

TEST(Sublaplacian, HeisenbergOnRadialSquare) {
  const DomainPtr d = cube(17);
  const GridFunction u = GridFunction::sample(d, [](const Point& p) { return p[0] * p[0] + p[1] * p[1]; });
  const GridFunction l = apply_sublaplacian(VectorFieldFamily::heisenberg(), u, SupportCheck::skip);
  const GridFunction four = GridFunction::sample(d, [](const Point&) { return 4.0; });
  EXPECT_LE(deep_error(l, four, 2), 1e-11);
}

TEST(Sublaplacian, CollarEnforced) {
  const DomainPtr d = interval(33);
  const GridFunction u = GridFunction::sample_interior(d, [](const Point& p) { return std::sin(kPi * p[0]); });
  EXPECT_THROW(apply_sublaplacian(VectorFieldFamily::euclidean(1), u), CollarTooThin);
}

TEST(LPower, ZeroIsIdentity) {
  const DomainPtr d = interval(33);
  const GridFunction u = GridFunction::sample_interior(d, [](const Point& p) { return p[0] * (1 - p[0]); });
  EXPECT_EQ((apply_L_power(VectorFieldFamily::euclidean(1), u, 0).values - u.values).abs().maxCoeff(), 0.0);
}

TEST(LPower, SpectralExactOnModes) {
  const DomainPtr d = interval(65);
  const SineSpectralCalculus sp(d, VectorFieldFamily::euclidean(1));
  const GridFunction u = GridFunction::sample_interior(d, [](const Point& p) { return std::sin(2 * kPi * p[0]); });
  const double k4 = std::pow(2 * kPi, 4);
  const GridFunction l2 = sp.L_power(u, 2);
  // round-off is amplified by the largest resolved wavenumber, (63π)⁴ ≈ 1.5e9
  const double kmax4 = std::pow(63 * kPi, 4);
  EXPECT_LE((l2.values - k4 * u.values).abs().maxCoeff(), 1e4 * std::numeric_limits<double>::epsilon() * kmax4);
}

TEST(LPower, FiniteDifferenceSquareOfLaplacian) {
  std::vector<double> err;
  for (int n : {65, 129, 257}) {
    const DomainPtr d = interval(n);
    const GridFunction u = GridFunction::sample(d, [](const Point& p) { return std::sin(kPi * p[0]); });
    const GridFunction l2 = apply_L_power(VectorFieldFamily::euclidean(1), u, 2, SupportCheck::skip);
    const GridFunction exact =
        GridFunction::sample_interior(d, [](const Point& p) { return std::pow(kPi, 4) * std::sin(kPi * p[0]); });
    err.push_back(deep_error(l2, exact, 4));
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 2.0, 0.15);
  EXPECT_NEAR(std::log2(err[1] / err[2]), 2.0, 0.15);
}

TEST(Divergence, ZeroField) {
  const DomainPtr d = interval(33);
  VectorGridFunction f;
  f.components.emplace_back(d);
  EXPECT_EQ(divergence(VectorFieldFamily::euclidean(1), f).values.abs().maxCoeff(), 0.0);
}

TEST(Divergence, TelescopesFor1DCompactField) {
  const DomainPtr d = interval(129);
  const GridFunction bump = collared_bump(d, centred_bump(*d), 1);
  VectorGridFunction f;
  f.components.emplace_back(d, bump.values * GridFunction::sample(d, [](const Point& p) { return std::sin(kPi * p[0]); }).values);
  const double total = integrate(divergence(VectorFieldFamily::euclidean(1), f));
  EXPECT_LE(std::abs(total), 1e-14 * f[0].values.abs().maxCoeff());
}

TEST(Divergence, TelescopesForHeisenberg) {
  const DomainPtr d = cube(17);
  const GridFunction b = collared_bump(d, centred_bump(*d), 1);
  VectorGridFunction f;
  f.components.emplace_back(d, b.values * GridFunction::sample(d, [](const Point& p) { return 1 + p[0] * p[2]; }).values);
  f.components.emplace_back(d, b.values * GridFunction::sample(d, [](const Point& p) { return p[1] - p[2]; }).values);
  const double total = integrate(divergence(VectorFieldFamily::heisenberg(), f));
  EXPECT_LE(std::abs(total), 1e-13);
}

TEST(Backends, FiniteDifferenceAgreesWithSpectralToSecondOrder) {
  std::vector<double> diff;
  for (int n : {65, 129, 257}) {
    const DomainPtr d = interval(n);
    const FiniteDifferenceCalculus fd(d, VectorFieldFamily::euclidean(1));
    const SineSpectralCalculus sp(d, VectorFieldFamily::euclidean(1));
    const GridFunction u = collared_bump(d, centred_bump(*d, 12), 4);
    diff.push_back((fd.L_power(u, 2).values - sp.L_power(u, 2).values).abs().maxCoeff());
  }
  EXPECT_NEAR(std::log2(diff[0] / diff[1]), 2.0, 0.3);
  EXPECT_NEAR(std::log2(diff[1] / diff[2]), 2.0, 0.3);
}

TEST(Backends, SpectralRejectsNonEuclideanOrMasked) {
  EXPECT_THROW(SineSpectralCalculus(cube(9), VectorFieldFamily::heisenberg()), InvalidInput);
  const DomainPtr box = build_box_domain({-1.0, -1.0}, {1.0, 1.0}, {33, 33});
  const DomainPtr disk = build_masked_domain(box, disk_indicator({0, 0, 0}, 0.9), "disk");
  EXPECT_THROW(SineSpectralCalculus(disk, VectorFieldFamily::euclidean(2)), InvalidInput);
}

TEST(CustomFamily, TableLoadsAndDetectsDivergence) {
  const DomainPtr d = build_box_domain({0.0, 0.0}, {1.0, 1.0}, {9, 9});
  const auto path = std::filesystem::temp_directory_path() / "remform_custom_family.csv";
  {
    std::ofstream os(path);
    os << "x,y,a11,a12\n";
    for (std::size_t n = 0; n < d->size(); ++n) {
      const Point p = d->coordinates(n);
      os << format_double(p[0]) << ',' << format_double(p[1]) << ",1," << format_double(p[0]) << '\n';
    }
  }
  // X = ∂x + x∂y: ∂_x a_1 + ∂_y a_2 = 0, divergence-free.
  const VectorFieldFamily f = load_coefficient_table(path.string(), d);
  EXPECT_EQ(f.n_fields(), 1);
  EXPECT_TRUE(f.divergence_free());
  const GridFunction u = GridFunction::sample(d, [](const Point& p) { return p[1]; });
  const GridFunction xu = apply_field(f, 0, u);
  const GridFunction exact = GridFunction::sample_interior(d, [](const Point& p) { return p[0]; });
  EXPECT_LE((xu.values - exact.values).abs().maxCoeff(), 1e-14);
  {
    std::ofstream os(path);
    os << "x,y,a11,a12\n";
    for (std::size_t n = 0; n < d->size(); ++n) {
      const Point p = d->coordinates(n);
      os << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[0]) << ",0\n";
    }
  }
  EXPECT_FALSE(load_coefficient_table(path.string(), d).divergence_free());
  std::filesystem::remove(path);
}

}  // namespace
