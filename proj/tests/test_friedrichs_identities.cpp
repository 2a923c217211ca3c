#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "remform/calculus.hpp"
#include "remform/eigensolver.hpp"
#include "remform/friedrichs.hpp"
#include "remform/steklov.hpp"
#include "remform/trial_functions.hpp"

using namespace remform;

namespace {

constexpr double kPi = std::numbers::pi;

DomainPtr interval(int n) { return build_box_domain({0.0}, {1.0}, {n}); }

GridFunction friedrichs_trial(const DomainPtr& d) {
  Bump b = centred_bump(*d, 4);
  for (int a = 0; a < d->dim(); ++a) b.radius[a] = 0.425 * (d->upper(a) - d->lower(a));
  return collared_bump(d, b, 1);
}

TEST(Sigma, PowersOfTwo) {
  for (int m = 1; m <= 62; ++m) EXPECT_EQ(power_p(m), std::uint64_t{1} << m);
}

TEST(Sigma, ExactRecursionValues) {
  EXPECT_EQ(exact_sigma(1), 0u);
  EXPECT_EQ(exact_sigma(2), 4u);
  EXPECT_EQ(exact_sigma(3), 68u);
  EXPECT_EQ(exact_sigma(4), 16452u);
  EXPECT_EQ(exact_sigma(5), 1073758276u);
  EXPECT_EQ(exact_sigma(6), 4611686019501146180u);
  EXPECT_THROW(exact_sigma(7), InvalidInput);
  EXPECT_THROW(exact_sigma(0), InvalidInput);
}

TEST(Sigma, LogDomainReproducesIntegers) {
  EXPECT_TRUE(std::isinf(log_sigma(1)) && log_sigma(1) < 0);
  for (int m = 2; m <= 5; ++m) EXPECT_EQ(std::llround(std::exp(log_sigma(m))), static_cast<long long>(exact_sigma(m)));
  EXPECT_NEAR(log_sigma(6), std::log(4611686019501146180.0), 1e-15 * log_sigma(6));
  EXPECT_TRUE(std::isfinite(log_sigma(62)));
  EXPECT_THROW(log_sigma(63), InvalidInput);
}

TEST(Sigma, ParamsBundle) {
  const FriedrichsParams f = sigma(3);
  EXPECT_EQ(f.m, 3);
  EXPECT_EQ(f.p, 8u);
  ASSERT_TRUE(f.exact.has_value());
  EXPECT_EQ(*f.exact, 68u);
  EXPECT_FALSE(sigma(7).exact.has_value());
  EXPECT_EQ(sigma_value(2), 4.0);
}

TEST(SigmaRows, SmallOrders) {
  EXPECT_NEAR(sigma_row(2).root, std::sqrt(2.0), 1e-15);
  const SigmaRow r3 = sigma_row(3);
  EXPECT_NEAR(r3.root, 1.6945859998907995, 1e-14);
  EXPECT_NEAR(r3.lower, 1.681792830507429, 1e-14);
  EXPECT_NEAR(r3.upper, 1.8340080864093424, 1e-14);
  EXPECT_TRUE(r3.within_bounds);
  EXPECT_THROW(sigma_row(1), InvalidInput);
}

TEST(SigmaRows, BoundsAndLimit) {
  const auto rows = sigma_asymptotics(62);
  ASSERT_EQ(rows.size(), 61u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.within_bounds) << "m = " << r.m;
    EXPECT_LE(r.root, 2.0);
  }
  EXPECT_LE(sigma_row(20).distance_to_two, 5e-5);
  // 2·4^{−1/p_m} is the leading behaviour of the root.
  EXPECT_NEAR(sigma_row(12).distance_to_two, 2.0 * (1.0 - std::pow(4.0, -1.0 / 4096.0)), 1e-9);
}

TEST(FriedrichsIdentity, OrderOneMatchesSteklovSquare) {
  const FiniteDifferenceCalculus fd(interval(129), VectorFieldFamily::euclidean(1));
  const EigenPair eig = ground_state(fd);
  const GridFunction u = friedrichs_trial(fd.domain_ptr());
  const IdentityReport f = friedrichs_identity(fd, u, eig.eigenfunction, 1);
  ASSERT_EQ(f.rhs_terms.size(), 2u);
  EXPECT_EQ(f.sigma, 0.0);
  const IdentityReport b = base_identity(fd, u, eig);
  EXPECT_LE((f.rhs_terms[0].values.values - b.rhs_terms[0].values.values).abs().maxCoeff(), 1e-12 * b.scale);
  EXPECT_LE((f.rhs_terms[1].values.values - b.rhs_terms[1].values.values).abs().maxCoeff(), 1e-12 * b.scale);
}

TEST(FriedrichsIdentity, OrderTwoWithNonEigenWeight) {
  std::vector<double> res;
  for (int n : {129, 257, 513}) {
    const FiniteDifferenceCalculus fd(interval(n), VectorFieldFamily::euclidean(1));
    const GridFunction phi = GridFunction::sample(fd.domain_ptr(), [](const Point& p) { return std::sin(kPi * p[0]) + 0.5; });
    const IdentityReport r = friedrichs_identity(fd, friedrichs_trial(fd.domain_ptr()), phi, 2);
    EXPECT_EQ(r.sigma, 4.0);
    EXPECT_GE(r.min_square(), -1e-12);
    res.push_back(r.residual_norm);
  }
  EXPECT_NEAR(std::log2(res[0] / res[1]), 2.0, 0.3);
  EXPECT_NEAR(std::log2(res[1] / res[2]), 2.0, 0.3);
}

TEST(FriedrichsIdentity, TermLayout) {
  const FiniteDifferenceCalculus fd(interval(129), VectorFieldFamily::euclidean(1));
  const GridFunction phi = manufactured_phi(fd.domain_ptr());
  const IdentityReport r = friedrichs_identity(fd, friedrichs_trial(fd.domain_ptr()), phi, 3);
  const std::vector<std::string> want{"square_power[j=1]", "square_power[j=2]", "square_X[j=3]", "divergence[j=3]"};
  ASSERT_EQ(r.rhs_terms.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(r.rhs_terms[i].name, want[i]);
}

TEST(FriedrichsIdentity, ZeroTrial) {
  const FiniteDifferenceCalculus fd(interval(65), VectorFieldFamily::euclidean(1));
  const GridFunction zero(fd.domain_ptr());
  const IdentityReport r = friedrichs_identity(fd, zero, manufactured_phi(fd.domain_ptr()), 2);
  EXPECT_EQ(r.lhs.values.abs().maxCoeff(), 0.0);
  for (const auto& t : r.rhs_terms) EXPECT_EQ(t.values.values.abs().maxCoeff(), 0.0);
}

TEST(FriedrichsIdentity, SignedTrialUsesAbsoluteValue) {
  const SineSpectralCalculus sp(interval(65), VectorFieldFamily::euclidean(1));
  const GridFunction u = sine_sum(sp.domain_ptr(), {SineMode{{2, 1, 1}, 1.0}});
  const IdentityReport r = friedrichs_identity(sp, u, manufactured_phi(sp.domain_ptr()), 1);
  ASSERT_FALSE(r.notices.empty());
  EXPECT_NE(r.notices.front().find("|u|"), std::string::npos);
}

TEST(FriedrichsIdentity, RejectsOrdersOutsideRange) {
  const FiniteDifferenceCalculus fd(interval(65), VectorFieldFamily::euclidean(1));
  const GridFunction u = friedrichs_trial(fd.domain_ptr());
  const GridFunction phi = manufactured_phi(fd.domain_ptr());
  EXPECT_THROW(friedrichs_identity(fd, u, phi, 0), InvalidInput);
  EXPECT_THROW(friedrichs_identity(fd, u, phi, 11), InvalidInput);
}

TEST(FriedrichsIdentity, HeisenbergSquaresNonnegative) {
  const FiniteDifferenceCalculus fd(build_box_domain({-1, -1, -1}, {1, 1, 1}, {17, 17, 17}), VectorFieldFamily::heisenberg());
  const IdentityReport r = friedrichs_identity(fd, friedrichs_trial(fd.domain_ptr()), manufactured_phi(fd.domain_ptr()), 2);
  EXPECT_GE(r.min_square(), -1e-12);
  EXPECT_EQ(r.family, "heisenberg");
}

TEST(FriedrichsRemainder, OrderOneEqualityCase) {
  const SineSpectralCalculus sp(interval(65), VectorFieldFamily::euclidean(1));
  const EigenPair eig = ground_state(sp);
  const RemainderReport rr = friedrichs_remainder(sp, eig.eigenfunction, eig, 1);
  EXPECT_LE(std::abs(rr.remainder), 1e-6 * rr.equality_scale);
  EXPECT_FALSE(rr.negative_gap);
}

TEST(FriedrichsRemainder, SignCaveat) {
  const FiniteDifferenceCalculus fd(interval(257), VectorFieldFamily::euclidean(1));
  const EigenPair eig = ground_state(fd);
  const GridFunction u = friedrichs_trial(fd.domain_ptr());
  const RemainderReport r2 = friedrichs_remainder(fd, u, eig, 2);
  EXPECT_NEAR(r2.gap, kPi * kPi - 4.0, 1e-3);
  EXPECT_FALSE(r2.negative_gap);
  EXPECT_LE(r2.relative_balance, 1e-4);
  const RemainderReport r3 = friedrichs_remainder(fd, u, eig, 3);
  EXPECT_NEAR(r3.gap, kPi * kPi - 68.0, 1e-3);
  EXPECT_TRUE(r3.negative_gap);
  EXPECT_LE(r3.relative_balance, 1e-4);
  EXPECT_FALSE(r3.notices.empty());
}

TEST(ManufacturedPhi, PositiveOnEveryDimension) {
  for (int dim = 1; dim <= 3; ++dim) {
    const std::vector<double> lo(dim, -1.0), hi(dim, 1.0);
    const std::vector<int> pts(dim, 9);
    const GridFunction phi = manufactured_phi(build_box_domain(lo, hi, pts));
    EXPECT_GT(phi.values.minCoeff(), 0.0);
  }
}

}  // namespace
