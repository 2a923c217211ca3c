// Acceptance suite: one PASS/FAIL line per criterion. `acceptance` runs all of them,
// `acceptance --criterion N` runs one; the exit status is nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "remform/calculus.hpp"
#include "remform/eigensolver.hpp"
#include "remform/friedrichs.hpp"
#include "remform/harness.hpp"
#include "remform/regression.hpp"
#include "remform/steklov.hpp"
#include "remform/trial_functions.hpp"

using namespace remform;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "[x] ") << what;
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

DomainPtr interval(int n) { return build_box_domain({0.0}, {1.0}, {n}); }
DomainPtr heisenberg_box(int n) { return build_box_domain({-1, -1, -1}, {1, 1, 1}, {n, n, n}); }

FiniteDifferenceCalculus fd_on(const DomainPtr& d, VectorFieldFamily fam) { return {d, std::move(fam)}; }
FiniteDifferenceCalculus fd_1d(int n) { return fd_on(interval(n), VectorFieldFamily::euclidean(1)); }
SineSpectralCalculus spectral_1d(int n) { return {interval(n), VectorFieldFamily::euclidean(1)}; }

GridFunction five_mode_trial(const DomainPtr& d, std::uint64_t seed = 1) {
  TrialRng rng(seed);
  return sine_sum(d, random_sine_modes(d->dim(), rng, 5));
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

IdentityReport steklov_report(const auto& b, const GridFunction& u, const EigenPair& e, int m, bool even) {
  return even ? even_identity(b, u, e, m) : odd_identity(b, u, e, m);
}

std::string label(int m, bool even) { return std::string(even ? "even" : "odd") + " m=" + std::to_string(m); }

void criterion1(Outcome& o) {
  const auto t0 = Clock::now();
  const std::uint64_t s1 = exact_sigma(1), s2 = exact_sigma(2), s3 = exact_sigma(3);
  const double dt = seconds_since(t0);
  o.require(s1 == 0, "sigma(1) = " + std::to_string(s1));
  o.require(s2 == 4, "sigma(2) = " + std::to_string(s2));
  o.require(s3 == 68, "sigma(3) = " + std::to_string(s3));
  o.require(dt < 1e-3, "runtime " + g(dt * 1e3) + " ms");
}

void criterion2(Outcome& o) {
  const auto t0 = Clock::now();
  const auto rows = sigma_asymptotics(60);
  const double dt = seconds_since(t0);
  bool bounds = true;
  for (const auto& r : rows) bounds = bounds && r.within_bounds;
  o.require(bounds, "sandwich bounds hold for m in [2, 60]");
  int first_ok = -1;
  double worst = 0.0;
  for (const auto& r : rows)
    if (r.m >= 12) {
      worst = std::max(worst, r.distance_to_two);
      if (first_ok < 0 && r.distance_to_two <= 1e-4) first_ok = r.m;
    }
  o.require(worst <= 1e-4, "max_{m>=12} |root - 2| = " + g(worst) + " (m=12: " + g(rows[10].distance_to_two) +
                               ", first m with gap <= 1e-4: " + std::to_string(first_ok) + ")");
  o.require(dt < 1e-2, "runtime " + g(dt * 1e3) + " ms");
}

void criterion3(Outcome& o) {
  const auto t0 = Clock::now();
  std::vector<double> lam;
  for (int n : {129, 257, 513}) lam.push_back(ground_state(fd_1d(n)).eigenvalue);
  const double pi2 = kPi * kPi;
  const double rel1 = std::abs(lam[2] - pi2) / pi2;
  o.require(rel1 <= 1e-3, "interval 513: rel err " + g(rel1));
  const auto sq = fd_on(build_box_domain({0.0, 0.0}, {1.0, 1.0}, {129, 129}), VectorFieldFamily::euclidean(2));
  const double l2 = ground_state(sq).eigenvalue;
  const double rel2 = std::abs(l2 - 2 * pi2) / (2 * pi2);
  o.require(rel2 <= 2e-3, "square 129^2: rel err " + g(rel2));
  const double p = order(lam[0] - lam[1], lam[1] - lam[2]);
  o.require(std::abs(p - 2.0) <= 0.3, "Richardson order " + g(p));
  const double dt = seconds_since(t0);
  o.require(dt < 30.0, "runtime " + g(dt) + " s");
}

void criterion4(Outcome& o) {
  const auto t0 = Clock::now();
  const std::vector<std::pair<int, bool>> cases{{1, true}, {2, true}, {0, false}, {1, false}};
  {
    const auto sp = spectral_1d(65);
    const EigenPair e = ground_state(sp);
    const GridFunction u = five_mode_trial(sp.domain_ptr());
    for (auto [m, even] : cases) {
      const IdentityReport r = steklov_report(sp, u, e, m, even);
      o.require(r.relative_residual <= 1e-8, "spectral " + label(m, even) + " rel residual " + g(r.relative_residual));
    }
  }
  std::vector<std::vector<double>> res(cases.size());
  for (int n : {129, 257, 513}) {
    const auto fd = fd_1d(n);
    const EigenPair e = ground_state(fd);
    const GridFunction u = collared_bump(fd.domain_ptr(), centred_bump(fd.domain(), 12), 6);
    for (std::size_t i = 0; i < cases.size(); ++i)
      res[i].push_back(steklov_report(fd, u, e, cases[i].first, cases[i].second).residual_norm);
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const double p1 = order(res[i][0], res[i][1]), p2 = order(res[i][1], res[i][2]);
    o.require(std::abs(p1 - 2.0) <= 0.3 && std::abs(p2 - 2.0) <= 0.3,
              "fd " + label(cases[i].first, cases[i].second) + " orders " + g(p1) + ", " + g(p2));
  }
  const double dt = seconds_since(t0);
  o.require(dt < 60.0, "runtime " + g(dt) + " s");
}

void criterion5(Outcome& o) {
  const auto sp = spectral_1d(65);
  const EigenPair e = ground_state(sp);
  const GridFunction& u1 = e.eigenfunction;
  GridFunction up = u1;
  up.values += 0.1 * GridFunction::sample_interior(sp.domain_ptr(), [](const Point& p) { return std::sin(2 * kPi * p[0]); }).values;
  for (auto [m, even] : std::vector<std::pair<int, bool>>{{1, true}, {0, false}, {1, false}}) {
    const Parity par = even ? Parity::even : Parity::odd;
    const RemainderReport eq = integrated_remainder(sp, u1, e, m, par);
    const double rel = std::abs(eq.remainder) / eq.equality_scale;
    o.require(rel <= 1e-6, label(m, even) + " u=u1 remainder/scale " + g(rel));
    const RemainderReport pr = integrated_remainder(sp, up, e, m, par);
    o.require(pr.remainder > 0.0 && pr.remainder >= 1e-3 * std::abs(pr.lhs_integral),
              label(m, even) + " perturbed remainder/lhs " + g(pr.remainder / pr.lhs_integral));
  }
}

Json golden() { return load_golden(REMFORM_GOLDEN_PATH); }

// Runs every regression fixture and collects the assertions whose name contains `needle`.
void scan_fixture_assertions(Outcome& o, const std::string& needle, int& seen) {
  const Json fixtures = golden();
  for (const auto& f : fixtures.at("fixtures")) {
    const Evaluation ev = evaluate(detail::fixture_config(f.at("config")));
    for (const auto& a : ev.assertions)
      if (a.name.find(needle) != std::string::npos) {
        ++seen;
        if (!a.passed) o.require(false, f.at("name").get<std::string>() + " " + a.name + ": " + a.detail);
      }
  }
}

void criterion6(Outcome& o) {
  int seen = 0;
  scan_fixture_assertions(o, "squares nonnegative", seen);
  o.require(seen > 0, std::to_string(seen) + " nonnegativity checks over all fixtures (floor -1e-12)");
}

// |∫div| / scale on three refinements; the order is asserted only above the roundoff floor.
template <class MakeLevel>
void divergence_ladder(Outcome& o, const std::string& name, const std::vector<int>& points, MakeLevel&& level) {
  std::vector<double> rel;
  for (int n : points) {
    const RemainderReport rr = level(n);
    rel.push_back(std::abs(rr.divergence_total) / rr.scale);
  }
  bool ok = true;
  std::string orders;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    ok = ok && rel[i] <= 1e-4;
    if (i > 0 && rel[i - 1] > 1e-12) {
      const double p = order(rel[i - 1], rel[i]);
      ok = ok && p >= 1.7;
      orders += " order " + g(p);
    }
  }
  o.require(ok, name + " |int div|/scale " + g(rel.front()) + " -> " + g(rel.back()) +
                    (orders.empty() ? " (at roundoff)" : orders));
}

void criterion7(Outcome& o) {
  int seen = 0;
  scan_fixture_assertions(o, "divergence cancellation", seen);
  o.require(seen > 0, std::to_string(seen) + " fixture divergence checks");

  divergence_ladder(o, "euclidean 1D even m=1", {129, 257, 513}, [](int n) {
    const auto fd = fd_1d(n);
    const EigenPair e = ground_state(fd);
    return integrated_remainder(fd, collared_bump(fd.domain_ptr(), centred_bump(fd.domain(), 12), 4), e, 1,
                                Parity::even);
  });
  divergence_ladder(o, "euclidean 2D odd m=0", {33, 65, 129}, [](int n) {
    const auto fd = fd_on(build_box_domain({0.0, 0.0}, {1.0, 1.0}, {n, n}), VectorFieldFamily::euclidean(2));
    const EigenPair e = ground_state(fd);
    return integrated_remainder(fd, collared_bump(fd.domain_ptr(), centred_bump(fd.domain(), 12), 1), e, 0,
                                Parity::odd);
  });
  divergence_ladder(o, "heisenberg base", {9, 17, 25}, [](int n) {
    const auto fd = fd_on(heisenberg_box(n), VectorFieldFamily::heisenberg());
    const EigenPair e = ground_state(fd);
    return integrated_remainder(fd, collared_bump(fd.domain_ptr(), centred_bump(fd.domain(), 12), 1), e, 0,
                                Parity::odd);
  });
}

Bump friedrichs_bump(const GridDomain& d) {
  Bump b = centred_bump(d, 4);
  for (int a = 0; a < d.dim(); ++a) b.radius[a] = 0.425 * (d.upper(a) - d.lower(a));
  return b;
}

void criterion8(Outcome& o) {
  const auto t0 = Clock::now();
  std::vector<double> res;
  for (int n : {17, 33, 65}) {
    const auto fd = fd_on(heisenberg_box(n), VectorFieldFamily::heisenberg());
    const GridFunction phi = manufactured_phi(fd.domain_ptr());
    const GridFunction u = collared_bump(fd.domain_ptr(), friedrichs_bump(fd.domain()), 1);
    res.push_back(friedrichs_identity(fd, u, phi, 2).residual_norm);
  }
  const double p1 = order(res[0], res[1]), p2 = order(res[1], res[2]);
  o.require(std::abs(p1 - 2.0) <= 0.4 && std::abs(p2 - 2.0) <= 0.4,
            "residual " + g(res[0]) + ", " + g(res[1]) + ", " + g(res[2]) + "; orders " + g(p1) + ", " + g(p2));
  const double dt = seconds_since(t0);
  o.require(dt < 300.0, "runtime " + g(dt) + " s");
}

void criterion9(Outcome& o) {
  const auto fd = fd_1d(257);
  const EigenPair e = ground_state(fd);
  const GridFunction u = collared_bump(fd.domain_ptr(), friedrichs_bump(fd.domain()), 1);
  const RemainderReport r2 = friedrichs_remainder(fd, u, e, 2);
  const RemainderReport r3 = friedrichs_remainder(fd, u, e, 3);
  o.require(!r2.negative_gap, "m=2 gap " + g(r2.gap) + (r2.negative_gap ? " flagged" : " unflagged"));
  o.require(r3.negative_gap, "m=3 gap " + g(r3.gap) + (r3.negative_gap ? " flagged" : " unflagged"));
  o.require(r2.relative_balance <= 1e-4, "m=2 balance " + g(r2.relative_balance));
  o.require(r3.relative_balance <= 1e-4, "m=3 balance " + g(r3.relative_balance));
}

void criterion10(Outcome& o) {
  const auto sp = spectral_1d(65);
  const EigenPair e = ground_state(sp);
  const TelescopingReport t = telescoping_check(sp, five_mode_trial(sp.domain_ptr()), e);
  o.require(t.max_discrepancy() <= 1e-12, "max relative discrepancy " + g(t.max_discrepancy()));
}

void criterion11(Outcome& o) {
  const auto sp = spectral_1d(65);
  const EigenPair e = ground_state(sp);
  const ConstantCheckReport c = steklov_constant_check(sp, e, 100, 1, 1e-3);
  o.require(c.max_ratio <= c.bound + 1e-3, "max ratio " + g(c.max_ratio) + " vs bound " + g(c.bound));
  o.require(c.ground_gap <= 1e-3, "u1 attains the bound within " + g(c.ground_gap));
}

const std::vector<std::pair<std::string, std::function<void(Outcome&)>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> c{
      {"sigma constants", criterion1},
      {"sigma asymptotics", criterion2},
      {"eigensolver accuracy", criterion3},
      {"Steklov identity residuals", criterion4},
      {"equality case", criterion5},
      {"nonnegativity", criterion6},
      {"divergence cancellation", criterion7},
      {"Friedrichs on Heisenberg fields", criterion8},
      {"Friedrichs sign caveat", criterion9},
      {"inductive telescoping", criterion10},
      {"Poincare constant sharpness", criterion11},
  };
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) selected.push_back(std::atoi(argv[++i]));
    else {
      std::cerr << "usage: acceptance [--criterion N]...\n";
      return 2;
    }
  }
  const int total = static_cast<int>(criteria().size());
  if (selected.empty())
    for (int n = 1; n <= total; ++n) selected.push_back(n);

  bool all = true;
  for (int n : selected) {
    if (n < 1 || n > total) {
      std::cerr << "no criterion " << n << '\n';
      return 2;
    }
    const auto& [name, fn] = criteria()[static_cast<std::size_t>(n - 1)];
    Outcome o;
    const auto t0 = Clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    all = all && o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << n << " (" << name << ", " << g(seconds_since(t0))
              << " s): " << o.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
