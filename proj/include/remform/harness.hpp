#pragma once

/// \file harness.hpp
/// Runs one experiment configuration: builds the refinement ladder, evaluates the selected
/// identity or solver on every level, checks the theorem's invariants and emits a JSON report
/// plus CSV tables.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "remform/calculus.hpp"
#include "remform/config.hpp"
#include "remform/eigensolver.hpp"
#include "remform/errors.hpp"
#include "remform/friedrichs.hpp"
#include "remform/report_io.hpp"
#include "remform/steklov.hpp"
#include "remform/trial_functions.hpp"
#include "remform/vector_fields.hpp"

namespace remform {

inline constexpr int kExitPass = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitInvalid = 2;

/// Honors REMFORM_THREADS (positive integer) for the OpenMP node loops.
inline void apply_thread_env() {
#ifdef _OPENMP
  if (const char* s = std::getenv("REMFORM_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) omp_set_num_threads(n);
  }
#endif
}

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Evaluation {
  Json report;
  std::vector<Assertion> assertions;
  std::vector<IdentityReport> level0_identity;  ///< pointwise report of the coarsest level, if any
  GridFunction level0_phi;
  std::string convergence_csv;
  std::string sigma_csv;
  bool passed() const {
    for (const auto& a : assertions)
      if (!a.passed) return false;
    return true;
  }
};

inline VectorFieldFamily make_family(const ExperimentConfig& c, const DomainPtr& d) {
  if (c.family == "heisenberg") return VectorFieldFamily::heisenberg();
  if (c.family == "custom") return load_coefficient_table(c.coefficients, d);
  return VectorFieldFamily::euclidean(d->dim());
}

/// Exact λ₁ of −Δ on an unmasked box: Σ (π/L_a)².
inline double analytic_box_eigenvalue(const GridDomain& d) {
  double s = 0.0;
  for (int a = 0; a < d.dim(); ++a) {
    const double k = std::numbers::pi / (d.upper(a) - d.lower(a));
    s += k * k;
  }
  return s;
}

namespace detail {

class AssertionLog {
 public:
  explicit AssertionLog(std::vector<Assertion>& out) : out_(out) {}
  void check(const std::string& name, bool ok, const std::string& detail) { out_.push_back({name, ok, detail}); }

 private:
  std::vector<Assertion>& out_;
};

inline std::string fmt(double v) { return format_double(v); }

inline std::string level_tag(int level) { return "level " + std::to_string(level) + ": "; }

inline Json config_echo(const ExperimentConfig& c) {
  Json j = Json::object();
  for (const auto& [k, v] : c.raw) j[k] = v;
  return j;
}

template <Calculus B>
EigenPair obtain_eigenpair(const ExperimentConfig& c, const B& b) {
  if (c.phi == PhiSource::file) return make_eigenpair(b, c.phi_lambda, read_grid_csv(c.phi_file, b.domain_ptr()));
  return ground_state(b, c.tol.eigen, c.max_iter);
}

inline Bump configured_bump(const ExperimentConfig& c, const GridDomain& d) {
  const bool friedrichs = c.theorem == Theorem::friedrichs;
  Bump b = centred_bump(d, c.bump_exponent > 0 ? c.bump_exponent : (friedrichs ? 4 : 12));
  const double frac = c.bump_radius > 0.0 ? c.bump_radius : (friedrichs ? 0.425 : 0.3);
  for (int a = 0; a < d.dim(); ++a) b.radius[a] = frac * (d.upper(a) - d.lower(a));
  return b;
}

template <Calculus B>
GridFunction make_trial(const ExperimentConfig& c, const B& b, const GridFunction* phi, int collar) {
  TrialKind kind = c.trial;
  if (kind == TrialKind::automatic) kind = b.requires_collar() ? TrialKind::bump : TrialKind::sine;
  const DomainPtr& d = b.domain_ptr();
  switch (kind) {
    case TrialKind::sine: {
      TrialRng rng(c.seed);
      return sine_sum(d, random_sine_modes(d->dim(), rng, c.modes));
    }
    case TrialKind::ground:
    case TrialKind::ground_perturbed: {
      if (!phi) throw InvalidInput("trial = ground needs an eigenfunction");
      GridFunction u = *phi;
      if (kind == TrialKind::ground_perturbed) u.values += c.perturbation * sine_sum(d, {SineMode{{2, 1, 1}, 1.0}}).values;
      return u;
    }
    default: return collared_bump(d, configured_bump(c, *d), collar);
  }
}

inline void flip_divergence(IdentityReport& r, double sign) {
  if (sign == 1.0) return;
  for (auto& t : r.rhs_terms)
    if (t.kind == "divergence") t.values.values *= sign;
}

inline int required_collar(const ExperimentConfig& c) {
  switch (c.theorem) {
    case Theorem::steklov_even: return 2 * (c.m + 1);
    case Theorem::steklov_odd: return 2 * c.m + 1;
    default: return 1;
  }
}

/// Observed orders log2(r_{l−1}/r_l); all null unless at least three levels exist.
inline Json convergence_table(const std::vector<double>& h, const std::vector<double>& res, std::string& csv,
                              std::vector<double>& orders) {
  Json rows = Json::array();
  csv = "h,residual_norm,observed_order\n";
  const bool report = res.size() >= 3;
  for (std::size_t l = 0; l < res.size(); ++l) {
    double order = std::numeric_limits<double>::quiet_NaN();
    if (report && l > 0 && res[l] > 0.0 && res[l - 1] > 0.0) order = std::log2(res[l - 1] / res[l]);
    if (report && l > 0) orders.push_back(order);
    rows.push_back(Json{{"h", num(h[l])}, {"residual_norm", num(res[l])}, {"observed_order", num(order)}});
    csv += fmt(h[l]) + "," + fmt(res[l]) + "," + (std::isfinite(order) ? fmt(order) : std::string()) + "\n";
  }
  return rows;
}

inline void check_orders(AssertionLog& log, const ExperimentConfig& c, const std::vector<double>& orders,
                         const char* what) {
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double o = orders[i];
    log.check(std::string(what) + " order " + std::to_string(i) + "→" + std::to_string(i + 1),
              std::isfinite(o) && o >= c.tol.order_min && o <= c.tol.order_max,
              "observed " + fmt(o) + ", expected [" + fmt(c.tol.order_min) + ", " + fmt(c.tol.order_max) + "]");
  }
}

template <class F>
void with_backend(const ExperimentConfig& c, const DomainPtr& d, F&& f) {
  VectorFieldFamily fam = make_family(c, d);
  if (c.backend == BackendKind::spectral) {
    const SineSpectralCalculus sp(d, fam);
    f(sp);
  } else {
    const FiniteDifferenceCalculus fd(d, std::move(fam));
    f(fd);
  }
}

template <Calculus B>
void common_identity_checks(AssertionLog& log, const ExperimentConfig& c, const B& b, int level,
                            const IdentityReport& r, const RemainderReport& rr) {
  const std::string tag = level_tag(level);
  log.check(tag + "pointwise squares nonnegative", r.min_square() >= -c.tol.nonnegativity,
            "min square term " + fmt(r.min_square()));
  log.check(tag + "integrated squares nonnegative", rr.min_remainder_term() >= -c.tol.nonnegativity,
            "min integrated square " + fmt(rr.min_remainder_term()));
  if (!b.requires_collar())
    log.check(tag + "relative residual", r.relative_residual <= c.tol.residual,
              fmt(r.relative_residual) + " vs tolerance " + fmt(c.tol.residual));
  if (b.fields().divergence_free())
    log.check(tag + "divergence cancellation", std::abs(rr.divergence_total) <= c.tol.divergence * rr.scale,
              "|∫div| = " + fmt(std::abs(rr.divergence_total)) + ", scale " + fmt(rr.scale));
}

inline void evaluate_eigensolve(const ExperimentConfig& c, Evaluation& ev, AssertionLog& log) {
  Json levels = Json::array();
  std::vector<double> lambdas;
  double analytic = std::numeric_limits<double>::quiet_NaN();
  for (int l = 0; l < c.refinements; ++l) {
    const DomainPtr d = build_domain(c.domain, l);
    with_backend(c, d, [&](const auto& b) {
      const EigenPair e = ground_state(b, c.tol.eigen, c.max_iter);
      Json j = to_json(e);
      if (c.family == "euclidean" && d->is_box()) {
        analytic = analytic_box_eigenvalue(*d);
        j["analytic_eigenvalue"] = num(analytic);
        j["relative_error"] = num(std::abs(e.eigenvalue - analytic) / analytic);
      }
      const std::string tag = level_tag(l);
      log.check(tag + "eigen residual", e.relative_residual <= c.tol.eigen,
                "relative residual " + fmt(e.relative_residual));
      log.check(tag + "positivity", e.positivity_margin > 0.0, "margin " + fmt(e.positivity_margin));
      const double norm_err = j["normalization_error"].is_null() ? 1.0 : j["normalization_error"].get<double>();
      log.check(tag + "normalization", norm_err <= 1e-10, "|∫φ² − 1| = " + fmt(norm_err));
      lambdas.push_back(e.eigenvalue);
      if (l == 0) ev.level0_phi = e.eigenfunction;
      levels.push_back(std::move(j));
    });
  }
  ev.report["levels"] = std::move(levels);
  ev.convergence_csv = "level,eigenvalue\n";
  for (std::size_t l = 0; l < lambdas.size(); ++l) ev.convergence_csv += std::to_string(l) + "," + fmt(lambdas[l]) + "\n";
  if (lambdas.size() >= 3 && c.backend == BackendKind::finite_difference) {
    std::vector<double> orders;
    for (std::size_t l = 2; l < lambdas.size(); ++l)
      orders.push_back(std::log2((lambdas[l - 2] - lambdas[l - 1]) / (lambdas[l - 1] - lambdas[l])));
    Json jo = Json::array();
    for (double o : orders) jo.push_back(num(o));
    ev.report["richardson_orders"] = std::move(jo);
    check_orders(log, c, orders, "Richardson");
  }
}

inline void evaluate_steklov(const ExperimentConfig& c, Evaluation& ev, AssertionLog& log) {
  Json levels = Json::array();
  std::vector<double> hs, res;
  for (int l = 0; l < c.refinements; ++l) {
    const DomainPtr d = build_domain(c.domain, l);
    with_backend(c, d, [&](const auto& b) {
      const EigenPair eig = obtain_eigenpair(c, b);
      const GridFunction u = make_trial(c, b, &eig.eigenfunction, required_collar(c));
      IdentityReport r = c.theorem == Theorem::steklov_base  ? base_identity(b, u, eig)
                         : c.theorem == Theorem::steklov_even ? even_identity(b, u, eig, c.m)
                                                              : odd_identity(b, u, eig, c.m);
      if (c.divergence_sign != 1.0) {
        flip_divergence(r, c.divergence_sign);
        finalize(r, b);
      }
      const RemainderReport rr = integrated_remainder(b, u, eig, r);
      common_identity_checks(log, c, b, l, r, rr);
      const std::string tag = level_tag(l);
      if (!b.requires_collar())
        log.check(tag + "integrated balance", rr.relative_balance <= c.tol.residual,
                  "relative balance " + fmt(rr.relative_balance));
      if (c.trial == TrialKind::ground)
        log.check(tag + "equality case", std::abs(rr.normalized_remainder) <= c.tol.equality,
                  "normalized remainder " + fmt(rr.normalized_remainder));
      if (c.trial == TrialKind::ground_perturbed)
        log.check(tag + "strict remainder", rr.remainder > 0.0 && rr.remainder >= 1e-3 * rr.lhs_integral,
                  "remainder " + fmt(rr.remainder) + ", lhs " + fmt(rr.lhs_integral));
      levels.push_back(Json{{"h", num(d->max_spacing())},
                            {"points", refined_points(c.domain.points, l)},
                            {"eigen", to_json(eig)},
                            {"identity", to_json(r, b.weights())},
                            {"remainder", to_json(rr)}});
      hs.push_back(d->max_spacing());
      res.push_back(r.residual_norm);
      if (l == 0) ev.level0_identity.push_back(std::move(r));
    });
  }
  ev.report["levels"] = std::move(levels);
  std::vector<double> orders;
  ev.report["convergence"] = convergence_table(hs, res, ev.convergence_csv, orders);
  if (c.backend == BackendKind::finite_difference) check_orders(log, c, orders, "residual");
}

inline void evaluate_friedrichs(const ExperimentConfig& c, Evaluation& ev, AssertionLog& log) {
  Json levels = Json::array();
  std::vector<double> hs, res;
  for (int l = 0; l < c.refinements; ++l) {
    const DomainPtr d = build_domain(c.domain, l);
    with_backend(c, d, [&](const auto& b) {
      std::optional<EigenPair> eig;
      GridFunction phi;
      switch (c.phi) {
        case PhiSource::eigen: eig = ground_state(b, c.tol.eigen, c.max_iter); phi = eig->eigenfunction; break;
        case PhiSource::manufactured: phi = manufactured_phi(d); break;
        case PhiSource::file: phi = read_grid_csv(c.phi_file, d); break;
      }
      const GridFunction u = make_trial(c, b, eig ? &eig->eigenfunction : nullptr, 1);
      IdentityReport r = friedrichs_identity(b, u, phi, c.m);
      if (c.divergence_sign != 1.0) {
        flip_divergence(r, c.divergence_sign);
        finalize(r, b);
      }
      Json lj{{"h", num(d->max_spacing())}, {"points", refined_points(c.domain.points, l)}};
      RemainderReport rr;
      if (eig) {
        rr = friedrichs_remainder(b, u, *eig, r);
        lj["eigen"] = to_json(*eig);
      } else {
        detail::integrate_terms(rr, r, b);
        rr.lhs_integral = b.integrate(r.lhs);
        rr.scale = std::abs(rr.lhs_integral);
        for (const auto& t : rr.remainder_terms) rr.scale = std::max(rr.scale, std::abs(t.value));
      }
      common_identity_checks(log, c, b, l, r, rr);
      if (eig && l + 1 == c.refinements)
        log.check(level_tag(l) + "integrated balance", rr.relative_balance <= c.tol.balance,
                  "relative balance " + fmt(rr.relative_balance) + (rr.negative_gap ? " (negative gap)" : ""));
      lj["identity"] = to_json(r, b.weights());
      lj["remainder"] = to_json(rr);
      levels.push_back(std::move(lj));
      hs.push_back(d->max_spacing());
      res.push_back(r.residual_norm);
      if (l == 0) ev.level0_identity.push_back(std::move(r));
    });
  }
  ev.report["levels"] = std::move(levels);
  std::vector<double> orders;
  ev.report["convergence"] = convergence_table(hs, res, ev.convergence_csv, orders);
  if (c.backend == BackendKind::finite_difference) check_orders(log, c, orders, "residual");
}

inline void evaluate_sigma(const ExperimentConfig& c, Evaluation& ev, AssertionLog& log) {
  const auto rows = sigma_asymptotics(c.max_m);
  Json jr = Json::array();
  jr.push_back(Json{{"m", 1}, {"p", 2}, {"log_sigma", nullptr}, {"exact_sigma", exact_sigma(1)}});
  for (const auto& r : rows) jr.push_back(to_json(r));
  ev.report["rows"] = std::move(jr);
  std::ostringstream os;
  write_sigma_csv(os, rows);
  ev.sigma_csv = os.str();

  bool bounds = true, exact = true, monotone = true;
  std::string first_bad;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!r.within_bounds) {
      bounds = false;
      if (first_bad.empty()) first_bad = "m = " + std::to_string(r.m);
    }
    if (r.exact && r.m <= 5 && std::llround(std::exp(r.log_sigma)) != static_cast<long long>(*r.exact)) exact = false;
    if (r.m >= 3 && (r.root > 2.0 || (i > 0 && r.root < rows[i - 1].root))) monotone = false;
  }
  log.check("sandwich bounds", bounds, bounds ? "all rows inside" : "first violation at " + first_bad);
  log.check("log-domain σ matches the integer recursion", exact, "m ≤ 5");
  log.check("σ_m^{1/p_m} nondecreasing and ≤ 2 for m ≥ 3", monotone, "table property");
}

inline void evaluate_constant(const ExperimentConfig& c, Evaluation& ev, AssertionLog& log) {
  Json levels = Json::array();
  for (int l = 0; l < c.refinements; ++l) {
    const DomainPtr d = build_domain(c.domain, l);
    with_backend(c, d, [&](const auto& b) {
      const EigenPair eig = obtain_eigenpair(c, b);
      const ConstantCheckReport cc = steklov_constant_check(b, eig, c.trials, c.seed, c.tol.constant);
      log.check(level_tag(l) + "no trial exceeds λ^{-1/2}", cc.violations == 0,
                "max ratio " + fmt(cc.max_ratio) + ", bound " + fmt(cc.bound));
      log.check(level_tag(l) + "ground state attains λ^{-1/2}", cc.ground_gap <= c.tol.constant,
                "gap " + fmt(cc.ground_gap));
      levels.push_back(Json{{"h", num(d->max_spacing())}, {"eigen", to_json(eig)}, {"check", to_json(cc)}});
    });
  }
  ev.report["levels"] = std::move(levels);
}

}  // namespace detail

/// Evaluates a validated config without touching the filesystem.
inline Evaluation evaluate(ExperimentConfig c) {
  validate(c);
  Evaluation ev;
  detail::AssertionLog log(ev.assertions);
  ev.report["theorem"] = theorem_name(c.theorem);
  ev.report["backend"] = backend_name(c.backend);
  ev.report["family"] = c.family;
  ev.report["m"] = c.m;
  ev.report["config"] = detail::config_echo(c);
  switch (c.theorem) {
    case Theorem::eigensolve: detail::evaluate_eigensolve(c, ev, log); break;
    case Theorem::steklov_base:
    case Theorem::steklov_even:
    case Theorem::steklov_odd: detail::evaluate_steklov(c, ev, log); break;
    case Theorem::friedrichs: detail::evaluate_friedrichs(c, ev, log); break;
    case Theorem::sigma_table: detail::evaluate_sigma(c, ev, log); break;
    case Theorem::constant_check: detail::evaluate_constant(c, ev, log); break;
  }
  Json as = Json::array();
  for (const auto& a : ev.assertions) as.push_back(Json{{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  ev.report["assertions"] = std::move(as);
  ev.report["passed"] = ev.passed();
  return ev;
}

inline Json error_json(const std::string& kind, const std::string& message) {
  return Json{{"error", Json{{"kind", kind}, {"message", message}}}};
}

/// Runs a config and writes report.json (or error.json) and CSV tables into `out_dir`.
/// Returns 0 when every assertion passes, 1 on an assertion or solver failure, 2 on invalid input.
inline int run(const ExperimentConfig& c, const std::string& out_dir, bool quiet = false,
               std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  auto emit_error = [&](const char* kind, const std::string& msg, int code) {
    try {
      if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_json_file((fs::path(out_dir) / "error.json").string(), error_json(kind, msg));
      }
    } catch (const std::exception&) {
    }
    std::cerr << "error (" << kind << "): " << msg << '\n';
    return code;
  };
  try {
    Evaluation ev = evaluate(c);
    if (!out_dir.empty()) {
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      write_json_file((dir / "report.json").string(), ev.report);
      if (!ev.convergence_csv.empty()) std::ofstream(dir / "convergence.csv") << ev.convergence_csv;
      if (!ev.sigma_csv.empty()) std::ofstream(dir / "sigma_table.csv") << ev.sigma_csv;
      if (!ev.level0_identity.empty()) {
        std::ofstream f(dir / "terms.csv");
        write_terms_csv(f, ev.level0_identity.front());
      }
      if (ev.level0_phi.domain) {
        std::ofstream f(dir / "phi.csv");
        write_grid_csv(f, ev.level0_phi, "phi");
      }
    }
    if (!quiet)
      for (const auto& a : ev.assertions) log << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
    return ev.passed() ? kExitPass : kExitAssertion;
  } catch (const NotConverged& e) {
    return emit_error(e.kind(), e.what(), kExitAssertion);
  } catch (const PositivityFailure& e) {
    return emit_error(e.kind(), e.what(), kExitAssertion);
  } catch (const Error& e) {
    return emit_error(e.kind(), e.what(), kExitInvalid);
  } catch (const std::exception& e) {
    return emit_error("io", e.what(), kExitInvalid);
  }
}

}  // namespace remform
