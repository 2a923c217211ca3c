// remform command-line driver.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "remform/config.hpp"
#include "remform/harness.hpp"
#include "remform/regression.hpp"

#ifndef REMFORM_GOLDEN_PATH
#define REMFORM_GOLDEN_PATH "tests/golden/regression.json"
#endif

namespace {

using namespace remform;

// Named domains accepted by --domain in place of a config file.
const std::map<std::string, std::string>& domain_presets() {
  static const std::map<std::string, std::string> p{
      {"interval", "axes = 1\nlower = 0\nupper = 1\npoints = 129\n"},
      {"square", "axes = 2\nlower = 0\nupper = 1\npoints = 65\n"},
      {"cube", "axes = 3\nlower = 0\nupper = 1\npoints = 17\n"},
      {"heisenberg-box", "axes = 3\nlower = -1\nupper = 1\npoints = 17\n"},
      {"disk", "axes = 2\nlower = -1\nupper = 1\npoints = 65\nmask = disk\ncenter = 0,0\nradius = 0.9\n"},
      {"annulus",
       "axes = 2\nlower = -1\nupper = 1\npoints = 65\nmask = annulus\ncenter = 0,0\ninner_radius = 0.4\n"
       "outer_radius = 0.9\n"},
  };
  return p;
}

struct Common {
  std::string out;
  bool quiet = false;
  std::string domain;
  std::string family;
  std::string backend;
  std::vector<std::string> sets;
  int refinements = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_domain = true) {
  sub->add_option("--out", c.out, "output directory for report.json and CSV tables");
  sub->add_flag("--quiet", c.quiet, "suppress per-assertion output");
  sub->add_option("--set", c.sets, "extra key=value config entries")->take_all();
  if (!with_domain) return;
  sub->add_option("--domain", c.domain, "domain config file or preset (interval, square, cube, heisenberg-box, disk, annulus)");
  sub->add_option("--family", c.family, "euclidean, heisenberg or custom");
  sub->add_option("--backend", c.backend, "fd or spectral");
  sub->add_option("--refinements", c.refinements, "number of grid levels");
}

void apply_common(ExperimentConfig& cfg, const Common& c) {
  if (!c.domain.empty()) {
    const auto it = domain_presets().find(c.domain);
    if (it != domain_presets().end()) apply_config_text(cfg, it->second);
    else apply_config_file(cfg, c.domain);
  }
  if (!c.family.empty()) set_config_value(cfg, "family", c.family);
  if (!c.backend.empty()) set_config_value(cfg, "backend", c.backend);
  if (c.refinements > 0) set_config_value(cfg, "refinements", std::to_string(c.refinements));
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + s + "'");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
}

int invalid(const std::string& out, const std::exception& e) {
  if (!out.empty()) {
    try {
      std::filesystem::create_directories(out);
      write_json_file((std::filesystem::path(out) / "error.json").string(), error_json("invalid_input", e.what()));
    } catch (const std::exception&) {
    }
  }
  std::cerr << "error (invalid_input): " << e.what() << '\n';
  return kExitInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();
  CLI::App app{"Numerical verification of remainder formulas for Poincare and Friedrichs inequalities"};
  app.require_subcommand(1);

  Common common;
  int m = 1;
  std::string parity = "even";
  std::string phi = "eigen";
  std::string phi_file;
  int max_m = 60;
  int trials = 100;
  std::uint64_t seed = 1;
  std::string config_path;
  std::string fixtures = REMFORM_GOLDEN_PATH;

  auto* eig = app.add_subcommand("eigensolve", "ground state of -L with Dirichlet conditions");
  add_common(eig, common);

  auto* stek = app.add_subcommand("verify-steklov", "pointwise and integrated Steklov-type identities");
  add_common(stek, common);
  stek->add_option("--m", m, "order (m >= 1 for even, m >= 0 for odd)");
  stek->add_option("--parity", parity, "even, odd or base")->check(CLI::IsMember({"even", "odd", "base"}));

  auto* sig = app.add_subcommand("sigma-table", "sigma_m table with asymptotic bounds");
  add_common(sig, common, false);
  sig->add_option("--max-m", max_m, "largest m (2..62)");

  auto* fr = app.add_subcommand("verify-friedrichs", "L^{2^m} Friedrichs representation");
  add_common(fr, common);
  fr->add_option("--m", m, "order (1..10)");
  fr->add_option("--phi", phi, "eigen, manufactured or file")->check(CLI::IsMember({"eigen", "manufactured", "file"}));
  fr->add_option("--phi-file", phi_file, "CSV with a phi column (with --phi file)");

  auto* cc = app.add_subcommand("constant-check", "sharpness of the L2 Poincare constant over seeded trials");
  add_common(cc, common);
  cc->add_option("--trials", trials, "number of random trial functions");
  cc->add_option("--seed", seed, "trial seed");

  auto* run_cmd = app.add_subcommand("run", "run a key = value config file");
  add_common(run_cmd, common);
  run_cmd->add_option("--config", config_path, "config file")->required();

  auto* reg = app.add_subcommand("regression", "run the golden fixture suite");
  reg->add_option("--fixtures", fixtures, "fixture JSON");
  reg->add_option("--out", common.out, "write summary.json here");
  reg->add_flag("--quiet", common.quiet, "only print the summary line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  if (reg->parsed()) {
    try {
      const RegressionSummary s = regression_suite(load_golden(fixtures), common.quiet ? nullptr : &std::cout);
      if (!common.out.empty()) {
        std::filesystem::create_directories(common.out);
        write_json_file((std::filesystem::path(common.out) / "summary.json").string(), to_json(s));
      }
      std::cout << s.passed << "/" << s.fixtures << " fixtures passed\n";
      return s.ok() ? kExitPass : kExitAssertion;
    } catch (const std::exception& e) {
      return invalid(common.out, e);
    }
  }

  ExperimentConfig cfg;
  try {
    if (eig->parsed()) {
      set_config_value(cfg, "theorem", "eigensolve");
    } else if (stek->parsed()) {
      set_config_value(cfg, "theorem", "steklov_" + parity);
      set_config_value(cfg, "m", std::to_string(m));
    } else if (sig->parsed()) {
      set_config_value(cfg, "theorem", "sigma_table");
      set_config_value(cfg, "max_m", std::to_string(max_m));
    } else if (fr->parsed()) {
      set_config_value(cfg, "theorem", "friedrichs");
      set_config_value(cfg, "m", std::to_string(m));
      set_config_value(cfg, "phi", phi);
      if (!phi_file.empty()) set_config_value(cfg, "phi_file", phi_file);
    } else if (cc->parsed()) {
      set_config_value(cfg, "theorem", "constant_check");
      set_config_value(cfg, "trials", std::to_string(trials));
      set_config_value(cfg, "seed", std::to_string(seed));
    } else if (run_cmd->parsed()) {
      apply_config_file(cfg, config_path);
    }
    apply_common(cfg, common);
  } catch (const std::exception& e) {
    return invalid(common.out, e);
  }
  return run(cfg, common.out, common.quiet);
}
