// Command-line front end. Exit codes: 0 ok, 1 acceptance violation,
// 2 configuration error, 3 numerical failure.

#include "dhs/cli_report.hpp"
#include "dhs/odeflow.hpp"
#include "dhs/quadrature.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

enum Exit { kOk = 0, kViolation = 1, kConfig = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::string out;
  std::string format = "rows";
  int jobs = 0;
  double tol = 0.0;
  long long seed = -1;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Configuration file (JSON)");
  sub->add_option("--out", c.out, "Output file (default: stdout)");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"rows", "structured"}));
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--tol", c.tol, "Integration tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "Seed for randomized data")->check(CLI::NonNegativeNumber);
}

dhs::SweepConfig load(const Common& c, const std::string& fallback_preset) {
  dhs::SweepConfig cfg;
  if (c.config.empty()) {
    cfg = dhs::default_config(fallback_preset);
  } else {
    std::ifstream in(c.config);
    if (!in) throw dhs::ConfigError("cannot open " + c.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
      throw dhs::ConfigError(c.config + ": " + e.what());
    }
    cfg = dhs::config_from_json(j);
  }
  if (c.jobs > 0) cfg.jobs = c.jobs;
  if (c.tol > 0) cfg.tol = c.tol;
  if (c.seed >= 0) cfg.seed = std::uint64_t(c.seed);
  return cfg;
}

void write(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(c.out);
  if (!os) throw dhs::ConfigError("cannot write " + c.out);
  os << text;
}

int report(const Common& c, const dhs::SweepReport& r) {
  write(c, dhs::emit(r, c.format == "structured" ? dhs::EmitFormat::structured : dhs::EmitFormat::rows));
  bool failed = false;
  for (const auto& row : r.rows)
    if (row.status != "ok") {
      std::cerr << "numerical failure at xi = " << row.xi << ": " << row.status << "\n";
      failed = true;
    }
  if (r.violation) return kViolation;
  return failed ? kNumerical : kOk;
}

int validate(const Common& c) {
  const auto cfg = load(c, "wave");
  const auto b = dhs::make_bundle(cfg);
  const auto v = dhs::validate_bundle(b);
  nlohmann::json j{{"preset", cfg.preset},
                   {"n", b.n},
                   {"ok", v.ok},
                   {"ellipticity_margin", v.ellipticity_margin},
                   {"C_tH", {v.C_tH_lower, v.C_tH_upper}},
                   {"C_Zc", {v.C_Zc_lower, v.C_Zc_upper}},
                   {"izone_constant", v.izone_constant},
                   {"zones_contained", v.zones_contained},
                   {"violations", v.violations}};
  write(c, j.dump(2) + "\n");
  return v.ok ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-wise renormalization of singular hyperbolic systems"};
  app.require_subcommand(1);
  Common common;

  auto* defaults = app.add_subcommand("defaults", "Print the default configuration of every preset");
  std::string preset;
  defaults->add_option("--preset", preset, "Only this preset");
  defaults->add_option("--out", common.out, "Output file (default: stdout)");

  auto* validate_cmd = app.add_subcommand("validate", "Build the preset bundle and check its hypotheses");
  add_common(validate_cmd, common);

  double xi_single = 1.0;
  auto* analyze = app.add_subcommand("analyze", "Asymptotic data at a single frequency");
  add_common(analyze, common);
  analyze->add_option("--xi", xi_single, "Frequency magnitude")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Frequency sweep in the configured mode");
  add_common(sweep, common);
  auto* scatter = app.add_subcommand("scatter", "Scattering from asymptotic data");
  add_common(scatter, common);
  auto* oracle = app.add_subcommand("oracle", "Model equation against the closed-form solution");
  add_common(oracle, common);
  bool energy = false;
  auto* einstein = app.add_subcommand("einstein", "Einstein-scalar constraint propagation or energy ratio");
  add_common(einstein, common);
  einstein->add_flag("--energy", energy, "Weighted energy ratio on the harmonic zone");
  auto* sobolev = app.add_subcommand("sobolev", "Discretized Sobolev convergence of the renormalized unknown");
  add_common(sobolev, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (defaults->parsed()) {
      const auto j = preset.empty() ? dhs::all_defaults() : dhs::config_to_json(dhs::default_config(preset));
      write(common, j.dump(2) + "\n");
      return kOk;
    }
    if (validate_cmd->parsed()) return validate(common);

    dhs::SweepConfig cfg;
    if (analyze->parsed()) {
      cfg = load(common, "wave");
      cfg.mode = dhs::RunMode::asymptotics;
      cfg.magnitudes = {xi_single};
    } else if (sweep->parsed()) {
      cfg = load(common, "wave");
    } else if (scatter->parsed()) {
      cfg = load(common, "wave");
      cfg.mode = dhs::RunMode::scattering;
    } else if (oracle->parsed()) {
      cfg = load(common, "model");
      cfg.mode = dhs::RunMode::oracle;
    } else if (einstein->parsed()) {
      cfg = load(common, "einstein");
      cfg.mode = energy ? dhs::RunMode::einstein_energy : dhs::RunMode::einstein_constraints;
    } else {
      cfg = load(common, "wave");
      cfg.mode = dhs::RunMode::sobolev;
    }
    return report(common, dhs::run(cfg));
  } catch (const dhs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}
