#pragma once
// Sweep configuration, per-frequency runs, exponent fits and report emission.

#include "dhs/presets.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhs {

/// Invalid or inconsistent configuration (exit code 2 in the command-line tool).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { asymptotics, scattering, roundtrip, oracle, einstein_constraints, einstein_energy, sobolev };
const char* mode_name(RunMode m);
RunMode parse_mode(const std::string& s);

struct SweepConfig {
  std::string preset = "wave";
  /// Preset parameters; missing keys take the preset defaults.
  nlohmann::json params = nlohmann::json::object();
  RunMode mode = RunMode::roundtrip;
  std::optional<double> T;
  /// Fixed rho0, or the preset default when empty ("auto").
  std::optional<double> rho0;
  double xi_min = 1.0;
  double xi_max = 1e5;
  int xi_count = 24;
  /// Explicit magnitudes override the log-spaced range.
  std::vector<double> magnitudes;
  std::vector<VectorXd> directions;
  std::optional<int> m_P;
  std::optional<int> m_H;
  double tol = 1e-11;
  std::uint64_t seed = 1;
  int jobs = 1;
  /// Data vector (u_A or U(T)); defaults to the first unit vector.
  std::optional<VectorXcd> data;
  /// Output times for the constraint, energy and Sobolev modes.
  std::vector<double> times;
  /// Sobolev mode: regularity s, margin delta and per-frequency weights (default 1).
  double sobolev_s = 1.0;
  double sobolev_delta = 0.2;
  std::vector<double> weights;
  /// Optional acceptance check on the main fitted slope.
  std::optional<double> expect_slope;
  double expect_tol = 0.05;
};

SweepConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SweepConfig& c);
/// Default configuration (and preset parameters) for a preset name.
SweepConfig default_config(const std::string& preset);
nlohmann::json all_defaults();

/// Bundle for the configured preset.
SystemBundle make_bundle(const SweepConfig& c);
/// Log-spaced or explicit magnitudes, strictly increasing.
std::vector<double> config_magnitudes(const SweepConfig& c);

/// One long-format report row.
struct ReportRow {
  std::string mode;
  double xi = 0.0;
  int direction = 0;
  double t = 0.0;
  std::string quantity;
  double value = 0.0;
  std::string status = "ok";
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct FitRow {
  std::string name;
  /// The estimate the slope is compared with.
  std::string compared_with;
  double slope = 0.0;
  double half_width = 0.0;
  double expected = 0.0;
  int points = 0;
  friend bool operator==(const FitRow&, const FitRow&) = default;
};

struct SweepReport {
  std::vector<ReportRow> rows;
  std::vector<FitRow> fits;
  std::map<std::string, double> constants;
  std::map<std::string, std::string> environment;
  bool violation = false;
  friend bool operator==(const SweepReport&, const SweepReport&) = default;
};

struct FitResult {
  double slope = 0.0;
  double half_width = 0.0;
  double intercept = 0.0;
};

/// Least-squares slope of log(value) against log(xi) with its standard error.
/// Needs at least 8 points and positive values.
FitResult fit_exponent(const std::vector<std::pair<double, double>>& points);

SweepReport run(const SweepConfig& c);

enum class EmitFormat { rows, structured };
/// Comma-separated rows with the fixed column order of `row_columns()`, or a JSON tree.
std::string emit(const SweepReport& r, EmitFormat f);
const std::vector<std::string>& row_columns();
std::vector<ReportRow> parse_rows(const std::string& text);
SweepReport parse_structured(const std::string& text);

/// Shortest decimal that parses back to the same double.
std::string shortest(double v);

}  // namespace dhs
