#include "dhs/cli_report.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dhs;

namespace {
std::vector<std::pair<double, double>> power_law(double p, double lo, double hi, int n, double noise = 0.0) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<std::pair<double, double>> pts;
  for (int k = 0; k < n; ++k) {
    const double x = lo * std::pow(hi / lo, double(k) / (n - 1));
    pts.emplace_back(x, 3.0 * std::pow(x, p) * (1.0 + noise * U(rng)));
  }
  return pts;
}
}  // namespace

TEST_CASE("fit_exponent recovers synthetic power laws") {
  const FitResult f = fit_exponent(power_law(2.0, 1.0, 1e3, 12));
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.half_width < 1e-3);
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
  CHECK(std::fabs(fit_exponent(power_law(0.0, 1.0, 1e3, 8)).slope) < 1e-12);
  for (double p : {-1.5, 0.5, 3.0}) CHECK(std::fabs(fit_exponent(power_law(p, 10.0, 1e4, 16, 0.05)).slope - p) < 0.01);
}

TEST_CASE("fit_exponent preconditions") {
  CHECK_THROWS_AS(fit_exponent(power_law(1.0, 1.0, 1e3, 7)), std::invalid_argument);
  auto pts = power_law(1.0, 1.0, 1e3, 9);
  pts[3].second = 0.0;
  CHECK_THROWS_AS(fit_exponent(pts), std::invalid_argument);
}

TEST_CASE("shortest decimal round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0}) {
    const std::string s = shortest(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(shortest(0.1) == "0.1");
}

TEST_CASE("rows emission") {
  SweepReport r;
  const std::string empty = emit(r, EmitFormat::rows);
  CHECK(empty == "mode,xi,direction,t,quantity,value,status\n");
  r.rows.push_back({"oracle", 10.0, 0, 1.0, "rel_error_phi", 1.25e-12, "ok"});
  const std::string one = emit(r, EmitFormat::rows);
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(parse_rows(one) == r.rows);
  r.rows.push_back({"oracle", 1.0 / 3.0, 1, 0.1, "failure", 0.0, "bad, really bad"});
  const auto back = parse_rows(emit(r, EmitFormat::rows));
  REQUIRE(back.size() == 2);
  CHECK(back[1].xi == 1.0 / 3.0);
  CHECK(back[1].status == "bad; really bad");
}

TEST_CASE("structured emission round trips") {
  SweepReport r;
  r.rows.push_back({"roundtrip", 3.0, 0, 1.0, "ratio", 0.7, "ok"});
  r.fits.push_back({"ratio", "bounded ratio", 0.01, 0.002, 0.0, 24});
  r.constants["C_ratio"] = 2.5;
  r.environment["compiler"] = "x";
  r.violation = true;
  CHECK(parse_structured(emit(r, EmitFormat::structured)) == r);
}

TEST_CASE("configuration round trip and validation") {
  for (const char* p : {"wave", "model", "kasner", "higher", "einstein"}) {
    const SweepConfig c = default_config(p);
    const SweepConfig d = config_from_json(config_to_json(c));
    CHECK(config_to_json(d) == config_to_json(c));
    CHECK_NOTHROW(make_bundle(d));
  }
  CHECK_THROWS_AS(default_config("pendulum"), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mode", "fly"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"xi", {{"magnitudes", {1.0, 1.0}}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"tol", -1.0}}), ConfigError);
  CHECK_THROWS_AS(make_bundle(config_from_json(nlohmann::json{{"preset", "kasner"}, {"params", {{"ell", {0.1, 0.2}}, {"c", {0, 0, 0}}}}})),
                  ConfigError);
}

TEST_CASE("runs are deterministic and independent of the job count") {
  SweepConfig c = default_config("model");
  c.xi_count = 10;
  const std::string a = emit(run(c), EmitFormat::structured);
  c.jobs = 3;
  const std::string b = emit(run(c), EmitFormat::structured);
  CHECK(a == b);
}

TEST_CASE("oracle sweep: small errors and the fractional loss") {
  const SweepReport r = run(default_config("model"));
  CHECK(r.constants.at("oracle_error_max") < 1e-6);
  REQUIRE(r.fits.size() == 1);
  CHECK(r.fits[0].slope == doctest::Approx(0.5).epsilon(0.1));
  CHECK(!r.fits[0].compared_with.empty());
}

TEST_CASE("per-row failures do not abort the run") {
  SweepConfig c = default_config("model");
  c.magnitudes = {10.0, 1e6};
  const SweepReport r = run(c);
  bool failed = false, ok = false;
  for (const auto& row : r.rows) {
    if (row.xi == 1e6) failed |= row.status != "ok";
    if (row.xi == 10.0) ok |= row.status == "ok";
  }
  CHECK(failed);
  CHECK(ok);
}
