#include "dhs/cli_report.hpp"

#include "dhs/renorm_p.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

namespace dhs {

using nlohmann::json;

// ------------------------------- modes --------------------------------------

namespace {
const std::pair<RunMode, const char*> kModes[] = {
    {RunMode::asymptotics, "asymptotics"},
    {RunMode::scattering, "scattering"},
    {RunMode::roundtrip, "roundtrip"},
    {RunMode::oracle, "oracle"},
    {RunMode::einstein_constraints, "einstein-constraints"},
    {RunMode::einstein_energy, "einstein-energy"},
    {RunMode::sobolev, "sobolev"},
};
}  // namespace

const char* mode_name(RunMode m) {
  for (const auto& [k, v] : kModes)
    if (k == m) return v;
  return "?";
}

RunMode parse_mode(const std::string& s) {
  for (const auto& [k, v] : kModes)
    if (s == v) return k;
  throw ConfigError("unknown mode '" + s + "'");
}

// ------------------------------ json helpers --------------------------------

namespace {

cplx to_complex(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_object() && j.contains("re")) return {j.at("re").get<double>(), j.value("im", 0.0)};
  throw ConfigError("expected a number or {\"re\": x, \"im\": y}, got " + j.dump());
}

json from_complex(cplx c) {
  if (c.imag() == 0.0) return c.real();
  return json{{"re", c.real()}, {"im", c.imag()}};
}

VectorXd to_vec(const json& j) {
  if (j.is_number()) return VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) throw ConfigError("expected an array of numbers, got " + j.dump());
  VectorXd v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(Eigen::Index(i)) = j[i].get<double>();
  return v;
}

VectorXcd to_cvec(const json& j) {
  if (!j.is_array()) return VectorXcd::Constant(1, to_complex(j));
  VectorXcd v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(Eigen::Index(i)) = to_complex(j[i]);
  return v;
}

json from_vec(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json from_cvec(const VectorXcd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(from_complex(v(i)));
  return a;
}

MatrixXd to_mat(const json& j, int d) {
  if (j.is_number()) return MatrixXd::Constant(d, d, 0.0) + j.get<double>() * MatrixXd::Identity(d, d);
  MatrixXd m(d, d);
  if (!j.is_array() || int(j.size()) != d) throw ConfigError("expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
  for (int r = 0; r < d; ++r) {
    if (!j[r].is_array() || int(j[r].size()) != d) throw ConfigError("matrix row has the wrong length");
    for (int c = 0; c < d; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json from_mat(const MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

Poly<cplx> to_poly(const json& j) {
  Poly<cplx> p;
  if (!j.is_array()) {
    p.c = {to_complex(j)};
    return p;
  }
  for (const auto& x : j) p.c.push_back(to_complex(x));
  return p;
}

json from_poly(const Poly<cplx>& p) {
  json a = json::array();
  for (auto c : p.c) a.push_back(from_complex(c));
  return a;
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// ----------------------------- preset parsing -------------------------------

WaveSpec wave_from(const json& p, bool model) {
  WaveSpec s = model ? model_wave_spec(p.value("ell", 1.0), p.value("c", 0.0)) : wave_default();
  maybe(p, "d", s.d);
  maybe(p, "ell", s.ell);
  maybe(p, "T", s.T);
  maybe(p, "rho0", s.rho0);
  if (p.contains("a")) {
    s.a.clear();
    for (const auto& m : p.at("a")) s.a.push_back(to_mat(m, s.d));
  }
  if (p.contains("b")) {
    s.b.clear();
    for (const auto& v : p.at("b")) s.b.push_back(to_vec(v));
  }
  if (p.contains("c") && !model) {
    s.c.clear();
    for (const auto& v : p.at("c")) s.c.push_back(to_cvec(v));
  }
  if (p.contains("g")) s.g = to_poly(p.at("g"));
  if (p.contains("h")) s.h = to_poly(p.at("h"));
  if (p.contains("m_P")) s.m_P = p.at("m_P").get<int>();
  if (p.contains("m_H")) s.m_H = p.at("m_H").get<int>();
  return s;
}

json wave_to(const WaveSpec& s) {
  json j;
  j["d"] = s.d;
  j["ell"] = s.ell;
  j["T"] = s.T;
  j["rho0"] = s.rho0;
  j["a"] = json::array();
  for (const auto& m : s.a) j["a"].push_back(from_mat(m));
  j["b"] = json::array();
  for (const auto& v : s.b) j["b"].push_back(from_vec(v));
  j["c"] = json::array();
  for (const auto& v : s.c) j["c"].push_back(from_cvec(v));
  j["g"] = from_poly(s.g);
  j["h"] = from_poly(s.h);
  return j;
}

KasnerSpec kasner_default() {
  KasnerSpec s;
  s.ell = VectorXd::Constant(3, -1.0 / 3.0);
  s.c = VectorXcd::Zero(3);
  return s;
}

KasnerSpec kasner_from(const json& p) {
  KasnerSpec s = kasner_default();
  if (p.contains("ell")) {
    s.ell = to_vec(p.at("ell"));
    s.d = int(s.ell.size());
    s.c = VectorXcd::Zero(s.d);
  }
  if (p.contains("c")) s.c = to_cvec(p.at("c"));
  if (s.c.size() != s.d) throw ConfigError("kasner: c must have one entry per dimension");
  if (p.contains("g")) s.g = to_complex(p.at("g"));
  maybe(p, "T", s.T);
  maybe(p, "rho0", s.rho0);
  return s;
}

json kasner_to(const KasnerSpec& s) {
  return json{{"ell", from_vec(s.ell)}, {"c", from_cvec(s.c)}, {"g", from_complex(s.g)}, {"T", s.T}, {"rho0", s.rho0}};
}

HigherSpec higher_default() {
  HigherSpec s;
  s.n = 3;
  s.d = 1;
  s.ell = 1.0;
  s.a[{1, {2}}].c = {1.0};
  s.a[{0, {0}}].c = {0.05};
  s.a[{2, {0}}].c = {0.3};
  return s;
}

HigherSpec higher_from(const json& p) {
  HigherSpec s = higher_default();
  maybe(p, "n", s.n);
  maybe(p, "d", s.d);
  maybe(p, "ell", s.ell);
  maybe(p, "T", s.T);
  maybe(p, "rho0", s.rho0);
  if (p.contains("coefficients")) {
    s.a.clear();
    for (const auto& e : p.at("coefficients")) {
      const int j = e.at("j").get<int>();
      const auto alpha = e.at("alpha").get<std::vector<int>>();
      if (int(alpha.size()) != s.d) throw ConfigError("higher: alpha must have d entries");
      s.a[{j, alpha}] = to_poly(e.at("poly"));
    }
  }
  return s;
}

json higher_to(const HigherSpec& s) {
  json co = json::array();
  for (const auto& [key, poly] : s.a) co.push_back(json{{"j", key.first}, {"alpha", key.second}, {"poly", from_poly(poly)}});
  return json{{"n", s.n}, {"d", s.d}, {"ell", s.ell}, {"T", s.T}, {"rho0", s.rho0}, {"coefficients", co}};
}

EinsteinSpec einstein_default() {
  EinsteinSpec s;
  s.ell = VectorXd::Constant(3, -1.0 / 3.0);
  s.ell_phi = 1.0 / std::sqrt(3.0);
  return s;
}

EinsteinSpec einstein_from(const json& p) {
  EinsteinSpec s = einstein_default();
  if (p.contains("ell")) {
    s.ell = to_vec(p.at("ell"));
    s.d = int(s.ell.size());
  }
  maybe(p, "ell_phi", s.ell_phi);
  maybe(p, "T", s.T);
  maybe(p, "rho0", s.rho0);
  maybe(p, "taylor_depth", s.taylor_depth);
  if (p.contains("m_P")) s.m_P = p.at("m_P").get<int>();
  return s;
}

json einstein_to(const EinsteinSpec& s) {
  return json{{"ell", from_vec(s.ell)}, {"ell_phi", s.ell_phi}, {"T", s.T}, {"rho0", s.rho0}, {"taylor_depth", s.taylor_depth}};
}

// A built preset together with the parameters that produced it.
struct Instance {
  SystemBundle bundle;
  std::optional<WaveSpec> wave;
  std::optional<KasnerSpec> kasner;
  std::optional<HigherSpec> higher;
  std::optional<EinsteinSpec> einstein;
  int d = 1;
};

Instance instantiate(const SweepConfig& c) {
  Instance in;
  json p = c.params;
  if (c.T) p["T"] = *c.T;
  if (c.rho0) p["rho0"] = *c.rho0;
  try {
    if (c.preset == "wave" || c.preset == "model") {
      in.wave = wave_from(p, c.preset == "model");
      in.bundle = build_wave(*in.wave);
      in.d = in.wave->d;
    } else if (c.preset == "kasner") {
      in.kasner = kasner_from(p);
      in.bundle = build_kasner(*in.kasner);
      in.d = in.kasner->d;
    } else if (c.preset == "higher") {
      in.higher = higher_from(p);
      in.bundle = build_higher(*in.higher);
      in.d = in.higher->d;
    } else if (c.preset == "einstein") {
      in.einstein = einstein_from(p);
      in.bundle = build_einstein(*in.einstein);
      in.d = in.einstein->d;
    } else {
      throw ConfigError("unknown preset '" + c.preset + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad preset parameters: ") + e.what());
  }
  if (c.m_P) in.bundle.m_P = c.m_P;
  if (c.m_H) in.bundle.m_H = c.m_H;
  return in;
}

}  // namespace

// ------------------------------ configuration -------------------------------

SweepConfig config_from_json(const json& j) {
  SweepConfig c;
  try {
    maybe(j, "preset", c.preset);
    if (j.contains("params")) c.params = j.at("params");
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("T")) c.T = j.at("T").get<double>();
    if (j.contains("rho0")) {
      const auto& r = j.at("rho0");
      if (r.is_string()) {
        if (r.get<std::string>() != "auto") throw ConfigError("rho0 must be a number or \"auto\"");
      } else {
        c.rho0 = r.get<double>();
      }
    }
    if (j.contains("xi")) {
      const auto& x = j.at("xi");
      maybe(x, "min", c.xi_min);
      maybe(x, "max", c.xi_max);
      maybe(x, "count", c.xi_count);
      maybe(x, "magnitudes", c.magnitudes);
      if (x.contains("directions"))
        for (const auto& d : x.at("directions")) c.directions.push_back(to_vec(d));
    }
    if (j.contains("m_P") && !j.at("m_P").is_string()) c.m_P = j.at("m_P").get<int>();
    if (j.contains("m_H") && !j.at("m_H").is_string()) c.m_H = j.at("m_H").get<int>();
    maybe(j, "tol", c.tol);
    maybe(j, "seed", c.seed);
    maybe(j, "jobs", c.jobs);
    if (j.contains("data")) c.data = to_cvec(j.at("data"));
    maybe(j, "times", c.times);
    if (j.contains("sobolev")) {
      const auto& s = j.at("sobolev");
      maybe(s, "s", c.sobolev_s);
      maybe(s, "delta", c.sobolev_delta);
      maybe(s, "weights", c.weights);
    }
    if (j.contains("expect")) {
      c.expect_slope = j.at("expect").at("slope").get<double>();
      maybe(j.at("expect"), "tol", c.expect_tol);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad configuration: ") + e.what());
  }
  if (!(c.tol > 0.0)) throw ConfigError("tol must be positive");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  config_magnitudes(c);
  return c;
}

json config_to_json(const SweepConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["params"] = c.params;
  j["mode"] = mode_name(c.mode);
  if (c.T) j["T"] = *c.T;
  j["rho0"] = c.rho0 ? json(*c.rho0) : json("auto");
  json x{{"min", c.xi_min}, {"max", c.xi_max}, {"count", c.xi_count}};
  if (!c.magnitudes.empty()) x["magnitudes"] = c.magnitudes;
  json dirs = json::array();
  for (const auto& d : c.directions) dirs.push_back(from_vec(d));
  if (!c.directions.empty()) x["directions"] = dirs;
  j["xi"] = x;
  j["m_P"] = c.m_P ? json(*c.m_P) : json("auto");
  j["m_H"] = c.m_H ? json(*c.m_H) : json("auto");
  j["tol"] = c.tol;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  if (c.data) j["data"] = from_cvec(*c.data);
  if (!c.times.empty()) j["times"] = c.times;
  j["sobolev"] = json{{"s", c.sobolev_s}, {"delta", c.sobolev_delta}};
  if (!c.weights.empty()) j["sobolev"]["weights"] = c.weights;
  if (c.expect_slope) j["expect"] = json{{"slope", *c.expect_slope}, {"tol", c.expect_tol}};
  return j;
}

SweepConfig default_config(const std::string& preset) {
  SweepConfig c;
  c.preset = preset;
  if (preset == "wave") {
    c.params = wave_to(wave_default());
    c.mode = RunMode::roundtrip;
  } else if (preset == "model") {
    c.params = json{{"ell", 1.0}, {"c", 1.0}};
    c.mode = RunMode::oracle;
    c.xi_min = 10.0;
    c.xi_max = 1e4;
    c.xi_count = 16;
  } else if (preset == "kasner") {
    c.params = kasner_to(kasner_default());
    c.mode = RunMode::roundtrip;
    c.xi_max = 1e4;
    c.xi_count = 16;
  } else if (preset == "higher") {
    c.params = higher_to(higher_default());
    c.mode = RunMode::roundtrip;
    c.xi_max = 1e3;
    c.xi_count = 10;
  } else if (preset == "einstein") {
    c.params = einstein_to(einstein_default());
    c.mode = RunMode::einstein_constraints;
    c.xi_max = 1e3;
    c.xi_count = 8;
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
  return c;
}

json all_defaults() {
  json j;
  for (const char* p : {"wave", "model", "kasner", "higher", "einstein"}) j[p] = config_to_json(default_config(p));
  return j;
}

SystemBundle make_bundle(const SweepConfig& c) { return instantiate(c).bundle; }

std::vector<double> config_magnitudes(const SweepConfig& c) {
  std::vector<double> m = c.magnitudes;
  if (m.empty()) {
    if (!(c.xi_min > 0.0) || !(c.xi_max > c.xi_min) || c.xi_count < 2)
      throw ConfigError("xi range needs 0 < min < max and count >= 2");
    for (int k = 0; k < c.xi_count; ++k)
      m.push_back(c.xi_min * std::pow(c.xi_max / c.xi_min, double(k) / (c.xi_count - 1)));
  }
  for (std::size_t k = 1; k < m.size(); ++k)
    if (!(m[k] > m[k - 1])) throw ConfigError("xi magnitudes must be strictly increasing");
  return m;
}

// ---------------------------------- fits ------------------------------------

FitResult fit_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 8) throw std::invalid_argument("fit_exponent: need at least 8 points");
  const int n = int(points.size());
  Eigen::VectorXd x(n), y(n);
  for (int k = 0; k < n; ++k) {
    const auto [xi, v] = points[std::size_t(k)];
    if (!(xi > 0.0) || !(v > 0.0)) throw std::invalid_argument("fit_exponent: magnitudes and values must be positive");
    x(k) = std::log(xi);
    y(k) = std::log(v);
  }
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x.array() - mx).square().sum();
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_exponent: magnitudes must not all coincide");
  FitResult f;
  f.slope = ((x.array() - mx) * (y.array() - my)).sum() / sxx;
  f.intercept = my - f.slope * mx;
  const double ssr = (y.array() - f.intercept - f.slope * x.array()).square().sum();
  f.half_width = std::sqrt(ssr / (n - 2) / sxx);
  return f;
}

// ----------------------------------- run ------------------------------------

namespace {

using Job = std::function<std::vector<ReportRow>()>;

std::vector<ReportRow> run_jobs(const std::vector<Job>& jobs, int threads) {
  std::vector<std::vector<ReportRow>> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) out[k] = jobs[k]();
  };
  const int nt = std::max(1, std::min<int>(threads, int(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<ReportRow> rows;
  for (auto& r : out) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

std::string clean(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

ReportRow row(RunMode m, double xi, int dir, double t, const std::string& q, double v) {
  return {mode_name(m), xi, dir, t, q, v, "ok"};
}

// Runs `body` and turns an exception into a failure row.
std::vector<ReportRow> guarded(RunMode m, double xi, int dir, const std::function<std::vector<ReportRow>()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    ReportRow r = row(m, xi, dir, 0.0, "failure", 0.0);
    r.status = clean(e.what());
    return {r};
  }
}

std::vector<std::pair<double, double>> collect(const std::vector<ReportRow>& rows, const std::string& q, int dir) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.quantity == q && r.direction == dir && r.status == "ok") pts.emplace_back(r.xi, r.value);
  return pts;
}

void add_fit(SweepReport& rep, const std::string& name, const std::string& compared, double expected,
             const std::vector<std::pair<double, double>>& pts) {
  // Fits need 8 points over at least three decades.
  if (pts.size() < 8 || pts.back().first < 999.999 * pts.front().first) return;
  const FitResult f = fit_exponent(pts);
  rep.fits.push_back({name, compared, f.slope, f.half_width, expected, int(pts.size())});
}

VectorXcd data_or_unit(const SweepConfig& c, int n) {
  if (c.data) {
    if (c.data->size() != n) throw ConfigError("data vector must have " + std::to_string(n) + " entries");
    return *c.data;
  }
  return VectorXcd::Unit(n, 0);
}

VectorXcd random_projected(const EinsteinSpec& s, const VectorXd& xi, double t, EinsteinGauge g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  VectorXcd X(2 * s.d * s.d + 2);
  for (Eigen::Index k = 0; k < X.size(); ++k) X(k) = cplx(N(rng), N(rng));
  X = project_constraints(X, t, xi, s, g);
  return X / X.norm();
}

}  // namespace

SweepReport run(const SweepConfig& c) {
  const Instance in = instantiate(c);
  const SystemBundle& b = in.bundle;
  const std::vector<double> mags = config_magnitudes(c);
  std::vector<VectorXd> dirs = c.directions;
  if (dirs.empty()) dirs.push_back(VectorXd::Unit(in.d, 0));
  for (auto& d : dirs) {
    if (d.size() != in.d) throw ConfigError("direction has the wrong dimension");
    if (!(d.norm() > 0.0)) throw ConfigError("direction must be nonzero");
    d.normalize();
  }
  const double T = b.scale.T;
  const RunMode mode = c.mode;
  PipelineOptions popt;
  popt.tol = c.tol;
  popt.m_P = c.m_P;
  popt.m_H = c.m_H;

  SweepReport rep;
  rep.environment = {{"library", "dhs 0.1.0"},
                     {"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"preset", c.preset},
                     {"mode", mode_name(mode)}};

  std::vector<Job> jobs;
  for (std::size_t di = 0; di < dirs.size(); ++di) {
    for (std::size_t mi = 0; mi < mags.size(); ++mi) {
      const double mag = mags[mi];
      const int dir = int(di);
      const VectorXd xi = mag * dirs[di];
      const std::uint64_t seed = c.seed + 1000003ull * di + mi;
      jobs.push_back([&, mag, dir, xi, seed]() {
        return guarded(mode, mag, dir, [&]() -> std::vector<ReportRow> {
          std::vector<ReportRow> rows;
          switch (mode) {
            case RunMode::asymptotics: {
              PipelineData d;
              d.at_T = data_or_unit(c, b.n);
              const auto fs = full_pipeline(b, d, xi, popt);
              rows.push_back(row(mode, mag, dir, T, "u_A_norm", fs.u_A.norm()));
              rows.push_back(row(mode, mag, dir, T, "u_A_error", fs.u_A_error));
              rows.push_back(row(mode, mag, dir, T, "ratio", fs.U_A_T.norm() / fs.u_A.norm()));
              break;
            }
            case RunMode::scattering:
            case RunMode::roundtrip: {
              PipelineData d;
              d.asymptotic = data_or_unit(c, b.n);
              const auto fs = full_pipeline(b, d, xi, popt);
              rows.push_back(row(mode, mag, dir, T, "U_T_norm", fs.U_T.norm()));
              rows.push_back(row(mode, mag, dir, T, "ratio", fs.U_A_T.norm() / d.asymptotic->norm()));
              if (in.kasner) {
                const auto [phi, dphi] = kasner_phi(*in.kasner, xi, T, fs.U_T);
                const double jx = japanese(mag);
                const VectorXcd p0 = *d.asymptotic / fs.zfac;
                rows.push_back(row(mode, mag, dir, T, "kasner_ratio",
                                   (std::sqrt(jx) * std::abs(phi) + std::abs(dphi) / std::sqrt(jx)) /
                                       p0.cwiseAbs().sum()));
              }
              if (mode == RunMode::roundtrip) {
                PipelineData back;
                back.at_T = fs.U_T;
                const auto fb = full_pipeline(b, back, xi, popt);
                rows.push_back(row(mode, mag, dir, T, "roundtrip_error",
                                   (fb.u_A - *d.asymptotic).norm() / d.asymptotic->norm()));
              }
              break;
            }
            case RunMode::oracle: {
              if (!in.wave || in.wave->d != 1) throw ConfigError("oracle mode needs the model preset");
              const double ell = in.wave->ell;
              if (ell != std::round(ell) || ell < 1) throw ConfigError("oracle mode needs a natural l");
              const double cc = c.params.value("c", 0.0);
              const VectorXcd dv = c.data ? *c.data : VectorXcd(VectorXcd::Ones(2));
              const auto ex = model_wave_exact(int(ell), cc, dv(0), dv(1), T, mag);
              const auto nu = model_wave_numeric(ell, cc, dv(0), dv(1), T, mag, std::min(1e-12, c.tol));
              rows.push_back(row(mode, mag, dir, T, "rel_error_phi", std::abs(nu.first - ex.first) / std::abs(ex.first)));
              rows.push_back(
                  row(mode, mag, dir, T, "rel_error_dphi", std::abs(nu.second - ex.second) / std::abs(ex.second)));
              // <xi>|phi| of the phi_1 channel alone.
              const auto ch = model_wave_exact(int(ell), cc, 0.0, 1.0, T, mag);
              rows.push_back(row(mode, mag, dir, T, "phi1_channel", japanese(mag) * std::abs(ch.first)));
              break;
            }
            case RunMode::einstein_constraints: {
              if (!in.einstein) throw ConfigError("einstein modes need the einstein preset");
              const auto& es = *in.einstein;
              const double zf = zfac(b.scale, xi);
              const EinsteinGauge g = zone_of(zf * T, b.zones) == Zone::H ? EinsteinGauge::harmonic
                                                                          : EinsteinGauge::zero_shift;
              const VectorXcd X = random_projected(es, xi, T, g, seed);
              PipelineData d;
              d.at_T = einstein_unknown(es, xi, T, X);
              PipelineOptions o = popt;
              o.outputs = c.times;
              if (o.outputs.empty())
                for (int k = 0; k <= 16; ++k) o.outputs.push_back(T * std::pow(10.0, -4.0 * k / 16.0));
              const auto fs = full_pipeline(b, d, xi, o);
              for (const auto& tr : fs.traces) {
                const EinsteinGauge gg = tr.zone == Zone::H ? EinsteinGauge::harmonic : EinsteinGauge::zero_shift;
                const VectorXcd Xt = einstein_state(es, xi, tr.t, tr.U);
                rows.push_back(row(mode, mag, dir, tr.t, std::string("residual_") + zone_name(tr.zone),
                                   constraint_residuals(Xt, tr.t, xi, es, gg).cwiseAbs().maxCoeff()));
              }
              break;
            }
            case RunMode::einstein_energy: {
              if (!in.einstein) throw ConfigError("einstein modes need the einstein preset");
              const auto& es = *in.einstein;
              const double zf = zfac(b.scale, xi);
              const double tH = 1.0 / (b.zones.rho0 * zf);
              if (!(tH < T)) throw std::runtime_error("no Z_H segment below T at this frequency");
              const VectorXcd X = random_projected(es, xi, T, EinsteinGauge::harmonic, seed);
              std::vector<double> outs;
              for (int k = 0; k <= 40; ++k) outs.push_back(tH * std::pow(T / tH, k / 40.0));
              const auto tr = evolve_h_zone(b, xi, T, tH, einstein_unknown(es, xi, T, X), outs, c.tol);
              const double WT = einstein_weighted(es, xi, T, X);
              double mx = 0.0;
              for (const auto& p : tr) mx = std::max(mx, einstein_weighted(es, xi, p.t, einstein_state(es, xi, p.t, p.U)) / WT);
              rows.push_back(row(mode, mag, dir, T, "energy_ratio", mx));
              const PZoneData pz = b.at(xi).pzone();
              rows.push_back(row(mode, mag, dir, T, "m_P_selected", double(select_m_p(pz.a_P, pz.jordan))));
              break;
            }
            case RunMode::sobolev: {
              std::vector<double> times = c.times;
              if (times.empty()) times = {1e-1, 1e-2, 1e-3, 1e-4};
              PipelineData d;
              // Data in H^s: |u_A| ~ <xi>^{-(s+1)}.
              d.asymptotic = data_or_unit(c, b.n) * std::pow(japanese(mag), -(c.sobolev_s + 1.0));
              PipelineOptions o = popt;
              o.outputs = times;
              const auto fs = full_pipeline(b, d, xi, o);
              rows.push_back(row(mode, mag, dir, 0.0, "u_A_norm", d.asymptotic->norm()));
              for (double t : times) {
                const auto it = std::find_if(fs.traces.begin(), fs.traces.end(),
                                             [t](const SolveTrace& s) { return std::fabs(s.t - t) <= 1e-12 * t; });
                if (it == fs.traces.end()) throw std::runtime_error("missing trace at requested time");
                rows.push_back(row(mode, mag, dir, t, "deviation_sq", (it->U_A - *d.asymptotic).squaredNorm()));
              }
              break;
            }
          }
          return rows;
        });
      });
    }
  }
  rep.rows = run_jobs(jobs, c.jobs);

  for (int dir = 0; dir < int(dirs.size()); ++dir) {
    const std::string sfx = dirs.size() > 1 ? "_dir" + std::to_string(dir) : "";
    switch (mode) {
      case RunMode::asymptotics:
      case RunMode::scattering:
      case RunMode::roundtrip: {
        const auto pts = collect(rep.rows, "ratio", dir);
        add_fit(rep, "ratio" + sfx, "two-sided energy bound: |U_A(T)|/|u_A| bounded uniformly in xi", 0.0, pts);
        if (!pts.empty()) {
          double lo = pts.front().second, hi = lo;
          for (const auto& p : pts) {
            lo = std::min(lo, p.second);
            hi = std::max(hi, p.second);
          }
          rep.constants["C_ratio" + sfx] = hi / lo;
        }
        if (in.kasner)
          add_fit(rep, "kasner_ratio" + sfx,
                  "Kasner half-derivative bound: <xi>^{1/2}|phi| + <xi>^{-1/2}|phi_t| comparable to the limits", 0.0,
                  collect(rep.rows, "kasner_ratio", dir));
        if (mode == RunMode::roundtrip) {
          double worst = 0.0;
          for (const auto& p : collect(rep.rows, "roundtrip_error", dir)) worst = std::max(worst, p.second);
          rep.constants["roundtrip_error_max" + sfx] = worst;
        }
        break;
      }
      case RunMode::oracle: {
        double worst = 0.0;
        for (const auto& q : {"rel_error_phi", "rel_error_dphi"})
          for (const auto& p : collect(rep.rows, q, dir)) worst = std::max(worst, p.second);
        rep.constants["oracle_error_max" + sfx] = worst;
        const double ell = in.wave ? in.wave->ell : 1.0;
        add_fit(rep, "phi1_channel" + sfx, "fractional derivative loss l/(l+1) of the phi_1 channel (c = l)",
                ell / (ell + 1.0), collect(rep.rows, "phi1_channel", dir));
        break;
      }
      case RunMode::einstein_constraints: {
        double worst = 0.0;
        for (const auto& r : rep.rows)
          if (r.direction == dir && r.status == "ok" && r.quantity.rfind("residual_", 0) == 0) worst = std::max(worst, r.value);
        rep.constants["constraint_residual_max" + sfx] = worst;
        break;
      }
      case RunMode::einstein_energy: {
        add_fit(rep, "energy_ratio" + sfx, "Z_H weighted energy bounded uniformly in xi", 0.0,
                collect(rep.rows, "energy_ratio", dir));
        break;
      }
      case RunMode::sobolev: {
        std::vector<double> times = c.times;
        if (times.empty()) times = {1e-1, 1e-2, 1e-3, 1e-4};
        std::vector<double> xs, ws;
        std::vector<VectorXcd> u;
        std::vector<std::vector<VectorXcd>> byt(times.size());
        for (std::size_t k = 0; k < mags.size(); ++k) {
          const double dl = std::log(mags.back() / mags.front()) / double(std::max<std::size_t>(1, mags.size() - 1));
          xs.push_back(mags[k]);
          ws.push_back(c.weights.size() == mags.size() ? c.weights[k] : mags[k] * dl);
        }
        // Distances enter sobolev_convergence through |U_A - u_A|; rebuild them as scalar vectors.
        u.assign(mags.size(), VectorXcd::Zero(1));
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
          byt[ti].assign(mags.size(), VectorXcd::Zero(1));
          for (const auto& r : rep.rows) {
            if (r.direction != dir || r.quantity != "deviation_sq" || std::fabs(r.t - times[ti]) > 1e-12 * times[ti]) continue;
            const auto k = std::size_t(std::find(mags.begin(), mags.end(), r.xi) - mags.begin());
            if (k < mags.size()) byt[ti][k](0) = std::sqrt(r.value);
          }
        }
        const SobolevTable tab = sobolev_convergence(xs, ws, u, byt, times, c.sobolev_s, c.sobolev_delta);
        for (std::size_t ti = 0; ti < times.size(); ++ti)
          rep.rows.push_back(row(mode, 0.0, dir, times[ti], "sobolev_distance", tab.distance[ti]));
        rep.constants["sobolev_monotone" + sfx] = tab.monotone ? 1.0 : 0.0;
        rep.constants["sobolev_final_ratio" + sfx] = tab.final_ratio;
        break;
      }
    }
  }
  if (c.expect_slope) {
    if (rep.fits.empty()) {
      rep.violation = true;
    } else {
      for (const auto& f : rep.fits)
        if (std::fabs(f.slope - *c.expect_slope) > c.expect_tol) rep.violation = true;
    }
  }
  return rep;
}

// ---------------------------------- emit ------------------------------------

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& row_columns() {
  static const std::vector<std::string> cols = {"mode", "xi", "direction", "t", "quantity", "value", "status"};
  return cols;
}

std::string emit(const SweepReport& r, EmitFormat f) {
  if (f == EmitFormat::structured) {
    json j;
    j["rows"] = json::array();
    for (const auto& x : r.rows)
      j["rows"].push_back(json{{"mode", x.mode}, {"xi", x.xi}, {"direction", x.direction}, {"t", x.t},
                               {"quantity", x.quantity}, {"value", x.value}, {"status", x.status}});
    j["fits"] = json::array();
    for (const auto& x : r.fits)
      j["fits"].push_back(json{{"name", x.name}, {"compared_with", x.compared_with}, {"slope", x.slope},
                               {"half_width", x.half_width}, {"expected", x.expected}, {"points", x.points}});
    j["constants"] = r.constants;
    j["environment"] = r.environment;
    j["violation"] = r.violation;
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  const auto& cols = row_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& x : r.rows)
    os << clean(x.mode) << "," << shortest(x.xi) << "," << x.direction << "," << shortest(x.t) << ","
       << clean(x.quantity) << "," << shortest(x.value) << "," << clean(x.status) << "\n";
  return os.str();
}

std::vector<ReportRow> parse_rows(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<ReportRow> rows;
  if (!std::getline(is, line)) return rows;
  auto num = [](const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != row_columns().size()) throw std::invalid_argument("row has the wrong number of columns");
    rows.push_back({f[0], num(f[1]), std::stoi(f[2]), num(f[3]), f[4], num(f[5]), f[6]});
  }
  return rows;
}

SweepReport parse_structured(const std::string& text) {
  const json j = json::parse(text);
  SweepReport r;
  for (const auto& x : j.at("rows"))
    r.rows.push_back({x.at("mode"), x.at("xi"), x.at("direction"), x.at("t"), x.at("quantity"), x.at("value"),
                      x.at("status")});
  for (const auto& x : j.at("fits"))
    r.fits.push_back({x.at("name"), x.at("compared_with"), x.at("slope"), x.at("half_width"), x.at("expected"),
                      x.at("points")});
  r.constants = j.at("constants").get<std::map<std::string, double>>();
  r.environment = j.at("environment").get<std::map<std::string, std::string>>();
  r.violation = j.at("violation").get<bool>();
  return r;
}

}  // namespace dhs
