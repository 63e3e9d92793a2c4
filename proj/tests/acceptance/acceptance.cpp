// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            run everything
//   acceptance --only N   run criterion N (repeatable)

#include "dhs/cli_report.hpp"
#include "dhs/presets.hpp"
#include "dhs/renorm_h.hpp"
#include "dhs/renorm_p.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstring>
#include <map>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace dhs;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> body;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(lo * std::pow(hi / lo, double(k) / (n - 1)));
  return v;
}

const FitRow* find_fit(const SweepReport& r, const std::string& name) {
  for (const auto& f : r.fits)
    if (f.name == name) return &f;
  return nullptr;
}

int failed_rows(const SweepReport& r) {
  int n = 0;
  for (const auto& row : r.rows) n += row.status != "ok";
  return n;
}

// ------------------------------------------------------------------------------------------

Outcome oracle_equivalence() {
  double worst = 0.0;
  for (double xi : {1.0, 10.0, 100.0}) {
    const auto ex = model_wave_exact(1, 3.0, 1.0, 1.0, 1.0, xi);
    const auto nu = model_wave_numeric(1.0, 3.0, 1.0, 1.0, 1.0, xi, 1e-12);
    worst = std::max({worst, std::abs(nu.first - ex.first) / std::abs(ex.first),
                      std::abs(nu.second - ex.second) / std::abs(ex.second)});
  }
  return {worst < 1e-6, fmt("max relative error %.2e (limit 1e-6)", worst)};
}

Outcome dalembert() {
  double worst = 0.0;
  for (double xi : {1.0, 100.0}) {
    const cplx p0(1.0, 0.3), p1(-0.4 * xi, 0.7 * xi);
    const double E0 = std::norm(p0) + std::norm(p1 / xi);
    for (double t : logspace(1e-3, 1.0, 20)) {
      const auto [phi, dphi] = model_wave_numeric(0.0, 0.0, p0, p1, t, xi, 1e-12);
      worst = std::max(worst, std::fabs(std::norm(phi) + std::norm(dphi / xi) - E0) / E0);
    }
  }
  return {worst < 1e-8, fmt("max relative energy drift %.2e (limit 1e-8)", worst)};
}

Outcome derivative_loss() {
  std::vector<std::pair<double, double>> pts;
  double cross = 0.0;
  for (double xi : logspace(10.0, 1e4, 16)) {
    const auto ex = model_wave_exact(1, 5.0, 1.0, 0.0, 1.0, xi);
    pts.emplace_back(xi, std::abs(ex.first));
  }
  for (double xi : {10.0, 100.0, 1000.0}) {
    const auto ex = model_wave_exact(1, 5.0, 1.0, 0.0, 1.0, xi);
    const auto nu = model_wave_numeric(1.0, 5.0, 1.0, 0.0, 1.0, xi, 1e-13);
    cross = std::max(cross, std::abs(nu.first - ex.first) / std::abs(ex.first));
  }
  const FitResult f = fit_exponent(pts);
  const LossSolutionFit q = loss_solution_fit({10.0, 30.0, 100.0, 300.0, 1000.0});
  const bool pass = std::fabs(f.slope - 1.0) <= 0.05 && cross < 1e-8;
  return {pass, fmt("slope %.4f +- %.4f (want 1 +- 0.05); ODE cross-check %.1e; c0 = %.6f%+.6fi, c1 = %.6f%+.6fi",
                    f.slope, f.half_width, cross, q.c0.real(), q.c0.imag(), q.c1.real(), q.c1.imag())};
}

Outcome wave_reversibility() {
  SweepConfig c = default_config("wave");
  c.mode = RunMode::roundtrip;
  c.tol = 1e-12;
  c.data = (VectorXcd(2) << 1.0, cplx(0.5, 0.3)).finished();
  const SweepReport r = run(c);
  const FitRow* f = find_fit(r, "ratio");
  if (!f) return {false, "no fit produced"};
  const double C = r.constants.at("C_ratio"), rt = r.constants.at("roundtrip_error_max");
  const bool pass = std::fabs(f->slope) <= 0.05 && C <= 50.0 && rt < 1e-8 && failed_rows(r) == 0;
  {
    // Same sweep with the narrower hyperbolic zone boundary, for reference only.
    SweepConfig c01 = c;
    c01.rho0 = 0.1;
    c01.mode = RunMode::scattering;
    const SweepReport r01 = run(c01);
    if (const FitRow* g = find_fit(r01, "ratio"))
      std::printf("INFO [4] rho0 = 0.1: slope %.4f, max/min %.2f\n", g->slope, r01.constants.at("C_ratio"));
  }
  return {pass, fmt("slope %.4f +- %.4f (want 0 +- 0.05); max/min %.2f (limit 50); round trip %.2e (limit 1e-8)",
                    f->slope, f->half_width, C, rt)};
}

Outcome fractional_loss() {
  const SweepReport r = run(default_config("model"));
  const FitRow* f = find_fit(r, "phi1_channel");
  if (!f) return {false, "no fit produced"};
  return {std::fabs(f->slope - 0.5) <= 0.05 && failed_rows(r) == 0,
          fmt("slope %.4f +- %.4f (want 0.5 +- 0.05), %d points", f->slope, f->half_width, f->points)};
}

Outcome kasner_half_loss() {
  SweepConfig c = default_config("kasner");
  c.params["c"] = {0.0, 0.0, 0.0};
  c.params["g"] = 1.0;
  c.xi_min = 1.0;
  c.xi_max = 1e4;
  c.xi_count = 16;
  c.directions = {(VectorXd(3) << 1, 0, 0).finished(), (VectorXd(3) << 1, 1, 0).finished(),
                  (VectorXd(3) << 1, 2, 3).finished()};
  c.mode = RunMode::scattering;
  const SweepReport r = run(c);
  bool pass = failed_rows(r) == 0;
  std::ostringstream os;
  for (int d = 0; d < 3; ++d) {
    const FitRow* f = find_fit(r, "kasner_ratio_dir" + std::to_string(d));
    if (!f) return {false, "missing fit"};
    pass = pass && std::fabs(f->slope) <= 0.05;
    os << (d ? "; " : "") << "dir" << d << " slope " << fmt("%.4f +- %.4f", f->slope, f->half_width);
  }
  os << " (want 0 +- 0.05)";
  return {pass, os.str()};
}

Outcome remainder_order() {
  const SystemBundle b = build_wave(wave_default());
  const PZoneData pz = b.at(VectorXd::Constant(1, 10.0)).pzone();
  bool pass = true;
  std::ostringstream os;
  for (int m = 1; m <= 3; ++m) {
    const PRenormPlan plan = build_p_renorm(pz, m);
    std::vector<std::pair<double, double>> pts;
    for (double z : logspace(1e-4, 1e-2, 16)) pts.emplace_back(z, ph_evaluate(plan.R_m, z).norm());
    const FitResult f = fit_exponent(pts);
    const double want = plan.remainder_order();
    pass = pass && std::fabs(f.slope - want) <= 0.1;
    os << (m > 1 ? "; " : "") << fmt("m=%d slope %.4f (want %.2f +- 0.1)", m, f.slope, want);
  }
  return {pass, os.str()};
}

Outcome h_stage_residual() {
  const SystemBundle b = build_wave(wave_default());
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0, worst_reported = 0.0;
  int m_max = 0;
  SpeedPartition part;
  part.groups = b.partition_hint.value();
  for (int k = 0; k < 100; ++k) {
    const double xi = std::pow(10.0, 1.5 + 3.5 * U(rng));
    const FrequencyModel fm = b.at(VectorXd::Constant(1, xi));
    const double zlo = 1.0 / b.zones.rho0, zhi = fm.zfac * b.scale.T;
    const double z = zlo * std::pow(zhi / zlo, U(rng));
    const double t = z / fm.zfac;
    const int mH = select_m_h(b.scale.ell_star(), 1.0);
    m_max = std::max(m_max, mH);
    const HJets jt = fm.h.jets(t);
    const HStageValues top = build_h_renorm(fm.h, part, mH, fm.zfac).at(t);
    for (double r : top.stage_residual) worst_reported = std::max(worst_reported, r);
    for (int s = 1; s <= mH; ++s) {
      // R^(s-1) from the jets or a plan truncated one stage earlier, D^(s) and N^(s) from the full plan.
      const MatrixXcd R = s == 1 ? MatrixXcd(jet_values(jt.r0)) : build_h_renorm(fm.h, part, s - 1, fm.zfac).at(t).R_m;
      const MatrixXcd& D = top.D[s - 1];
      const MatrixXcd& N = top.N[s - 1];
      MatrixXcd comm(2, 2);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) comm(i, j) = N(i, j) * cplx(0.0, 1.0) * (jt.zcd(j).value() - jt.zcd(i).value());
      const double scale = R.norm() + D.norm() + comm.norm();
      if (scale > 0) worst = std::max(worst, (R - D + comm).norm() / scale);
    }
  }
  return {worst < 1e-10 && worst_reported < 1e-10,
          fmt("100 points, m up to %d: recomputed residual %.2e, reported %.2e (limit 1e-10)", m_max, worst,
              worst_reported)};
}

Outcome commutator_flow() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> quarter(-6, 6), size(1, 3), nblocks(1, 3), nterms(1, 3), coin(0, 1);
  std::normal_distribution<double> N;
  int resonant = 0, nonempty = 0;
  for (int trial = 0; trial < 50; ++trial) {
    JordanSpec J;
    const int nb = nblocks(rng);
    for (int k = 0; k < nb; ++k) {
      const int q = quarter(rng);
      J.blocks.push_back({cplx(q / 4.0), size(rng), Exponent::rational(q, 4)});
    }
    const int n = J.n();
    PHMatrix Y = ph_zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int terms = nterms(rng);
        for (int t = 0; t < terms; ++t)
          Y(i, j) += PHExpansion::monomial(cplx(N(rng), N(rng)), Exponent::rational(quarter(rng), 3), coin(rng));
        if (coin(rng)) {
          // Forced resonance: power -1 - (b_j - b_i).
          const Exponent p = Exponent(-1) - (*J.exact_diag(j) - *J.exact_diag(i));
          Y(i, j) += PHExpansion::monomial(cplx(N(rng), N(rng)), p);
          ++resonant;
        }
      }
    }
    const PHMatrix Nm = solve_commutator_flow(Y, J, 4 * n + 4);
    PHMatrix Bz = ph_zero(n, n);
    const MatrixXcd B = J.matrix();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (B(i, j) != cplx(0.0)) Bz(i, j) = PHExpansion::monomial(B(i, j), Exponent(-1));
    PHMatrix res = ph_derivative(Nm);
    const PHMatrix a = ph_multiply(Nm, Bz), c = ph_multiply(Bz, Nm);
    for (Eigen::Index k = 0; k < res.size(); ++k) res.data()[k] += a.data()[k] - c.data()[k] - Y.data()[k];
    nonempty += !ph_is_empty(res);
  }
  return {nonempty == 0, fmt("50 pairs (%d forced resonant entries): %d nonempty residuals", resonant, nonempty)};
}

Outcome sandwich() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 6);
  std::normal_distribution<double> N;
  int violations = 0;
  double worst = -1e300;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng);
    SpeedPartition part;
    std::uniform_int_distribution<int> grp(0, n - 1);
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[grp(rng)].push_back(i);
    for (auto& g : groups)
      if (!g.empty()) part.groups.push_back(g);
    const auto gi = part.group_index(n);
    const double mag = std::pow(10.0, 3.0 * N(rng));
    MatrixXcd W = MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (gi[i] == gi[j]) W(i, j) = mag * cplx(N(rng), N(rng));
    VectorXcd X(n);
    for (int i = 0; i < n; ++i) X(i) = cplx(N(rng), N(rng));
    const HermitianExtremes ex = hermitian_extremes(W, part);
    const double q = (X.adjoint() * W * X)(0).real();
    const double lo = (ex.minus.array() * X.cwiseAbs2().array()).sum();
    const double hi = (ex.plus.array() * X.cwiseAbs2().array()).sum();
    const double tol = 1e-12 * W.norm() * X.squaredNorm();
    const double v = std::max(lo - q, q - hi) / (W.norm() * X.squaredNorm());
    worst = std::max(worst, v);
    if (lo > q + tol || q > hi + tol) ++violations;
  }
  return {violations == 0, fmt("1000 pairs: %d violations, worst relative excess %.2e (tolerance 1e-12)", violations, worst)};
}

Outcome einstein_constraints() {
  SweepConfig c = default_config("einstein");
  c.mode = RunMode::einstein_constraints;
  c.magnitudes = {1.0, 100.0};
  c.directions = {(VectorXd(3) << 1, 2, 3).finished()};
  const SweepReport r = run(c);
  std::set<std::string> paths;
  std::map<double, std::string> path_of;
  for (const auto& row : r.rows)
    if (row.quantity.rfind("residual_", 0) == 0 && path_of[row.xi].find(row.quantity.back()) == std::string::npos)
      path_of[row.xi] += row.quantity.back();
  for (const auto& [xi, p] : path_of) paths.insert(p);
  const double worst = r.constants.at("constraint_residual_max");
  std::ostringstream os;
  for (const auto& [xi, p] : path_of) os << " xi=" << xi << ":" << p;
  return {worst < 1e-6 && failed_rows(r) == 0 && paths.size() == 2,
          fmt("max relative residual %.2e (limit 1e-6); zone paths", worst) + os.str()};
}

Outcome einstein_energy() {
  std::ostringstream os;
  bool pass = true;
  struct Case {
    const char* label;
    VectorXd ell;
    double ell_phi;
  };
  const Case cases[] = {{"subcritical", VectorXd::Constant(3, -1.0 / 3.0), 1.0 / std::sqrt(3.0)},
                        {"non-subcritical", (VectorXd(3) << -0.9, -0.9, 0.8).finished(), 0.0}};
  for (const auto& cs : cases) {
    SweepConfig c = default_config("einstein");
    c.mode = RunMode::einstein_energy;
    c.params["ell"] = {cs.ell(0), cs.ell(1), cs.ell(2)};
    c.params["ell_phi"] = cs.ell_phi;
    c.T = 10.0;
    c.xi_min = 1.0;
    c.xi_max = 1e3;
    c.xi_count = 10;
    c.directions = {(VectorXd(3) << 1, 2, 3).finished()};
    const SweepReport r = run(c);
    const FitRow* f = find_fit(r, "energy_ratio");
    int m_sel = -1;
    double hi = 0.0;
    for (const auto& row : r.rows) {
      if (row.quantity == "m_P_selected") m_sel = std::max(m_sel, int(row.value));
      if (row.quantity == "energy_ratio") hi = std::max(hi, row.value);
    }
    const bool sub = subcriticality(cs.ell).subcritical;
    bool ok = f && std::fabs(f->slope) <= 0.1 && failed_rows(r) == 0;
    if (!sub) ok = ok && m_sel >= 1;
    pass = pass && ok;
    os << (sub ? "" : "; ") << cs.label << ": slope " << (f ? fmt("%.3f +- %.3f", f->slope, f->half_width) : "n/a")
       << fmt(", max ratio %.3g, selected m_P %d", hi, m_sel);
  }
  os << " (want slope 0 +- 0.1; m_P >= 1 when not subcritical)";
  return {pass, os.str()};
}

Outcome sobolev() {
  SweepConfig c = default_config("wave");
  c.mode = RunMode::sobolev;
  c.sobolev_s = 1.0;
  c.sobolev_delta = 0.2;
  c.times = {1e-1, 1e-2, 1e-3, 1e-4};
  const SweepReport r = run(c);
  std::ostringstream os;
  for (const auto& row : r.rows)
    if (row.quantity == "sobolev_distance") os << fmt(" %.3g", row.value);
  const bool mono = r.constants.at("sobolev_monotone") == 1.0;
  const double ratio = r.constants.at("sobolev_final_ratio");
  return {mono && ratio < 1e-3 && failed_rows(r) == 0,
          fmt("distances at t = 1e-1..1e-4:%s; monotone %s; final/initial %.2e (limit 1e-3)", os.str().c_str(),
              mono ? "yes" : "no", ratio)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }
  const std::vector<Criterion> all = {
      {1, "1F1 oracle equivalence", 10, oracle_equivalence},
      {2, "d'Alembert degeneration", 5, dalembert},
      {3, "one-derivative loss", 30, derivative_loss},
      {4, "renormalized reversibility", 300, wave_reversibility},
      {5, "fractional-loss exponent", 60, fractional_loss},
      {6, "Kasner half-derivative two-sided bound", 300, kasner_half_loss},
      {7, "Z_P remainder-order law", 60, remainder_order},
      {8, "Z_H algebraic stage residual", 60, h_stage_residual},
      {9, "commutator-flow exactness", 30, commutator_flow},
      {10, "quadratic-form sandwich", 5, sandwich},
      {11, "Einstein constraint propagation", 120, einstein_constraints},
      {12, "Einstein energy boundedness", 600, einstein_energy},
      {13, "Sobolev convergence", 120, sobolev},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s [%d] %s: %s; %.2f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
