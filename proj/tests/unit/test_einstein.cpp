#include "dhs/presets.hpp"
#include "dhs/renorm_h.hpp"
#include "dhs/renorm_p.hpp"

#include <doctest.h>

#include <random>

using namespace dhs;

namespace {

EinsteinSpec isotropic() {
  EinsteinSpec s;
  s.ell = VectorXd::Constant(3, -1.0 / 3.0);
  s.ell_phi = 1.0 / std::sqrt(3.0);
  return s;
}

VectorXcd random_state(std::uint64_t seed, int n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  VectorXcd X(n);
  for (int k = 0; k < n; ++k) X(k) = cplx(N(rng), N(rng));
  return X;
}

const VectorXd kDir = (VectorXd(3) << 1.0, 2.0, 3.0).finished() / std::sqrt(14.0);

}  // namespace

TEST_CASE("subcriticality examples") {
  const Subcriticality a = subcriticality(VectorXd::Constant(3, -1.0 / 3.0));
  CHECK(a.applicable);
  CHECK(a.subcritical);
  CHECK(a.margin == doctest::Approx(2.0 / 3.0));
  const Subcriticality b = subcriticality((VectorXd(3) << -0.9, -0.9, 0.8).finished());
  CHECK_FALSE(b.subcritical);
  CHECK(b.margin == doctest::Approx(-1.6));
  const Subcriticality c = subcriticality((VectorXd(3) << 1.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0).finished());
  CHECK_FALSE(c.subcritical);
  CHECK_FALSE(subcriticality(VectorXd::Constant(1, 0.2)).applicable);
}

TEST_CASE("state and unknown conversions are inverse") {
  const EinsteinSpec s = isotropic();
  const VectorXd xi = 40.0 * kDir;
  const VectorXcd X = random_state(3, 20);
  for (double t : {1e-3, 0.2, 1.0}) CHECK((einstein_state(s, xi, t, einstein_unknown(s, xi, t, X)) - X).norm() < 1e-12 * X.norm());
}

TEST_CASE("projection removes the constraint residuals") {
  const EinsteinSpec s = isotropic();
  const VectorXd xi = 7.0 * kDir;
  for (auto g : {EinsteinGauge::zero_shift, EinsteinGauge::harmonic}) {
    const VectorXcd X = project_constraints(random_state(11, 20), 0.5, xi, s, g);
    CHECK(X.norm() > 0.1);
    CHECK(constraint_residuals(X, 0.5, xi, s, g).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(constraint_residuals(random_state(12, 20), 0.5, xi, s, g).cwiseAbs().maxCoeff() > 1e-3);
  }
}

TEST_CASE("gauge transformation lands in the harmonic gauge") {
  const EinsteinSpec s = isotropic();
  const VectorXd xi = 5.0 * kDir;
  const double t = 0.8;
  const VectorXcd X = project_constraints(random_state(5, 20), t, xi, s, EinsteinGauge::zero_shift);
  const VectorXcd Y = einstein_to_harmonic(X, t, xi, s);
  CHECK(constraint_residuals(Y, t, xi, s, EinsteinGauge::harmonic).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constraints propagate along a short evolution") {
  const EinsteinSpec s = isotropic();
  const VectorXd xi = 2.0 * kDir;
  const double t0 = 1.0, t1 = 0.1;
  const VectorXcd X0 = project_constraints(random_state(9, 20), t0, xi, s, EinsteinGauge::zero_shift);
  OdeRhs f = [&](double t, const VectorXcd& X, VectorXcd& dX) {
    dX = einstein_operator(s, xi, t, EinsteinGauge::zero_shift) * X / t;
  };
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-16;
  const VectorXcd X1 = dop853(f, t0, t1, X0, opt);
  CHECK(constraint_residuals(X1, t1, xi, s, EinsteinGauge::zero_shift).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Z_H factor is reversible: B_G+ = B_G-") {
  const EinsteinSpec s = isotropic();
  const SystemBundle b = build_einstein(s);
  const VectorXd xi = 300.0 * kDir;
  const FrequencyModel fm = b.at(xi);
  SpeedPartition part;
  part.groups = b.partition_hint.value();
  const double tH = 1.0 / (s.rho0 * fm.zfac);
  std::vector<double> ts;
  for (int k = 0; k <= 8; ++k) ts.push_back(tH * std::pow(1.0 / tH, k / 8.0));
  CHECK(reversible_regime(fm.h, part, ts));
  // (1 + t H'/H) / 2 by a finite difference of log H.
  const double t = 0.4, h = 1e-6;
  auto logH = [&](double tt) {
    double h2 = 0.0;
    for (int a = 0; a < 3; ++a) h2 += std::pow(tt, 2.0 * s.ell(a)) * xi(a) * xi(a);
    return 0.5 * std::log(h2);
  };
  CHECK(einstein_bg(s, xi, t) == doctest::Approx(0.5 * (1.0 + t * (logH(t + h) - logH(t - h)) / (2 * h))).epsilon(1e-8));
}

TEST_CASE("Z_P order selection") {
  const EinsteinSpec s = isotropic();
  const PZoneData sub = build_einstein(s).at(2.0 * kDir).pzone();
  CHECK(select_m_p(sub.a_P, sub.jordan) == 0);
  EinsteinSpec ns;
  ns.ell = (VectorXd(3) << -0.9, -0.9, 0.8).finished();
  ns.ell_phi = 0.0;
  const PZoneData nz = build_einstein(ns).at(2.0 * kDir).pzone();
  CHECK(nz.a_P == doctest::Approx(-0.8));
  CHECK(select_m_p(nz.a_P, nz.jordan) == 17);
}
