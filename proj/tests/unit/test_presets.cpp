#include "dhs/presets.hpp"

#include <doctest.h>

#include <cmath>

using namespace dhs;

// Reference values from an independent arbitrary-precision evaluation (40 digits).
TEST_CASE("1F1 against frozen reference values") {
  struct Ref {
    double a, b;
    cplx x, want;
  };
  const Ref refs[] = {
      {0.5, 1.5, {0.0, 100.0}, {0.060112518481344435, 0.058367089992962334}},
      {-0.25, 0.5, {0.0, 50.0}, {3.5495609100432865, -1.4572336885202352}},
      {1.3, 1.3, {30.0, 0.0}, {10686474581524.462, 0.0}},
      {-1.0 / 3.0, 1.0 / 3.0, {0.0, 2000.0}, {21.583123715396652, -12.467365979459192}},
      {0.25, 0.75, {3.0, -4.0}, {-2.5921315997499061, 0.7441673064948865}},
  };
  for (const auto& r : refs) {
    const cplx got = kummer_1f1(r.a, r.b, r.x);
    CHECK(std::abs(got - r.want) / std::abs(r.want) < 1e-10);
  }
  CHECK_THROWS_AS(kummer_1f1(0.5, -2.0, 1.0), std::domain_error);
}

TEST_CASE("model equation: closed form against frozen values and direct integration") {
  // l = 1, c = 3, phi0 = phi1 = 1, t = 1.
  const std::pair<double, cplx> refs[] = {{1.0, {1.4324331861085169, -1.8850904913080022}},
                                          {10.0, {5.2567784144482512, 3.6422514044962009}},
                                          {100.0, {16.348786510477845, -8.5384963047148323}}};
  for (const auto& [xi, want] : refs) {
    const auto ex = model_wave_exact(1, 3.0, 1.0, 1.0, 1.0, xi);
    const auto nu = model_wave_numeric(1.0, 3.0, 1.0, 1.0, 1.0, xi);
    CHECK(std::abs(ex.first - want) / std::abs(want) < 1e-11);
    CHECK(std::abs(nu.first - want) / std::abs(want) < 1e-8);
    CHECK(std::abs(nu.second - ex.second) / std::abs(ex.second) < 1e-8);
  }
}

TEST_CASE("one-derivative-loss solution constants") {
  const LossSolutionFit q = loss_solution_fit({10.0, 30.0, 100.0, 300.0, 1000.0});
  CHECK(std::abs(q.c0 - 1.0) < 1e-8);
  CHECK(std::abs(q.c1 + 2.0) < 1e-8);
  CHECK(q.max_residual < 1e-8);
}

TEST_CASE("wave auxiliary exponents") {
  const WaveAux aux = wave_aux(wave_default());
  // g(0) = 0.3, h(0) = 0.1: gamma = sqrt(0.49 - 0.4) = 0.3.
  CHECK(std::abs(aux.gamma - 0.3) < 1e-14);
  CHECK(aux.gamma_plus == doctest::Approx(1.6 / 4.0));
  CHECK(aux.gamma_minus == doctest::Approx(1.0 / 4.0));
  CHECK(aux.alpha_min == doctest::Approx(1.0));
  WaveSpec bad = wave_default();
  bad.a = {MatrixXd::Constant(1, 1, -1.0)};
  CHECK_THROWS_AS(build_wave(bad), std::domain_error);
}

TEST_CASE("wave P basis diagonalizes the Fuchsian matrix") {
  for (auto [g0, h0] : {std::pair<cplx, cplx>{0.3, 0.1}, {3.0, 1.0}}) {
    const WavePBasis pb = wave_p_basis(g0, h0);
    MatrixXcd B0(2, 2);
    // t U' = B0 U at leading order for U = (phi / t, phi').
    B0 << -1.0, 1.0, -h0, -g0;
    CHECK((pb.M_P * B0 * pb.M_P_inv - pb.jordan.matrix()).norm() < 1e-12);
  }
}

TEST_CASE("higher-order preset with n = 2 reproduces the wave coefficient") {
  HigherSpec hs;
  hs.n = 2;
  hs.d = 1;
  hs.ell = 1.0;
  hs.rho0 = 0.3;
  // a_{0,2} = a, a_{0,1} = -c, a_{1,0} = -g, a_{0,0} = -h.
  hs.a[{0, {2}}].c = {1.0, 1.0};
  hs.a[{0, {1}}].c = {-0.5};
  hs.a[{1, {0}}].c = {-0.3, -0.2};
  hs.a[{0, {0}}].c = {-0.1, -0.1};
  const SystemBundle hb = build_higher(hs);
  const SystemBundle wb = build_wave(wave_default());
  for (double x : {1.0, 40.0}) {
    const VectorXd xi = VectorXd::Constant(1, x);
    const auto hm = hb.at(xi);
    const auto wm = wb.at(xi);
    for (double t : {0.01, 0.2, 0.9}) CHECK((hm.A(t) - wm.A(t)).norm() < 1e-12 * (1.0 + wm.A(t).norm()));
  }
}

TEST_CASE("higher-order hyperbolicity failure names the point") {
  HigherSpec hs;
  hs.n = 2;
  hs.a[{0, {2}}].c = {-1.0};  // complex characteristic roots
  try {
    (void)build_higher(hs);
    FAIL("expected a hyperbolicity failure");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("hyperbolicity failure") != std::string::npos);
    CHECK(std::string(e.what()).find("omega") != std::string::npos);
  }
}

TEST_CASE("Kasner bundle: P-zone expansion agrees with direct evaluation") {
  KasnerSpec ks;
  ks.ell = VectorXd::Constant(3, -1.0 / 3.0);
  ks.c = VectorXcd::Zero(3);
  const SystemBundle b = build_kasner(ks);
  const VectorXd xi = (VectorXd(3) << 3.0, -1.0, 2.0).finished();
  const PZoneData pz = b.at(xi).pzone();
  for (double z : {1e-3, 0.05}) CHECK((ph_evaluate(pz.R_P, z) - pz.R_P_numeric(z)).norm() < 1e-10 * (1.0 + pz.R_P_numeric(z).norm()));
  CHECK(validate_bundle(b).ok);
}
