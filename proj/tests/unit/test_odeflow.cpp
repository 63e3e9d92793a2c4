#include "dhs/odeflow.hpp"
#include "dhs/presets.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace dhs;

TEST_CASE("dop853 integrates an oscillator both ways") {
  const cplx w(0.0, 7.0);
  OdeRhs f = [w](double, const VectorXcd& y, VectorXcd& dy) { dy = w * y; };
  VectorXcd y0 = VectorXcd::Constant(1, 1.0);
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-15;
  OdeStats st;
  const VectorXcd y1 = dop853(f, 0.0, 3.0, y0, opt, &st);
  CHECK(std::abs(y1(0) - std::exp(w * 3.0)) < 1e-10);
  CHECK(st.steps > 0);
  const VectorXcd back = dop853(f, 3.0, 0.0, y1, opt);
  CHECK(std::abs(back(0) - 1.0) < 1e-10);
}

TEST_CASE("dop853 reports step collapse on a blow-up") {
  OdeRhs f = [](double, const VectorXcd& y, VectorXcd& dy) { dy = y.cwiseProduct(y); };
  OdeOptions opt;
  opt.max_steps = 100000;
  CHECK_THROWS(dop853(f, 0.0, 2.0, VectorXcd::Constant(1, 1.0), opt));
}

TEST_CASE("limit at zero and scattering for an integrable kernel") {
  // W' = c z^{-1/2} W has W(z) = W(0) exp(2 c sqrt z).
  const cplx c(0.3, -0.8);
  IntegrableKernel k;
  k.S = [c](double z) { return MatrixXcd::Constant(1, 1, c / std::sqrt(z)); };
  k.eps = 0.5;
  const VectorXcd W1 = VectorXcd::Constant(1, std::exp(2.0 * c));
  const LimitResult lr = limit_at_zero(k, 1.0, W1, 1e-10);
  CHECK(std::abs(lr.u(0) - 1.0) < 1e-8);
  CHECK(lr.error < 1e-8);
  const VectorXcd W = scatter_from_zero(k, VectorXcd::Constant(1, 1.0), 1.0, 1e-10);
  CHECK(std::abs(W(0) - W1(0)) < 1e-8);
}

TEST_CASE("evolve records outputs") {
  EvolutionProblem p;
  p.coefficient = [](double z) { return MatrixXcd::Constant(1, 1, 1.0 / z); };
  std::vector<TracePoint> tr;
  const VectorXcd U = evolve(p, 1.0, 4.0, VectorXcd::Constant(1, 1.0), 1e-11, {2.0, 3.0}, &tr);
  CHECK(std::abs(U(0) - 4.0) < 1e-9);
  REQUIRE(tr.size() == 2);
  CHECK(std::abs(tr[0].U(0) - 2.0) < 1e-9);
  CHECK(std::abs(tr[1].U(0) - 3.0) < 1e-9);
}

TEST_CASE("sobolev table on synthetic data") {
  const std::vector<double> xs = {1.0, 10.0};
  const std::vector<double> w = {1.0, 1.0};
  const std::vector<VectorXcd> u = {VectorXcd::Zero(1), VectorXcd::Zero(1)};
  const std::vector<std::vector<VectorXcd>> by_t = {{VectorXcd::Constant(1, 1.0), VectorXcd::Constant(1, 1.0)},
                                                    {VectorXcd::Constant(1, 0.1), VectorXcd::Constant(1, 0.0)}};
  const SobolevTable tab = sobolev_convergence(xs, w, u, by_t, {0.1, 0.01}, 1.0, 0.0);
  CHECK(tab.distance[0] == doctest::Approx(2.0 + 101.0));
  CHECK(tab.distance[1] == doctest::Approx(0.02));
  CHECK(tab.monotone);
  CHECK(tab.final_ratio == doctest::Approx(0.02 / 103.0));
}

TEST_CASE("wave pipeline: scattering then asymptotics returns the data") {
  const SystemBundle b = build_wave(wave_default());
  for (double x : {0.5, 20.0, 3000.0}) {
    const VectorXd xi = VectorXd::Constant(1, x);
    PipelineData d;
    d.asymptotic = (VectorXcd(2) << cplx(1.0, 0.2), cplx(-0.4, 0.9)).finished();
    const FrequencySolve fwd = full_pipeline(b, d, xi);
    PipelineData back;
    back.at_T = fwd.U_T;
    const FrequencySolve bwd = full_pipeline(b, back, xi);
    CHECK((bwd.u_A - *d.asymptotic).norm() < 1e-8);
    CHECK(fwd.status == "ok");
  }
}

TEST_CASE("the Z_P trace converges to u_A") {
  const SystemBundle b = build_wave(wave_default());
  const VectorXd xi = VectorXd::Constant(1, 100.0);
  PipelineData d;
  d.asymptotic = VectorXcd::Unit(2, 1);
  PipelineOptions o;
  o.outputs = {1e-2, 1e-3, 1e-4};
  const FrequencySolve fs = full_pipeline(b, d, xi, o);
  REQUIRE(fs.traces.size() == 3);
  auto traces = fs.traces;
  std::sort(traces.begin(), traces.end(), [](const SolveTrace& a, const SolveTrace& b) { return a.t > b.t; });
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& tr : traces) {
    const double dev = (tr.U_A - *d.asymptotic).norm();
    CHECK(dev < prev);
    prev = dev;
  }
}
