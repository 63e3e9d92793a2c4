#include "dhs/jet.hpp"

#include <doctest.h>

#include <cmath>

using namespace dhs;

TEST_CASE("jet arithmetic matches Taylor coefficients") {
  const double t0 = 0.7;
  const JetC t = JetC::variable(t0);
  const JetC f = exp(t) * pow(t, 1.5) / (JetC(1.0) + t);
  // Second derivative against a finite difference.
  auto g = [](double x) { return std::exp(x) * std::pow(x, 1.5) / (1.0 + x); };
  const double h = 1e-4;
  const double d2 = (g(t0 + h) - 2 * g(t0) + g(t0 - h)) / (h * h);
  CHECK(std::abs(f.value() - g(t0)) < 1e-14);
  CHECK(std::abs(jet_dt(jet_dt(f)).value().real() - d2) < 1e-6);
}

TEST_CASE("log and exp are inverse") {
  const JetC t = JetC::variable(1.3);
  const JetC f = log(exp(t * t));
  const JetC g = t * t;
  for (int k = 0; k < kJetSize; ++k) CHECK(std::abs(f.c[k] - g.c[k]) < 1e-12);
}

TEST_CASE("jet matrix inverse") {
  const JetC t = JetC::variable(0.4);
  JetMatrix m(2, 2);
  m(0, 0) = JetC(1.0) + t;
  m(0, 1) = t * t;
  m(1, 0) = JetC(0.5);
  m(1, 1) = JetC(2.0) - t;
  const JetMatrix p = m * jet_inverse(m);
  for (int k = 0; k < kJetSize; ++k) {
    CHECK(std::abs(p(0, 0).c[k] - (k == 0 ? 1.0 : 0.0)) < 1e-12);
    CHECK(std::abs(p(0, 1).c[k]) < 1e-12);
  }
}
