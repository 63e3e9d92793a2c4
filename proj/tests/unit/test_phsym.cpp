#include "dhs/phsym.hpp"

#include <doctest.h>

#include <cmath>

using namespace dhs;

namespace {
const cplx kI(0.0, 1.0);

// Numerical derivative of an expansion by a centered difference in log z.
cplx numeric_derivative(const PHExpansion& e, double z) {
  const double h = 1e-5;
  return (e.evaluate(z * std::exp(h)) - e.evaluate(z * std::exp(-h))) / (2.0 * h * z);
}
}  // namespace

TEST_CASE("exponents recover small rationals exactly") {
  const Exponent a = Exponent::from_double(1.0 / 3.0);
  CHECK(a.exact());
  CHECK(a.num() == 1);
  CHECK(a.den() == 3);
  const Exponent b = a + Exponent::rational(2, 3);
  CHECK(b.exact());
  CHECK(b.num() == 1);
  CHECK(b.den() == 1);
  CHECK(same(b, Exponent(1)));
  CHECK_FALSE(Exponent::from_double(std::sqrt(2.0)).exact());
  CHECK(Exponent::rational(-4, 6).str() == "-2/3");
}

TEST_CASE("like terms merge and cancel") {
  PHExpansion e = PHExpansion::monomial(2.0, Exponent(1)) + PHExpansion::monomial(3.0, Exponent(1));
  REQUIRE(e.size() == 1);
  CHECK(e.terms()[0].coeff == cplx(5.0));
  e -= PHExpansion::monomial(5.0, Exponent(1));
  CHECK(e.empty());
}

TEST_CASE("products add powers and log powers") {
  const PHExpansion a = PHExpansion::monomial(2.0, Exponent::rational(1, 2), 1);
  const PHExpansion b = PHExpansion::monomial(kI, Exponent::rational(-1, 3), 2);
  const PHExpansion c = a * b;
  REQUIRE(c.size() == 1);
  CHECK(same(c.terms()[0].power, Exponent::rational(1, 6)));
  CHECK(c.terms()[0].logpow == 3);
  for (double z : {0.01, 0.3, 2.0}) CHECK(std::abs(c.evaluate(z) - a.evaluate(z) * b.evaluate(z)) < 1e-14 * std::abs(c.evaluate(z)));
}

TEST_CASE("combine dispatches to the three operations") {
  const PHExpansion a = PHExpansion::monomial(1.0, Exponent(2));
  const PHExpansion b = PHExpansion::monomial(3.0, Exponent(-1));
  CHECK(combine(a, b, CombineMode::add) == a + b);
  CHECK(combine(a, b, CombineMode::multiply) == a * b);
  CHECK(combine(a, b, CombineMode::scale, 4.0) == a * cplx(4.0));
}

TEST_CASE("truncation orders propagate through sums and products") {
  PHExpansion a = PHExpansion::monomial(1.0, Exponent(0)) + PHExpansion::monomial(1.0, Exponent(2));
  a.with_order(2.0);
  CHECK(a.size() == 1);
  CHECK(a.order() == doctest::Approx(2.0));
  const PHExpansion b = PHExpansion::monomial(1.0, Exponent(-1));
  const PHExpansion c = a * b;
  CHECK(c.order() == doctest::Approx(1.0));
  const PHExpansion d = truncate(PHExpansion::monomial(1.0, Exponent(1)) + PHExpansion::monomial(1.0, Exponent(3)), 2.0);
  CHECK(d.size() == 1);
  CHECK(d.order() == doctest::Approx(3.0));
}

TEST_CASE("antiderivative inverts the derivative") {
  const PHExpansion g = PHExpansion::monomial(1.5, Exponent::rational(-1, 2), 2) +
                        PHExpansion::monomial(kI, Exponent(-3), 1) + PHExpansion::monomial(2.0, Exponent(-1));
  const PHExpansion I = antiderivative(g);
  for (double z : {0.05, 0.7, 3.0}) {
    const cplx want = g.evaluate(z);
    CHECK(std::abs(derivative(I).evaluate(z) - want) < 1e-12 * (1.0 + std::abs(want)));
    CHECK(std::abs(numeric_derivative(I, z) - want) < 1e-7 * (1.0 + std::abs(want)));
  }
  // z^{-1} integrates to log z.
  const PHExpansion L = antiderivative(PHExpansion::monomial(1.0, Exponent(-1)));
  REQUIRE(L.size() == 1);
  CHECK(L.terms()[0].logpow == 1);
}

TEST_CASE("twisted antiderivative solves f' + q f / z = g, with a log at resonance") {
  for (double q : {0.5, -1.25, 2.0}) {
    const PHExpansion g = PHExpansion::monomial(1.0, Exponent(0)) + PHExpansion::monomial(kI, Exponent::rational(-1, 2), 1) +
                          PHExpansion::monomial(1.0, Exponent::from_double(-1.0 - q));  // resonant term
    const PHExpansion f = twisted_antiderivative(g, q, Exponent::from_double(q));
    const PHExpansion lhs = derivative(f) + shift_power(f, Exponent(-1)) * cplx(q);
    CHECK((lhs - g).empty());
    CHECK(f.max_logpow() >= 1);
  }
}

TEST_CASE("log cap is enforced") {
  const PHExpansion g = PHExpansion::monomial(1.0, Exponent(-1), 3);
  CHECK_THROWS_AS(antiderivative(g, 3), LogCapExceeded);
  CHECK_NOTHROW(antiderivative(g, 4));
}

TEST_CASE("matrix helpers") {
  PHMatrix a = ph_identity(2);
  a(0, 1) = PHExpansion::monomial(1.0, Exponent(1));
  const PHMatrix b = ph_multiply(a, a);
  CHECK(std::abs(ph_evaluate(b, 0.5)(0, 1) - 1.0) < 1e-15);
  CHECK(ph_derivative(a)(0, 1) == PHExpansion(1.0));
  CHECK(ph_is_empty(ph_zero(3, 3)));
  CHECK_FALSE(ph_is_empty(a));
}
