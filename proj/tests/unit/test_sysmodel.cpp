#include "dhs/presets.hpp"
#include "dhs/sysmodel.hpp"

#include <doctest.h>

using namespace dhs;

TEST_CASE("frequency scale uses the most anisotropic direction") {
  ScaleProfile s;
  s.d = 2;
  s.ell = (VectorXd(2) << 1.0, -0.5).finished();
  s.lambda = [](double) { return MatrixXd::Identity(2, 2); };
  const VectorXd xi = (VectorXd(2) << 100.0, 10.0).finished();
  // <100>^{1/2} ~ 10 and <10>^{2} ~ 101.
  CHECK(zfac(s, xi) == doctest::Approx(101.0));
  const Rescaled r = rescaled(s, 0.25, xi);
  CHECK(r.z == doctest::Approx(101.0 * 0.25));
  CHECK(r.H == doctest::Approx(std::sqrt(std::pow(0.25, 2.0) * 1e4 + std::pow(0.25, -1.0) * 100.0)));
}

TEST_CASE("ellipticity violation is reported") {
  ScaleProfile s;
  s.d = 1;
  s.ell = VectorXd::Constant(1, 1.0);
  s.lambda = [](double) { return MatrixXd::Constant(1, 1, -1.0); };
  CHECK_THROWS_AS(rescaled(s, 0.5, VectorXd::Constant(1, 3.0)), std::domain_error);
}

TEST_CASE("zones and the cutoff ramp") {
  const ZoneParams zp{0.1};
  CHECK(zone_of(0.05, zp) == Zone::P);
  CHECK(zone_of(1.0, zp) == Zone::I);
  CHECK(zone_of(20.0, zp) == Zone::H);
  CHECK(cutoff_chi(4.0, 0.1) == 0.0);
  CHECK(cutoff_chi(10.0, 0.1) == 1.0);
  const double mid = cutoff_chi(7.5, 0.1);
  CHECK(mid == doctest::Approx(0.5));
  const double h = 1e-6;
  CHECK(cutoff_chi_dz(6.3, 0.1) == doctest::Approx((cutoff_chi(6.3 + h, 0.1) - cutoff_chi(6.3 - h, 0.1)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("jordan spec matrix and spread") {
  JordanSpec j;
  j.blocks = {{cplx(-0.5), 2, Exponent::rational(-1, 2)}, {cplx(1.0), 1, Exponent(1)}};
  const MatrixXcd B = j.matrix();
  CHECK(B.rows() == 3);
  CHECK(B(0, 1) == cplx(1.0));
  CHECK(B(1, 2) == cplx(0.0));
  CHECK(j.coupled(0));
  CHECK_FALSE(j.coupled(1));
  CHECK(j.spread() == doctest::Approx(1.5));
}

TEST_CASE("wave preset passes bundle validation") {
  const ValidationReport v = validate_bundle(build_wave(wave_default()));
  CHECK(v.ok);
  CHECK(v.zones_contained);
  CHECK(v.violations.empty());
  CHECK(v.ellipticity_margin > 0.5);
}

TEST_CASE("validation grid counts") {
  ValidationGrid g;
  CHECK(g.directions(3).size() == 18);
  const auto ts = g.times(1.0);
  CHECK(ts.front() == doctest::Approx(1e-4));
  CHECK(ts.back() == doctest::Approx(1.0));
}
