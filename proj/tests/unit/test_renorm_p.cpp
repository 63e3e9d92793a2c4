#include "dhs/presets.hpp"
#include "dhs/renorm_p.hpp"

#include <doctest.h>

#include <random>

using namespace dhs;

namespace {

PHMatrix b_over_z(const JordanSpec& j) {
  const MatrixXcd B = j.matrix();
  PHMatrix out = ph_zero(B.rows(), B.cols());
  for (Eigen::Index r = 0; r < B.rows(); ++r)
    for (Eigen::Index c = 0; c < B.cols(); ++c)
      if (B(r, c) != cplx(0.0)) out(r, c) = PHExpansion::monomial(B(r, c), Exponent(-1));
  return out;
}

PHMatrix flow_residual(const PHMatrix& N, const JordanSpec& j, const PHMatrix& Y) {
  const PHMatrix Bz = b_over_z(j);
  PHMatrix r = ph_derivative(N);
  const PHMatrix nb = ph_multiply(N, Bz), bn = ph_multiply(Bz, N);
  for (Eigen::Index k = 0; k < r.size(); ++k) r.data()[k] += nb.data()[k] - bn.data()[k] - Y.data()[k];
  return r;
}

// Plan identities mix products of floating coefficients, so exact cancellation holds only to rounding.
bool negligible(const PHMatrix& m, double tol = 1e-13) {
  for (Eigen::Index k = 0; k < m.size(); ++k)
    if (m.data()[k].max_abs_coeff() > tol) return false;
  return true;
}

JordanSpec two_blocks() {
  JordanSpec j;
  j.blocks = {{cplx(-0.5), 2, Exponent::rational(-1, 2)}, {cplx(0.5), 1, Exponent::rational(1, 2)}};
  return j;
}

}  // namespace

TEST_CASE("commutator flow, simple and resonant forcing") {
  const JordanSpec j = two_blocks();
  PHMatrix Y = ph_zero(3, 3);
  Y(0, 0) = PHExpansion::monomial(1.0, Exponent(0));
  Y(2, 1) = PHExpansion::monomial(cplx(0.0, 2.0), Exponent::rational(1, 3));
  // (0, 2) has shift b_2 - b_0 = 1, so z^{-2} is resonant.
  Y(0, 2) = PHExpansion::monomial(1.0, Exponent(-2));
  Y(1, 0) = PHExpansion::monomial(0.5, Exponent(-1), 1);
  const PHMatrix N = solve_commutator_flow(Y, j);
  CHECK(ph_is_empty(flow_residual(N, j, Y)));
  CHECK(N(0, 2).max_logpow() == 1);
}

TEST_CASE("commutator flow log cap names the entry") {
  const JordanSpec j = two_blocks();
  PHMatrix Y = ph_zero(3, 3);
  Y(1, 0) = PHExpansion::monomial(1.0, Exponent(-1), 2);
  try {
    (void)solve_commutator_flow(Y, j, 2);
    FAIL("expected LogCapExceeded");
  } catch (const LogCapExceeded& e) {
    CHECK(std::string(e.what()).find("(1,0)") != std::string::npos);
  }
}

TEST_CASE("order selection") {
  JordanSpec j;
  j.blocks = {{cplx(0.0), 1, Exponent(0)}};
  CHECK(select_m_p(0.0, j) == 0);
  CHECK(select_m_p(-1.0 / 3.0, j) == 0);
  j.blocks.push_back({cplx(-1.0), 1, Exponent(-1)});
  // spread 1: need m (a+1) + a - 1 > -0.95.
  CHECK(select_m_p(0.0, j) == 1);
  CHECK(select_m_p(-0.5, j) == 2);
}

TEST_CASE("jordanize recovers a defective block") {
  MatrixXcd J = MatrixXcd::Zero(3, 3);
  J(0, 0) = J(1, 1) = -0.5;
  J(0, 1) = 1.0;
  J(2, 2) = 2.0;
  MatrixXcd S(3, 3);
  S << 1, 2, 0, 0, 1, 1, 1, 0, 3;
  const MatrixXcd A = S.inverse() * J * S;
  const NumericJordan nj = jordanize(A);
  CHECK(nj.spec.n() == 3);
  CHECK((nj.M * A * nj.M_inv - nj.spec.matrix()).norm() < 1e-8);
  int largest = 0;
  for (const auto& b : nj.spec.blocks) largest = std::max(largest, b.size);
  CHECK(largest == 2);
}

TEST_CASE("wave plan: stage and plan identities, inverse map") {
  const SystemBundle b = build_wave(wave_default());
  const FrequencyModel fm = b.at(VectorXd::Constant(1, 30.0));
  const PZoneData pz = fm.pzone();
  for (int m = 1; m <= 3; ++m) {
    const PRenormPlan plan = build_p_renorm(pz, m);
    CHECK(negligible(p_plan_residual(plan)));
    for (int k = 1; k <= m; ++k) CHECK(negligible(p_stage_residual(plan, k)));
    CHECK(plan.remainder_order() == doctest::Approx(m));
    const VectorXcd U = (VectorXcd(2) << cplx(1.0, 0.5), cplx(-0.3, 2.0)).finished();
    for (double z : {1e-3, 0.05}) CHECK((renormalized_p_inverse(plan, renormalized_p(plan, U, z), z) - U).norm() < 1e-12);
  }
}

TEST_CASE("E_P solves dE/dz = -z^{-1} E B") {
  const JordanSpec j = two_blocks();
  const double z = 0.37, h = 1e-6;
  const MatrixXcd dE = (ep_factor(j, z + h) - ep_factor(j, z - h)) / (2 * h);
  CHECK((dE + ep_factor(j, z) * j.matrix() / z).norm() < 1e-7);
  CHECK((ep_factor(j, z) * ep_factor(j, z, true) - MatrixXcd::Identity(3, 3)).norm() < 1e-13);
}
