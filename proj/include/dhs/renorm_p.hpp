#pragma once
// Pseudodifferential-zone renormalization: commutator flow, order-m stack,
// Jordan integrating factor and order selection.

#include "dhs/phsym.hpp"
#include "dhs/sysmodel.hpp"

#include <string>
#include <vector>

namespace dhs {

/// Solves dN/dz + [N, z^{-1} B] = Y entrywise, bottom row first, each row left to right.
/// Throws LogCapExceeded naming the (i, j) entry whose chain hit the cap.
PHMatrix solve_commutator_flow(const PHMatrix& Y, const JordanSpec& jordan, int logpow_cap = -1);

struct PRenormPlan {
  int m = 0;
  double a_P = 0.0;
  JordanSpec jordan;
  std::vector<PHMatrix> D;  // D^(1..m), diagonal
  std::vector<PHMatrix> N;  // N^(1..m)
  PHMatrix Q;               // I + sum N^(k)
  PHMatrix Dsum;            // sum D^(k)
  PHMatrix R_m;             // remainder after m stages
  PHMatrix R_P;             // input remainder
  [[nodiscard]] double remainder_order() const { return m * (a_P + 1.0) + a_P; }
  [[nodiscard]] std::string dump() const;
};

PRenormPlan build_p_renorm(const PZoneData& p, int m, int logpow_cap = -1);

/// dQ/dz + Q (z^{-1}B + R_P) - (z^{-1}B + sum D) Q - R^(m), which must normalize to empty.
PHMatrix p_plan_residual(const PRenormPlan& plan);
/// Residual of the commutator equation at stage k (1-based).
PHMatrix p_stage_residual(const PRenormPlan& plan, int k);

/// E_P(z) = exp(-log z * B_P) for B_P in Jordan form; entries (-log z)^{j-i} z^{-b} / (j-i)!.
template <class Scalar = cplx>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ep_factor(const JordanSpec& jordan, double z,
                                                                 bool inverse = false) {
  const int n = jordan.n();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> E =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  const double L = std::log(z);
  const double sgn = inverse ? 1.0 : -1.0;
  int off = 0;
  for (const auto& b : jordan.blocks) {
    const Scalar base = std::exp(sgn * L * Scalar(b.eigenvalue));
    for (int i = 0; i < b.size; ++i) {
      double term = 1.0;
      for (int k = 0; i + k < b.size; ++k) {
        E(off + i, off + i + k) = base * term;
        term *= sgn * L / double(k + 1);
      }
    }
    off += b.size;
  }
  return E;
}

/// Smallest m >= 0 with m (a_P + 1) + a_P - spread > -1 + margin.
int select_m_p(double a_P, const JordanSpec& jordan, double margin = 0.05);

/// U_Pz = E_P(z) Q(z) U_P and its inverse.
VectorXcd renormalized_p(const PRenormPlan& plan, const VectorXcd& U_P, double z);
VectorXcd renormalized_p_inverse(const PRenormPlan& plan, const VectorXcd& V, double z);

/// Coefficient S(z) of the renormalized equation dW/dz = S(z) W for W = E_P Q U_P.
/// Uses the directly evaluated remainder when m = 0, and adds the truncation tail of R_P
/// when R_P is only known up to a finite order.
MatrixXcd p_renormalized_coefficient(const PRenormPlan& plan, const PZoneData& p, double z);

/// Numeric Jordanizer for constant matrices: clusters eigenvalues at `tol`, returns
/// the Jordan structure and a similarity M with M A M^{-1} = J.
struct NumericJordan {
  JordanSpec spec;
  MatrixXcd M;
  MatrixXcd M_inv;
};
NumericJordan jordanize(const MatrixXcd& A, double tol = 1e-8);

}  // namespace dhs
