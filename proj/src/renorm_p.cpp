#include "dhs/renorm_p.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace dhs {

namespace {

std::optional<Exponent> exact_shift(const JordanSpec& J, int i, int j) {
  auto bi = J.exact_diag(i);
  auto bj = J.exact_diag(j);
  if (bi && bj) return *bj - *bi;
  return std::nullopt;
}

PHMatrix diagonal_part(const PHMatrix& R) {
  PHMatrix D = ph_zero(R.rows(), R.cols());
  for (Eigen::Index i = 0; i < R.rows(); ++i) D(i, i) = R(i, i);
  return D;
}

PHMatrix add(const PHMatrix& a, const PHMatrix& b) {
  PHMatrix r = a;
  for (Eigen::Index k = 0; k < r.size(); ++k) r.data()[k] += b.data()[k];
  return r;
}

PHMatrix sub(const PHMatrix& a, const PHMatrix& b) {
  PHMatrix r = a;
  for (Eigen::Index k = 0; k < r.size(); ++k) r.data()[k] -= b.data()[k];
  return r;
}

// [N, z^{-1} B] with B in Jordan form.
PHMatrix commutator_with_B(const PHMatrix& N, const JordanSpec& J) {
  const MatrixXcd B = J.matrix();
  const int n = J.n();
  PHMatrix r = ph_zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      PHExpansion acc;
      for (int k = 0; k < n; ++k) {
        if (B(k, j) != cplx(0.0)) acc += N(i, k) * B(k, j);
        if (B(i, k) != cplx(0.0)) acc -= N(k, j) * B(i, k);
      }
      r(i, j) = shift_power(acc, Exponent(-1));
    }
  }
  return r;
}

}  // namespace

PHMatrix solve_commutator_flow(const PHMatrix& Y, const JordanSpec& J, int logpow_cap) {
  const int n = J.n();
  if (Y.rows() != n || Y.cols() != n) throw std::invalid_argument("solve_commutator_flow: shape");
  if (logpow_cap < 0) logpow_cap = 2 * n;
  PHMatrix N = ph_zero(n, n);
  for (int i = n - 1; i >= 0; --i) {
    for (int j = 0; j < n; ++j) {
      PHExpansion g = Y(i, j);
      PHExpansion coupling;
      if (i + 1 < n && J.coupled(i)) coupling += N(i + 1, j);
      if (j >= 1 && J.coupled(j - 1)) coupling -= N(i, j - 1);
      if (!coupling.empty() || !coupling.exact()) g += shift_power(coupling, Exponent(-1));
      const cplx q = J.diag(j) - J.diag(i);
      try {
        N(i, j) = twisted_antiderivative(g, q, exact_shift(J, i, j), logpow_cap);
      } catch (const LogCapExceeded& e) {
        std::ostringstream os;
        os << e.what() << " in commutator flow entry (" << i << "," << j << "), chain fed by ("
           << i + 1 << "," << j << ") and (" << i << "," << j - 1 << ")";
        throw LogCapExceeded(os.str());
      }
    }
  }
  return N;
}

PRenormPlan build_p_renorm(const PZoneData& p, int m, int logpow_cap) {
  if (m < 0) throw std::invalid_argument("build_p_renorm: m < 0");
  const int n = p.jordan.n();
  PRenormPlan plan;
  plan.m = m;
  plan.a_P = p.a_P;
  plan.jordan = p.jordan;
  plan.R_P = p.R_P;
  plan.Q = ph_identity(n);
  plan.Dsum = ph_zero(n, n);
  PHMatrix Nsum = ph_zero(n, n);
  PHMatrix R = p.R_P;
  for (int k = 1; k <= m; ++k) {
    PHMatrix Dk = diagonal_part(R);
    PHMatrix Y = sub(Dk, R);
    PHMatrix Nk = solve_commutator_flow(Y, p.jordan, logpow_cap);
    Nsum = add(Nsum, Nk);
    PHMatrix Rn = sub(sub(ph_multiply(Nk, p.R_P), ph_multiply(Dk, Nsum)), ph_multiply(plan.Dsum, Nk));
    plan.Dsum = add(plan.Dsum, Dk);
    plan.D.push_back(std::move(Dk));
    plan.N.push_back(std::move(Nk));
    R = std::move(Rn);
  }
  plan.Q = add(ph_identity(n), Nsum);
  plan.R_m = std::move(R);
  return plan;
}

PHMatrix p_stage_residual(const PRenormPlan& plan, int k) {
  if (k < 1 || k > plan.m) throw std::out_of_range("p_stage_residual");
  // Rebuild Y at stage k from the previous remainder.
  PRenormPlan prev;
  PZoneData pd;
  pd.jordan = plan.jordan;
  pd.R_P = plan.R_P;
  pd.a_P = plan.a_P;
  prev = build_p_renorm(pd, k - 1);
  const PHMatrix Y = sub(plan.D[k - 1], prev.R_m);
  const PHMatrix& N = plan.N[k - 1];
  return sub(add(ph_derivative(N), commutator_with_B(N, plan.jordan)), Y);
}

PHMatrix p_plan_residual(const PRenormPlan& plan) {
  const PHMatrix& Q = plan.Q;
  // dQ/dz + [Q, z^{-1}B] + Q R_P - (sum D) Q - R_m
  PHMatrix r = add(ph_derivative(Q), commutator_with_B(Q, plan.jordan));
  r = add(r, ph_multiply(Q, plan.R_P));
  r = sub(r, ph_multiply(plan.Dsum, Q));
  return sub(r, plan.R_m);
}

std::string PRenormPlan::dump() const {
  std::ostringstream os;
  os << "p-plan m=" << m << " a_P=" << a_P << " remainder_order=" << remainder_order() << "\n";
  auto dump_matrix = [&](const std::string& name, const PHMatrix& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j)
        if (!M(i, j).empty()) os << "  " << name << "[" << i << "," << j << "] = " << M(i, j).str() << "\n";
  };
  for (int k = 0; k < m; ++k) {
    dump_matrix("D" + std::to_string(k + 1), D[k]);
    dump_matrix("N" + std::to_string(k + 1), N[k]);
  }
  dump_matrix("R" + std::to_string(m), R_m);
  return os.str();
}

int select_m_p(double a_P, const JordanSpec& jordan, double margin) {
  const double spread = jordan.spread();
  for (int m = 0; m < 10000; ++m)
    if (m * (a_P + 1.0) + a_P - spread > -1.0 + margin) return m;
  throw std::runtime_error("select_m_p: no admissible order");
}

VectorXcd renormalized_p(const PRenormPlan& plan, const VectorXcd& U_P, double z) {
  return ep_factor(plan.jordan, z) * (ph_evaluate(plan.Q, z) * U_P);
}

VectorXcd renormalized_p_inverse(const PRenormPlan& plan, const VectorXcd& V, double z) {
  const VectorXcd w = ep_factor(plan.jordan, z, true) * V;
  return ph_evaluate(plan.Q, z).partialPivLu().solve(w);
}

MatrixXcd p_renormalized_coefficient(const PRenormPlan& plan, const PZoneData& p, double z) {
  const MatrixXcd E = ep_factor(plan.jordan, z);
  const MatrixXcd Ei = ep_factor(plan.jordan, z, true);
  if (plan.m == 0) return E * p.R_P_numeric(z) * Ei;
  const MatrixXcd Q = ph_evaluate(plan.Q, z);
  MatrixXcd R = ph_evaluate(plan.R_m, z);
  if (!std::isinf(ph_order(p.R_P)) && p.R_P_numeric) {
    R += Q * (p.R_P_numeric(z) - ph_evaluate(p.R_P, z));
  }
  const MatrixXcd inner = ph_evaluate(plan.Dsum, z) + R * Q.inverse();
  return E * inner * Ei;
}

NumericJordan jordanize(const MatrixXcd& A, double tol) {
  const int n = int(A.rows());
  Eigen::ComplexEigenSolver<MatrixXcd> es(A);
  const VectorXcd ev = es.eigenvalues();
  std::vector<int> used(n, 0);
  NumericJordan out;
  MatrixXcd P(n, n);
  int col = 0;
  for (int i = 0; i < n; ++i) {
    if (used[i]) continue;
    std::vector<int> cluster{i};
    used[i] = 1;
    for (int j = i + 1; j < n; ++j)
      if (!used[j] && std::abs(ev(j) - ev(i)) < tol * std::max(1.0, std::abs(ev(i)))) {
        cluster.push_back(j);
        used[j] = 1;
      }
    cplx lam = 0.0;
    for (int j : cluster) lam += ev(j);
    lam /= double(cluster.size());
    const int k = int(cluster.size());
    const MatrixXcd S = A - lam * MatrixXcd::Identity(n, n);
    Eigen::FullPivLU<MatrixXcd> lu(S);
    lu.setThreshold(std::sqrt(tol));
    const int geo = int(lu.dimensionOfKernel());
    if (geo == k) {
      const MatrixXcd K = lu.kernel();
      for (int c = 0; c < k; ++c) {
        P.col(col++) = K.col(c);
        out.spec.blocks.push_back({lam, 1, std::nullopt});
      }
    } else if (geo == 1) {
      MatrixXcd Sk = MatrixXcd::Identity(n, n);
      for (int r = 0; r < k; ++r) Sk = Sk * S;
      Eigen::FullPivLU<MatrixXcd> luk(Sk);
      luk.setThreshold(std::sqrt(tol));
      const MatrixXcd Kk = luk.kernel();
      // pick a top vector not annihilated by S^{k-1}
      MatrixXcd Sk1 = MatrixXcd::Identity(n, n);
      for (int r = 0; r < k - 1; ++r) Sk1 = Sk1 * S;
      int best = 0;
      double bn = -1.0;
      for (int c = 0; c < Kk.cols(); ++c) {
        const double nn = (Sk1 * Kk.col(c)).norm();
        if (nn > bn) {
          bn = nn;
          best = c;
        }
      }
      std::vector<VectorXcd> chain(k);
      chain[k - 1] = Kk.col(best);
      for (int r = k - 2; r >= 0; --r) chain[r] = S * chain[r + 1];
      for (int r = 0; r < k; ++r) P.col(col++) = chain[r];
      out.spec.blocks.push_back({lam, k, std::nullopt});
    } else {
      throw std::runtime_error("jordanize: mixed Jordan structure within one eigenvalue cluster is not supported");
    }
  }
  out.M_inv = P;
  out.M = P.inverse();
  return out;
}

}  // namespace dhs
