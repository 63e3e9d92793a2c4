#include "dhs/presets.hpp"

#include "dhs/renorm_p.hpp"
#include "preset_common.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace dhs {

using detail::kI;

namespace {

// Pieces of the operator t d/dt X = L X. The Z_P constant part is kUnit|kLDiag,
// the Z_H principal part is kUnit|kH2.
enum Part : unsigned {
  kUnit = 1u,   // kappa -> eta and psi -> phi couplings
  kLDiag = 2u,  // +-(l_j - l_i) on the eta and kappa diagonals
  kH2 = 4u,     // -h2 eta_ij and -h2 phi
  kRest = 8u,   // lapse, shift and cross terms
  kAll = 15u,
};

struct NumCtx {
  double t;
  [[nodiscard]] cplx pw(double p) const { return std::pow(t, p); }
  [[nodiscard]] cplx inv(const cplx& x) const { return 1.0 / x; }
  [[nodiscard]] cplx inv1p(const cplx& x) const { return 1.0 / (1.0 + x); }
};

struct JetCtx {
  JetC t;
  [[nodiscard]] JetC pw(double p) const { return pow(t, p); }
  [[nodiscard]] JetC inv(const JetC& x) const { return JetC(1.0) / x; }
  [[nodiscard]] JetC inv1p(const JetC& x) const { return JetC(1.0) / (JetC(1.0) + x); }
};

// t = z / zfac, with 1/(1+h2) as a truncated geometric series.
struct PHCtx {
  double zf;
  int depth;
  double h2_power;
  [[nodiscard]] PHExpansion pw(double p) const {
    return PHExpansion::monomial(std::pow(zf, -p), Exponent::from_double(p));
  }
  [[nodiscard]] PHExpansion inv(const PHExpansion&) const {
    throw std::logic_error("einstein: shift terms have no z-expansion in the zero shift gauge");
  }
  [[nodiscard]] PHExpansion inv1p(const PHExpansion& x) const {
    PHExpansion sum(1.0), term(1.0);
    for (int k = 1; k < depth; ++k) {
      term = term * (-x);
      sum += term;
    }
    return sum.with_order(depth * h2_power);
  }
};

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S, class Ctx>
Mat<S> assemble(const EinsteinSpec& s, const VectorXd& xi, const Ctx& cx, EinsteinGauge gauge, unsigned parts) {
  const int d = s.d, n = 2 * d * d + 2, ph = 2 * d * d, ps = ph + 1;
  const VectorXd& l = s.ell;
  const S zero(0.0);
  Mat<S> L = Mat<S>::Constant(n, n, zero);
  auto eta = [d](int i, int j) { return einstein_eta(d, i, j); };
  auto kap = [d](int i, int j) { return einstein_kappa(d, i, j); };

  std::vector<std::vector<S>> tw(d, std::vector<S>(d, zero));  // t^{2 + l_a + l_b}
  S h2 = zero;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) tw[a][b] = cx.pw(2.0 + l(a) + l(b));
  for (int a = 0; a < d; ++a) h2 += tw[a][a] * cplx(xi(a) * xi(a));

  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (parts & kUnit) L(eta(i, j), kap(i, j)) += S(1.0);
      if (parts & kLDiag) {
        L(eta(i, j), eta(i, j)) += S(l(j) - l(i));
        L(kap(i, j), kap(i, j)) += S(l(i) - l(j));
      }
      if (parts & kH2) L(kap(i, j), eta(i, j)) -= h2;
    }
  if (parts & kUnit) L(ph, ps) += S(1.0);
  if (parts & kH2) L(ps, ph) -= h2;
  if (!(parts & kRest)) return L;

  // Lapse nu as a row acting on X.
  std::vector<S> nu(n, zero);
  const S inv_lapse = cx.inv1p(h2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      if (a == b) nu[eta(b, b)] += h2 * cplx(2.0) * inv_lapse;
      nu[eta(a, b)] -= tw[a][b] * cplx(2.0 * xi(a) * xi(b)) * inv_lapse;
    }

  // Shift chi^j rows; zero in the zero shift gauge.
  std::vector<std::vector<S>> chi(d, std::vector<S>(n, zero));
  const bool harmonic = gauge == EinsteinGauge::harmonic;
  if (harmonic) {
    S den = zero;
    for (int a = 0; a < d; ++a) den += cx.pw(2.0 * l(a)) * cplx(xi(a) * xi(a));
    const S iden = cx.inv(den);
    for (int j = 0; j < d; ++j) {
      const S w = cx.pw(2.0 * l(j)) * cplx(xi(j));
      for (int k = 0; k < n; ++k) chi[j][k] = nu[k] * (-kI * (1.0 + 2.0 * l(j))) * w;
      for (int a = 0; a < d; ++a) {
        chi[j][eta(a, j)] -= cx.pw(l(a) + l(j)) * (4.0 * kI * l(a) * xi(a));
        chi[j][eta(a, a)] += w * (2.0 * kI * l(a));
      }
      chi[j][ph] += w * (4.0 * kI * s.ell_phi);
      for (int k = 0; k < n; ++k) chi[j][k] = chi[j][k] * iden;
    }
  }

  auto add_row = [&](int r, const std::vector<S>& row, const S& c) {
    for (int k = 0; k < n; ++k) L(r, k) += row[k] * c;
  };

  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const int e = eta(i, j), k = kap(i, j);
      if (i == j) {
        add_row(e, nu, S(l(i)));
        add_row(k, nu, S(-l(i)));
      }
      add_row(k, nu, tw[i][j] * cplx(xi(i) * xi(j)));
      for (int a = 0; a < d; ++a) {
        L(k, eta(a, a)) -= tw[i][j] * cplx(xi(i) * xi(j));
        L(k, eta(a, j)) += tw[i][a] * cplx(xi(i) * xi(a));
        L(k, eta(i, a)) += tw[j][a] * cplx(xi(j) * xi(a));
      }
      if (harmonic) {
        add_row(e, chi[j], cx.pw(l(i) - l(j)) * (-0.5 * kI * xi(i)));
        add_row(e, chi[i], cx.pw(l(j) - l(i)) * (-0.5 * kI * xi(j)));
        add_row(k, chi[j], cx.pw(l(i) - l(j)) * (kI * (l(j) - l(i)) * xi(i)));
      }
    }
  add_row(ph, nu, S(s.ell_phi));
  add_row(ps, nu, S(-s.ell_phi));
  return L;
}

ScaleProfile einstein_scale(const EinsteinSpec& s) {
  ScaleProfile sp;
  sp.d = s.d;
  sp.ell = s.ell;
  const int d = s.d;
  sp.lambda = [d](double) { return MatrixXd::Identity(d, d); };
  sp.T = s.T;
  return sp;
}

struct Hdata {
  double H, dH;
};

Hdata hfun(const EinsteinSpec& s, const VectorXd& xi, double t) {
  double h2 = 0.0, dh2 = 0.0;
  for (int a = 0; a < s.d; ++a) {
    const double p = std::pow(t, 2.0 * s.ell(a)) * xi(a) * xi(a);
    h2 += p;
    dh2 += 2.0 * s.ell(a) * p / t;
  }
  const double H = std::sqrt(h2);
  return {H, H > 0.0 ? 0.5 * dh2 / H : 0.0};
}

// Diagonal of S in U = S X: the interpolating weight on eta and phi, 1 on kappa and psi.
struct Scaling {
  VectorXcd s, ds;
};

Scaling scaling(const EinsteinSpec& s, const VectorXd& xi, double t) {
  const int n = 2 * s.d * s.d + 2;
  const Hdata hd = hfun(s, xi, t);
  const double zf = zfac(einstein_scale(s), xi);
  const auto w = detail::unified_weight(t, zf, s.rho0, t * hd.H, hd.H + t * hd.dH);
  Scaling sc{VectorXcd::Ones(n), VectorXcd::Zero(n)};
  for (int k = 0; k < n; k += 2) {
    sc.s(k) = w.v;
    sc.ds(k) = w.dv;
  }
  return sc;
}

MatrixXcd unified_coefficient(const EinsteinSpec& s, const VectorXd& xi, double t, EinsteinGauge g) {
  const MatrixXcd L = assemble<cplx>(s, xi, NumCtx{t}, g, kAll);
  const Scaling sc = scaling(s, xi, t);
  MatrixXcd A = sc.s.asDiagonal() * L * sc.s.cwiseInverse().asDiagonal() / t;
  A.diagonal() += sc.ds.cwiseQuotient(sc.s);
  return A;
}

// Harmonic rows sum_a (2 xi_a eta_ja - xi_j eta_aa) on the barred state.
MatrixXcd harmonic_rows(const EinsteinSpec& s, const VectorXd& xi, double t) {
  const int d = s.d, n = 2 * d * d + 2;
  const VectorXd& l = s.ell;
  MatrixXcd G = MatrixXcd::Zero(d, n);
  for (int j = 0; j < d; ++j)
    for (int a = 0; a < d; ++a) {
      G(j, einstein_eta(d, j, a)) += 2.0 * xi(a) * std::pow(t, l(a) - l(j));
      G(j, einstein_eta(d, a, a)) -= xi(j);
    }
  return G;
}

}  // namespace

MatrixXcd einstein_operator(const EinsteinSpec& s, const VectorXd& xi, double t, EinsteinGauge gauge) {
  return assemble<cplx>(s, xi, NumCtx{t}, gauge, kAll);
}

MatrixXcd einstein_constraint_matrix(const EinsteinSpec& s, const VectorXd& xi, double t, EinsteinGauge gauge) {
  const int d = s.d, n = 2 * d * d + 2, ph = 2 * d * d, ps = ph + 1;
  const VectorXd& l = s.ell;
  const bool harmonic = gauge == EinsteinGauge::harmonic;
  const int rows = 1 + d + (harmonic ? d : 0) + d * (d - 1) + 1 + (harmonic ? d : 0);
  MatrixXcd C = MatrixXcd::Zero(rows, n);
  // Raw eta_ab = t^{l_b - l_a} bar-eta_ab, likewise kappa.
  auto rw = [&](int a, int b) { return std::pow(t, l(b) - l(a)); };
  auto eta = [&](int a, int b) { return einstein_eta(d, a, b); };
  auto kap = [&](int a, int b) { return einstein_kappa(d, a, b); };
  int r = 0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const double w = std::pow(t, 2.0 + 2.0 * l(a));
      C(r, eta(b, b)) += w * xi(a) * xi(a);
      C(r, eta(a, b)) -= w * xi(a) * xi(b) * rw(a, b);
    }
  for (int a = 0; a < d; ++a) C(r, kap(a, a)) += l(a);
  C(r, ps) += 2.0 * s.ell_phi;
  ++r;
  for (int j = 0; j < d; ++j, ++r) {
    for (int a = 0; a < d; ++a) {
      C(r, kap(j, a)) += kI * xi(a) * rw(j, a);
      C(r, eta(a, a)) += kI * (l(a) - l(j)) * xi(j);
    }
    C(r, ph) += 2.0 * kI * s.ell_phi * xi(j);
  }
  if (harmonic) {
    for (int j = 0; j < d; ++j, ++r) {
      const double wj = std::pow(t, 2.0 * l(j));
      for (int a = 0; a < d; ++a) {
        const double wa = std::pow(t, 2.0 * l(a));
        C(r, kap(a, j)) += kI * wa * xi(a) * rw(a, j);
        C(r, eta(a, a)) += kI * l(a) * wj * xi(j);
        C(r, eta(a, j)) -= 2.0 * kI * l(a) * wa * xi(a) * rw(a, j);
      }
      C(r, ph) += 2.0 * kI * s.ell_phi * wj * xi(j);
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double wi = std::pow(t, 2.0 * l(i)), wj = std::pow(t, 2.0 * l(j));
      C(r, eta(i, j)) += wi * rw(i, j);
      C(r, eta(j, i)) -= wj * rw(j, i);
      ++r;
      C(r, kap(i, j)) += wi * rw(i, j);
      C(r, eta(i, j)) -= 2.0 * l(i) * wi * rw(i, j);
      C(r, kap(j, i)) -= wj * rw(j, i);
      C(r, eta(j, i)) += 2.0 * l(j) * wj * rw(j, i);
      ++r;
    }
  for (int a = 0; a < d; ++a) C(r, kap(a, a)) += 1.0;
  ++r;
  if (harmonic) C.block(r, 0, d, n) = harmonic_rows(s, xi, t);
  return C;
}

VectorXcd constraint_residuals(const VectorXcd& X, double t, const VectorXd& xi, const EinsteinSpec& s,
                               EinsteinGauge gauge) {
  const MatrixXcd C = einstein_constraint_matrix(s, xi, t, gauge);
  const double xn = X.norm();
  VectorXcd r = C * X;
  for (Eigen::Index k = 0; k < r.size(); ++k) {
    const double scale = C.row(k).norm() * xn;
    r(k) = scale > 0.0 ? r(k) / scale : 0.0;
  }
  return r;
}

VectorXcd project_constraints(const VectorXcd& X, double t, const VectorXd& xi, const EinsteinSpec& s,
                              EinsteinGauge gauge) {
  MatrixXcd C = einstein_constraint_matrix(s, xi, t, gauge);
  for (Eigen::Index k = 0; k < C.rows(); ++k) {
    const double nr = C.row(k).norm();
    if (nr > 0.0) C.row(k) /= nr;
  }
  Eigen::JacobiSVD<MatrixXcd> svd(C, Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > 1e-10 * sv(0)) ++rank;
  const MatrixXcd K = svd.matrixV().rightCols(C.cols() - rank);
  return K * (K.adjoint() * X);
}

VectorXcd einstein_to_harmonic(const VectorXcd& X, double t, const VectorXd& xi, const EinsteinSpec& s) {
  const int d = s.d, n = 2 * d * d + 2;
  const VectorXd& l = s.ell;
  // Column b: change of the barred state under a unit shift beta^b.
  MatrixXcd dX = MatrixXcd::Zero(n, d);
  for (int b = 0; b < d; ++b)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        if (j == b) {
          dX(einstein_eta(d, i, j), b) += 0.5 * kI * std::pow(t, l(i) - l(j)) * xi(i);
          dX(einstein_kappa(d, i, j), b) += kI * (l(i) - l(j)) * std::pow(t, l(i) - l(j)) * xi(i);
        }
        if (i == b) dX(einstein_eta(d, i, j), b) += 0.5 * kI * std::pow(t, l(j) - l(i)) * xi(j);
      }
  const MatrixXcd G = harmonic_rows(s, xi, t);
  const VectorXcd beta = (G * dX).completeOrthogonalDecomposition().solve(-G * X);
  return X + dX * beta;
}

VectorXcd einstein_state(const EinsteinSpec& s, const VectorXd& xi, double t, const VectorXcd& U) {
  return U.cwiseQuotient(scaling(s, xi, t).s);
}

VectorXcd einstein_unknown(const EinsteinSpec& s, const VectorXd& xi, double t, const VectorXcd& X) {
  return X.cwiseProduct(scaling(s, xi, t).s);
}

double einstein_weighted(const EinsteinSpec& s, const VectorXd& xi, double t, const VectorXcd& X) {
  const double tau = t * hfun(s, xi, t).H;
  const double up = std::sqrt(tau), dn = 1.0 / up;
  double w = 0.0;
  for (Eigen::Index k = 0; k < X.size(); ++k) w += (k % 2 == 0 ? up : dn) * std::abs(X(k));
  return w;
}

double einstein_bg(const EinsteinSpec& s, const VectorXd& xi, double t) {
  double num = 0.0, den = 0.0;
  for (int a = 0; a < s.d; ++a) {
    const double p = std::pow(t, 2.0 * s.ell(a)) * xi(a) * xi(a);
    num += s.ell(a) * p;
    den += p;
  }
  return 0.5 * (1.0 + num / den);
}

Subcriticality subcriticality(const VectorXd& ell) {
  Subcriticality out;
  const int d = int(ell.size());
  if (d < 2) return out;
  out.applicable = true;
  double mx = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        if (j != k) mx = std::max(mx, ell(i) - ell(j) - ell(k));
  out.margin = 1.0 - mx;
  out.subcritical = mx < 1.0;
  return out;
}

namespace {

PZoneData einstein_pzone(const EinsteinSpec& s, const VectorXd& xi, double zf, std::optional<int> m_req) {
  const int d = s.d, n = 2 * d * d + 2;
  PZoneData pz;
  pz.M_P = MatrixXcd::Identity(n, n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double del = s.ell(j) - s.ell(i);
      if (std::fabs(del) > 1e-12) {
        pz.M_P(einstein_eta(d, i, j), einstein_kappa(d, i, j)) = 1.0 / (2.0 * del);
        pz.jordan.blocks.push_back(detail::block(del));
        pz.jordan.blocks.push_back(detail::block(-del));
      } else {
        pz.jordan.blocks.push_back(detail::block(0.0, 2));
      }
    }
  pz.jordan.blocks.push_back(detail::block(0.0, 2));
  pz.M_P_inv = pz.M_P.inverse();
  const double h2_power = 2.0 + 2.0 * s.ell.minCoeff();
  pz.a_P = h2_power - 1.0;

  const MatrixXcd M = pz.M_P, Mi = pz.M_P_inv;
  pz.R_P_numeric = [=](double z) {
    const double t = z / zf;
    return MatrixXcd(M * assemble<cplx>(s, xi, NumCtx{t}, EinsteinGauge::zero_shift, kH2 | kRest) * Mi / z);
  };

  // The symbolic remainder is only needed when renormalization stages are requested.
  const int m = m_req ? *m_req : select_m_p(pz.a_P, pz.jordan);
  if (m > 0) {
    const PHCtx cx{zf, s.taylor_depth, h2_power};
    Mat<PHExpansion> L = assemble<PHExpansion>(s, xi, cx, EinsteinGauge::zero_shift, kH2 | kRest);
    const PHExpansion zinv = PHExpansion::monomial(1.0, Exponent::from_double(-1.0));
    PHMatrix R = L.unaryExpr([&](const PHExpansion& e) { return e * zinv; });
    pz.R_P = detail::ph_conjugate(M, R, Mi);
  } else {
    pz.R_P = ph_zero(n, n);
    pz.m_override = 0;
  }
  return pz;
}

}  // namespace

SystemBundle build_einstein(const EinsteinSpec& s) {
  SystemBundle bundle;
  bundle.name = "einstein";
  const int d = s.d, n = 2 * d * d + 2;
  bundle.n = n;
  bundle.scale = einstein_scale(s);
  bundle.zones.rho0 = s.rho0;
  bundle.m_P = s.m_P;
  std::vector<std::vector<int>> groups(2);
  for (int k = 0; k < n; ++k) groups[k % 2].push_back(k);
  bundle.partition_hint = groups;
  const ScaleProfile scale = bundle.scale;

  bundle.at = [s, scale, n, d](const VectorXd& xi) {
    FrequencyModel fm;
    fm.xi = xi;
    fm.n = n;
    const double zf = zfac(scale, xi);
    fm.zfac = zf;
    fm.A = [=](double t) { return unified_coefficient(s, xi, t, EinsteinGauge::zero_shift); };
    fm.A_H = [=](double t) { return unified_coefficient(s, xi, t, EinsteinGauge::harmonic); };
    fm.into_h = [=](double t, const VectorXcd& U) {
      return einstein_unknown(s, xi, t, einstein_to_harmonic(einstein_state(s, xi, t, U), t, xi, s));
    };
    fm.from_h = [](double, const VectorXcd& U) { return U; };
    fm.pzone = [=]() { return einstein_pzone(s, xi, zf, s.m_P); };

    MatrixXcd MH = MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; k += 2) MH.block(k, k, 2, 2) << -0.5, 0.5, 0.5, 0.5;
    const MatrixXcd MHi = MH.inverse();
    VectorXd DH(n);
    for (int k = 0; k < n; ++k) DH(k) = k % 2 == 0 ? -1.0 : 1.0;
    fm.h.M_H = [MH](double) { return MH; };
    fm.h.D_H = [DH](double) { return DH; };
    fm.h.jets = [=](double t0) {
      const JetC t = JetC::variable(t0);
      JetC h2(0.0), dlog(0.0);
      for (int a = 0; a < d; ++a) {
        if (xi(a) == 0.0) continue;
        h2 += xi(a) * xi(a) * pow(t, 2.0 * s.ell(a));
        dlog += s.ell(a) * xi(a) * xi(a) * pow(t, 2.0 * s.ell(a) - 1.0);
      }
      const JetC H = sqrt(h2);
      const JetC tau = t * H;
      const JetC dtau_over_tau = JetC(1.0) / t + dlog / h2;
      JetMatrix K = assemble<JetC>(s, xi, JetCtx{t}, EinsteinGauge::harmonic, kLDiag | kRest);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          JetC v = K(r, c) / t;
          if (r % 2 == 0) v = v * kI * tau;
          if (c % 2 == 0) v = v / (kI * tau);
          K(r, c) = v;
        }
      for (int r = 0; r < n; r += 2) K(r, r) += dtau_over_tau;
      HJets hj;
      hj.r0 = (jet_constant(MH) * K * jet_constant(MHi)).unaryExpr([zf](const JetC& x) { return x / JetC(zf); });
      hj.zcd.resize(n);
      for (int k = 0; k < n; ++k) hj.zcd(k) = H * (DH(k) / zf);
      return hj;
    };
    fm.h.B_H = [=](double t) { return MatrixXcd(einstein_bg(s, xi, t) * MatrixXcd::Identity(n, n)); };
    fm.h.a_H = -2.0 - s.ell.minCoeff();
    return fm;
  };
  return bundle;
}

}  // namespace dhs
