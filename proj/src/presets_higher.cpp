#include "dhs/presets.hpp"

#include "dhs/renorm_p.hpp"
#include "preset_common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dhs {

using detail::kI;

Poly<cplx> higher_direction(const HigherSpec& s, int j, int k, const VectorXd& omega) {
  Poly<cplx> out;
  for (const auto& [key, poly] : s.a) {
    if (key.first != j) continue;
    const auto& alpha = key.second;
    int order = 0;
    double w = 1.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      order += alpha[i];
      w *= std::pow(omega(Eigen::Index(i)), alpha[i]);
    }
    if (order != k) continue;
    if (out.c.size() < poly.c.size()) out.c.resize(poly.c.size(), 0.0);
    for (std::size_t p = 0; p < poly.c.size(); ++p) out.c[p] += w * poly.c[p];
  }
  return out;
}

namespace {

// Principal companion matrix: unit superdiagonal, last row a_{j, n-j}(t, w).
MatrixXcd principal_companion(const HigherSpec& s, double t, const VectorXd& omega) {
  const int n = s.n;
  MatrixXcd D = MatrixXcd::Zero(n, n);
  for (int j = 0; j + 1 < n; ++j) D(j, j + 1) = 1.0;
  for (int j = 0; j < n; ++j) D(n - 1, j) = higher_direction(s, j, n - j, omega)(cplx(t));
  return D;
}

std::string describe(double t, const VectorXd& omega) {
  std::ostringstream os;
  os << "t = " << t << ", omega = (";
  for (Eigen::Index i = 0; i < omega.size(); ++i) os << (i ? ", " : "") << omega(i);
  os << ")";
  return os.str();
}

ScaleProfile higher_scale(const HigherSpec& s) {
  ScaleProfile sp;
  sp.d = s.d;
  sp.ell = VectorXd::Constant(s.d, s.ell);
  const int d = s.d;
  sp.lambda = [d](double) { return MatrixXd::Identity(d, d); };
  sp.T = s.T;
  return sp;
}

}  // namespace

VectorXd higher_roots(const HigherSpec& s, double t, const VectorXd& omega) {
  const MatrixXcd D = principal_companion(s, t, omega);
  Eigen::ComplexEigenSolver<MatrixXcd> es(D, false);
  const VectorXcd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<double> roots;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::fabs(ev(i).imag()) > 1e-8 * scale)
      throw std::domain_error("hyperbolicity failure: complex characteristic root at " + describe(t, omega));
    roots.push_back(ev(i).real());
  }
  std::sort(roots.begin(), roots.end());
  for (std::size_t i = 1; i < roots.size(); ++i)
    if (roots[i] - roots[i - 1] < 1e-8 * scale)
      throw std::domain_error("hyperbolicity failure: repeated characteristic root at " + describe(t, omega));
  return Eigen::Map<VectorXd>(roots.data(), Eigen::Index(roots.size()));
}

SystemBundle build_higher(const HigherSpec& s) {
  if (s.n < 1) throw std::invalid_argument("build_higher: order must be positive");
  SystemBundle bundle;
  bundle.name = "higher";
  bundle.n = s.n;
  bundle.scale = higher_scale(s);
  bundle.zones.rho0 = s.rho0;
  const ScaleProfile scale = bundle.scale;

  // Root check on the validation grid.
  ValidationGrid grid;
  for (const auto& w : grid.directions(s.d))
    for (double t : grid.times(s.T)) higher_roots(s, t, w);

  bundle.at = [s, scale](const VectorXd& xi) {
    const int n = s.n;
    const double r = xi.norm();
    const VectorXd omega = r > 0.0 ? VectorXd(xi / r) : VectorXd(VectorXd::Unit(s.d, 0));
    // dir[j][k] = a_{j,k}(t, omega)
    std::vector<std::vector<Poly<cplx>>> dir(n, std::vector<Poly<cplx>>(n + 1));
    for (int j = 0; j < n; ++j)
      for (int k = 0; k <= n - j; ++k) dir[j][k] = higher_direction(s, j, k, omega);

    FrequencyModel fm;
    fm.xi = xi;
    fm.n = n;
    const double zf = zfac(scale, xi);
    fm.zfac = zf;
    const double ell = s.ell, rho0 = s.rho0;

    // A_j(t) = sum_k (i t^{l+1} r)^k a_{j,k}(t)
    auto Aj = [=](int j, double t, bool drop_const) {
      const cplx x = kI * std::pow(t, ell + 1.0) * r;
      cplx acc = 0.0, xp = 1.0;
      for (int k = 0; k <= n - j; ++k, xp *= x) {
        cplx a = dir[j][k](cplx(t));
        if (k == 0 && drop_const) a -= dir[j][0].at0();
        acc += xp * a;
      }
      return acc;
    };

    fm.A = [=](double t) {
      const double tl = std::pow(t, ell);
      const auto w = detail::unified_weight(t, zf, rho0, t * tl * r, (ell + 1.0) * tl * r);
      const cplx v = w.v / t;                    // Xi / t
      const cplx dlog = w.dv / w.v - 1.0 / t;    // (Xi/t)' / (Xi/t)
      MatrixXcd A = MatrixXcd::Zero(n, n);
      for (int j = 0; j + 1 < n; ++j) A(j, j + 1) = v;
      for (int j = 0; j < n; ++j) {
        A(j, j) += double(n - 1 - j) * dlog;
        A(n - 1, j) += Aj(j, t, false) * std::pow(t, double(j - n)) / std::pow(v, double(n - 1 - j));
      }
      return A;
    };

    fm.pzone = [=]() {
      MatrixXcd Bstar = MatrixXcd::Zero(n, n);
      for (int j = 0; j + 1 < n; ++j) Bstar(j, j + 1) = 1.0;
      for (int j = 0; j < n; ++j) {
        Bstar(j, j) -= double(n - 1 - j);
        Bstar(n - 1, j) += dir[j][0].at0();
      }
      const NumericJordan nj = jordanize(Bstar, 1e-8);
      PZoneData pz;
      pz.jordan = nj.spec;
      pz.M_P = nj.M;
      pz.M_P_inv = nj.M_inv;
      pz.a_P = std::min(ell, 0.0);
      PHMatrix R = ph_zero(n, n);
      for (int j = 0; j < n; ++j) {
        // (A_j(t) - a_{j,0}(0)) / z with t = z / zfac
        for (int k = 0; k <= n - j; ++k) {
          const cplx pre = std::pow(kI * r, k);
          const auto& c = dir[j][k].c;
          for (std::size_t p = 0; p < c.size(); ++p) {
            if (k == 0 && p == 0) continue;
            if (c[p] == 0.0) continue;
            const double q = k * (ell + 1.0) + double(p);
            R(n - 1, j) += detail::zmono(pre * c[p], q - 1.0, zf, 1.0);
          }
        }
      }
      pz.R_P = detail::ph_conjugate(pz.M_P, R, pz.M_P_inv);
      const MatrixXcd M = pz.M_P, Mi = pz.M_P_inv;
      pz.R_P_numeric = [=](double z) {
        const double t = z / zf;
        MatrixXcd Rn = MatrixXcd::Zero(n, n);
        for (int j = 0; j < n; ++j) Rn(n - 1, j) = Aj(j, t, true) / z;
        return MatrixXcd(M * Rn * Mi);
      };
      return pz;
    };

    // Z_H: U = S y with S = diag((i H)^{n-1-j}), H = t^l r.
    auto roots_jets = [=](const JetC& t, double t0) {
      const VectorXd lam0 = higher_roots(s, t0, omega);
      std::vector<JetC> top(n);
      for (int j = 0; j < n; ++j) top[j] = dir[j][n - j](t);
      JetVector lam(n);
      for (int i = 0; i < n; ++i) {
        JetC x(lam0(i));
        for (int it = 0; it < kJetSize + 2; ++it) {
          // p(x) = x^n - sum_j top_j x^j and p'(x)
          JetC p(1.0), dp(0.0);
          for (int j = n - 1; j >= 0; --j) {
            dp = dp * x + p;
            p = p * x - top[j];
          }
          x = x - p / dp;
        }
        lam(i) = x;
      }
      return lam;
    };
    fm.h.D_H = [=](double t) { return higher_roots(s, t, omega); };
    fm.h.M_H = [=](double t) {
      const VectorXd lam = higher_roots(s, t, omega);
      MatrixXcd V(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) V(j, i) = std::pow(lam(i), j);
      return MatrixXcd(V.inverse());
    };
    auto jets = [=](double t0) {
      const JetC t = JetC::variable(t0);
      const JetVector lam = roots_jets(t, t0);
      JetMatrix V(n, n);
      for (int i = 0; i < n; ++i) {
        JetC pw(1.0);
        for (int j = 0; j < n; ++j) {
          V(j, i) = pw;
          pw = pw * lam(i);
        }
      }
      const JetMatrix Vi = jet_inverse(V);
      const JetC H = pow(t, ell) * JetC(r);
      const JetC iH = H * kI;
      const JetC itau = t * iH;
      JetMatrix K = jet_zeros(n, n);
      for (int j = 0; j < n; ++j) {
        K(j, j) += JetC(double(n - 1 - j) * ell) / t;
        for (int k = 0; k < n - j; ++k) {
          // i H (i tau)^{k - (n-j)} a_{j,k}
          K(n - 1, j) += iH * pow(itau, double(k - (n - j))) * dir[j][k](t);
        }
      }
      HJets hj;
      const JetMatrix r0 = Vi * K * V + jet_dt(Vi) * V;
      hj.r0 = r0.unaryExpr([zf](const JetC& x) { return x / JetC(zf); });
      hj.zcd.resize(n);
      for (int i = 0; i < n; ++i) hj.zcd(i) = H * lam(i) / JetC(zf);
      return hj;
    };
    fm.h.jets = jets;
    fm.h.B_H = [jets, zf](double t) { return MatrixXcd(t * zf * jet_values(jets(t).r0)); };
    fm.h.a_H = -2.0 - std::min(ell, 0.0);
    return fm;
  };
  return bundle;
}

}  // namespace dhs
