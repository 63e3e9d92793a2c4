#include "dhs/presets.hpp"

#include "preset_common.hpp"

#include <cmath>

namespace dhs {

using detail::kI;

namespace {

ScaleProfile kasner_scale(const KasnerSpec& s) {
  ScaleProfile sp;
  sp.d = s.d;
  sp.ell = s.ell;
  const int d = s.d;
  sp.lambda = [d](double) { return MatrixXd::Identity(d, d); };
  sp.T = s.T;
  return sp;
}

struct KasnerCoeffs {
  double H;    // H(t)
  double dH;   // H'(t)
  cplx C;      // sum c_i t^{l_i - 1} xi_i
};

KasnerCoeffs kasner_coeffs(const KasnerSpec& s, const VectorXd& xi, double t) {
  double h2 = 0.0, dh2 = 0.0;
  cplx C = 0.0;
  for (int a = 0; a < s.d; ++a) {
    const double p = std::pow(t, 2.0 * s.ell(a));
    h2 += p * xi(a) * xi(a);
    dh2 += 2.0 * s.ell(a) * p / t * xi(a) * xi(a);
    C += s.c(a) * std::pow(t, s.ell(a) - 1.0) * xi(a);
  }
  const double H = std::sqrt(h2);
  return {H, H > 0.0 ? 0.5 * dh2 / H : 0.0, C};
}

}  // namespace

std::pair<cplx, cplx> kasner_phi(const KasnerSpec& s, const VectorXd& xi, double t, const VectorXcd& U) {
  const KasnerCoeffs k = kasner_coeffs(s, xi, t);
  const double zf = zfac(kasner_scale(s), xi);
  const auto w = detail::unified_weight(t, zf, s.rho0, t * k.H, k.H + t * k.dH);
  return {t * U(0) / w.v, U(1)};
}

SystemBundle build_kasner(const KasnerSpec& s) {
  SystemBundle bundle;
  bundle.name = "kasner";
  bundle.n = 2;
  bundle.scale = kasner_scale(s);
  bundle.zones.rho0 = s.rho0;
  bundle.partition_hint = std::vector<std::vector<int>>{{0}, {1}};
  const ScaleProfile scale = bundle.scale;

  bundle.at = [s, scale](const VectorXd& xi) {
    FrequencyModel fm;
    fm.xi = xi;
    fm.n = 2;
    const double zf = zfac(scale, xi);
    fm.zfac = zf;
    const double rho0 = s.rho0;
    const cplx g = s.g;

    fm.A = [=](double t) {
      const KasnerCoeffs k = kasner_coeffs(s, xi, t);
      const auto w = detail::unified_weight(t, zf, rho0, t * k.H, k.H + t * k.dH);
      return detail::scalar2_coefficient(t, g / t, k.H * k.H + kI * k.C, w);
    };

    fm.pzone = [=]() {
      PZoneData pz;
      pz.M_P = MatrixXcd::Identity(2, 2);
      if (std::abs(g - 1.0) > 1e-12) {
        pz.M_P(0, 0) = g - 1.0;
        pz.M_P(0, 1) = 1.0;
        pz.jordan.blocks = {detail::block(-1.0), detail::block(-g)};
      } else {
        pz.jordan.blocks = {detail::block(-1.0, 2)};
      }
      pz.M_P_inv = pz.M_P.inverse();
      pz.a_P = s.ell.minCoeff();
      PHMatrix R = ph_zero(2, 2);
      for (int a = 0; a < s.d; ++a) {
        if (xi(a) == 0.0) continue;
        R(1, 0) -= detail::zmono(xi(a) * xi(a), 1.0 + 2.0 * s.ell(a), zf, 1.0);
        if (s.c(a) != 0.0) R(1, 0) -= detail::zmono(kI * s.c(a) * xi(a), s.ell(a), zf, 1.0);
      }
      pz.R_P = detail::ph_conjugate(pz.M_P, R, pz.M_P_inv);
      const MatrixXcd M = pz.M_P, Mi = pz.M_P_inv;
      pz.R_P_numeric = [=](double z) {
        const double t = z / zf;
        const KasnerCoeffs k = kasner_coeffs(s, xi, t);
        MatrixXcd Rn = MatrixXcd::Zero(2, 2);
        Rn(1, 0) = -(t * k.H * k.H + kI * t * k.C) / zf;
        return MatrixXcd(M * Rn * Mi);
      };
      return pz;
    };

    MatrixXcd MH(2, 2);
    MH << -0.5, 0.5, 0.5, 0.5;
    const MatrixXcd MHi = MH.inverse();
    fm.h.M_H = [MH](double) { return MH; };
    fm.h.D_H = [](double) { return VectorXd((VectorXd(2) << -1.0, 1.0).finished()); };
    auto jets = [=](double t0) {
      const JetC t = JetC::variable(t0);
      JetC h2(0.0), dh2(0.0), C(0.0);
      for (int a = 0; a < s.d; ++a) {
        if (xi(a) == 0.0) continue;
        h2 += xi(a) * xi(a) * pow(t, 2.0 * s.ell(a));
        dh2 += 2.0 * s.ell(a) * xi(a) * xi(a) * pow(t, 2.0 * s.ell(a) - 1.0);
        C += s.c(a) * xi(a) * pow(t, s.ell(a) - 1.0);
      }
      const JetC H = sqrt(h2);
      JetMatrix K = jet_zeros(2, 2);
      K(0, 0) = 0.5 * dh2 / h2;
      K(1, 0) = -C / H;
      K(1, 1) = -JetC(g) / t;
      HJets hj;
      hj.r0 = (jet_constant(MH) * K * jet_constant(MHi)).unaryExpr([zf](const JetC& x) { return x / JetC(zf); });
      hj.zcd.resize(2);
      hj.zcd(0) = -H / JetC(zf);
      hj.zcd(1) = H / JetC(zf);
      return hj;
    };
    fm.h.jets = jets;
    fm.h.B_H = [jets, zf](double t) { return MatrixXcd(t * zf * jet_values(jets(t).r0)); };
    fm.h.a_H = -2.0 - s.ell.minCoeff();
    return fm;
  };
  return bundle;
}

}  // namespace dhs
