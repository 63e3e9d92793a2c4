#include "dhs/presets.hpp"

#include "preset_common.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dhs {

using detail::kI;

WaveSpec wave_default() {
  WaveSpec s;
  s.d = 1;
  s.ell = 1.0;
  s.T = 1.0;
  s.rho0 = 0.3;
  s.a = {MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 1.0)};
  s.b = {VectorXd::Zero(1)};
  s.c = {VectorXcd::Constant(1, 0.5)};
  s.g.c = {0.3, 0.2};
  s.h.c = {0.1, 0.1};
  return s;
}

WaveSpec model_wave_spec(double ell, double c) {
  WaveSpec s;
  s.d = 1;
  s.ell = ell;
  s.a = {MatrixXd::Constant(1, 1, 1.0)};
  s.b = {VectorXd::Zero(1)};
  s.c = {VectorXcd::Constant(1, c)};
  return s;
}

DirectionCoeffs wave_direction(const WaveSpec& s, const VectorXd& w) {
  DirectionCoeffs dc;
  for (const auto& ak : s.a) dc.a.c.push_back(w.dot(ak * w));
  for (const auto& bk : s.b) dc.b.c.push_back(bk.dot(w));
  for (const auto& ck : s.c) dc.c.c.push_back((ck.transpose() * w.cast<cplx>())(0));
  return dc;
}

double WaveAux::alpha(const DirectionCoeffs& dc, double t) {
  const double b = dc.b(t);
  return std::sqrt(dc.a(t) + b * b);
}

WavePBasis wave_p_basis(cplx g0, cplx h0) {
  WavePBasis pb;
  const cplx gamma = std::sqrt((g0 - 1.0) * (g0 - 1.0) - 4.0 * h0);
  pb.M_P.resize(2, 2);
  if (std::abs(gamma) > 1e-12) {
    pb.M_P << (g0 - 1.0 - gamma) / 2.0, 1.0, (g0 - 1.0 + gamma) / 2.0, 1.0;
    pb.jordan.blocks = {detail::block(-(g0 + 1.0 + gamma) / 2.0), detail::block(-(g0 + 1.0 - gamma) / 2.0)};
  } else {
    pb.M_P << (3.0 - g0) / 2.0, -1.0, (g0 - 1.0) / 2.0, 1.0;
    pb.jordan.blocks = {detail::block(-(g0 + 1.0) / 2.0, 2)};
  }
  pb.M_P_inv = pb.M_P.inverse();
  return pb;
}

namespace {

ScaleProfile wave_scale(const WaveSpec& s) {
  ScaleProfile sp;
  sp.d = s.d;
  sp.ell = VectorXd::Constant(s.d, s.ell);
  const int d = s.d;
  sp.lambda = [d](double) { return MatrixXd::Identity(d, d); };
  sp.T = s.T;
  return sp;
}

VectorXd unit_direction(const VectorXd& xi) {
  const double r = xi.norm();
  if (r > 0.0) return xi / r;
  VectorXd e = VectorXd::Zero(xi.size());
  e(0) = 1.0;
  return e;
}

/// Coefficients of (p(t) - p(0)) / t.
Poly<cplx> drop_constant(const Poly<cplx>& p) {
  Poly<cplx> q;
  for (std::size_t k = 1; k < p.c.size(); ++k) q.c.push_back(p.c[k]);
  return q;
}

}  // namespace

WaveAux wave_aux(const WaveSpec& s) {
  WaveAux aux;
  const cplx g0 = s.g.at0(), h0 = s.h.at0();
  aux.gamma = std::sqrt((g0 - 1.0) * (g0 - 1.0) - 4.0 * h0);
  const double den = 2.0 * (s.ell + 1.0);
  aux.gamma_plus = (1.0 + (g0 + aux.gamma).real()) / den;
  aux.gamma_minus = (1.0 + (g0 - aux.gamma).real()) / den;
  aux.delta0 = (g0.real() - s.ell) / den;
  aux.delta_plus = 0.0;
  aux.alpha_min = std::numeric_limits<double>::infinity();
  ValidationGrid grid;
  std::vector<double> ts = grid.times(s.T);
  ts.push_back(0.0);
  for (const auto& w : grid.directions(s.d)) {
    const DirectionCoeffs dc = wave_direction(s, w);
    for (double t : ts) {
      const double b = dc.b(t);
      const double a2 = dc.a(t) + b * b;
      if (!(a2 > 0.0)) {
        std::ostringstream os;
        os << "wave ellipticity fails: a + b^2 = " << a2 << " at t = " << t << ", direction " << w.transpose();
        throw std::domain_error(os.str());
      }
      aux.alpha_min = std::min(aux.alpha_min, std::sqrt(a2));
    }
    const double alpha0 = WaveAux::alpha(dc, 0.0);
    const double v = std::fabs((dc.c.at0() - (s.ell + g0) * dc.b.at0()).real()) / alpha0 / den;
    if (v >= aux.delta_plus) {
      aux.delta_plus = v;
      aux.delta_plus_argmax = w;
    }
  }
  return aux;
}

SystemBundle build_wave(const WaveSpec& s) {
  (void)wave_aux(s);  // validates ellipticity
  SystemBundle bundle;
  bundle.name = "wave";
  bundle.n = 2;
  bundle.scale = wave_scale(s);
  bundle.zones.rho0 = s.rho0;
  bundle.m_P = s.m_P;
  bundle.m_H = s.m_H;
  bundle.partition_hint = std::vector<std::vector<int>>{{0}, {1}};

  const ScaleProfile scale = bundle.scale;
  bundle.at = [s, scale](const VectorXd& xi) {
    FrequencyModel fm;
    fm.xi = xi;
    fm.n = 2;
    const double zf = zfac(scale, xi);
    fm.zfac = zf;
    const double r = xi.norm();
    const DirectionCoeffs dc = wave_direction(s, unit_direction(xi));
    const double ell = s.ell, rho0 = s.rho0;

    fm.A = [=](double t) {
      const double tl = std::pow(t, ell);
      const auto w = detail::unified_weight(t, zf, rho0, t * tl * r, (ell + 1.0) * tl * r);
      const cplx p = 2.0 * kI * tl * r * dc.b(t) + s.g(cplx(t)) / t;
      const cplx q = tl * tl * r * r * dc.a(t) + kI * tl / t * r * dc.c(cplx(t)) + s.h(cplx(t)) / (t * t);
      return detail::scalar2_coefficient(t, p, q, w);
    };

    fm.pzone = [=]() {
      PZoneData pz;
      const WavePBasis pb = wave_p_basis(s.g.at0(), s.h.at0());
      pz.jordan = pb.jordan;
      pz.M_P = pb.M_P;
      pz.M_P_inv = pb.M_P_inv;
      pz.a_P = std::min(ell, 0.0);
      PHMatrix R = ph_zero(2, 2);
      for (std::size_t k = 1; k < s.h.c.size(); ++k) R(1, 0) -= detail::zmono(s.h.c[k], double(k) - 1.0, zf, 1.0);
      for (std::size_t k = 1; k < s.g.c.size(); ++k) R(1, 1) -= detail::zmono(s.g.c[k], double(k) - 1.0, zf, 1.0);
      for (std::size_t k = 0; k < dc.a.c.size(); ++k)
        R(1, 0) -= detail::zmono(r * r * dc.a.c[k], 2.0 * ell + 1.0 + double(k), zf, 1.0);
      for (std::size_t k = 0; k < dc.c.c.size(); ++k)
        R(1, 0) -= detail::zmono(kI * r * dc.c.c[k], ell + double(k), zf, 1.0);
      for (std::size_t k = 0; k < dc.b.c.size(); ++k)
        R(1, 1) -= detail::zmono(2.0 * kI * r * dc.b.c[k], ell + double(k), zf, 1.0);
      pz.R_P = detail::ph_conjugate(pb.M_P, R, pb.M_P_inv);
      const Poly<cplx> dh = drop_constant(s.h), dg = drop_constant(s.g);
      const MatrixXcd M = pb.M_P, Mi = pb.M_P_inv;
      pz.R_P_numeric = [=](double z) {
        const double t = z / zf;
        const double tl = std::pow(t, ell);
        MatrixXcd Rn = MatrixXcd::Zero(2, 2);
        Rn(1, 0) = -dh(cplx(t)) / zf - (t * tl * tl * r * r * dc.a(t) + kI * tl * r * dc.c(cplx(t))) / zf;
        Rn(1, 1) = -dg(cplx(t)) / zf - 2.0 * kI * tl * r * dc.b(t) / zf;
        return MatrixXcd(M * Rn * Mi);
      };
      return pz;
    };

    auto alpha_b = [dc](double t) {
      const double b = dc.b(t);
      return std::pair<double, double>{std::sqrt(dc.a(t) + b * b), b};
    };
    fm.h.M_H = [alpha_b](double t) {
      const auto [al, b] = alpha_b(t);
      MatrixXcd M(2, 2);
      M << 0.5 * (b * b - al * al), 0.5 * (al + b), 0.5 * (al * al - b * b), 0.5 * (al - b);
      return M;
    };
    fm.h.D_H = [alpha_b](double t) {
      const auto [al, b] = alpha_b(t);
      VectorXd D(2);
      D << -al - b, al - b;
      return D;
    };
    auto jets = [=](double t0) {
      const JetC t = JetC::variable(t0);
      const JetC H = r * pow(t, ell);
      const JetC a = dc.a(t), b = dc.b(t), c = dc.c(t);
      const JetC g = s.g(t), h = s.h(t);
      const JetC al = sqrt(a + b * b);
      JetMatrix M(2, 2);
      M(0, 0) = 0.5 * (b * b - al * al);
      M(0, 1) = 0.5 * (al + b);
      M(1, 0) = 0.5 * (al * al - b * b);
      M(1, 1) = 0.5 * (al - b);
      const JetMatrix Mi = jet_inverse(M);
      JetMatrix K = jet_zeros(2, 2);
      K(0, 0) = JetC(ell) / t;
      K(1, 0) = -c / t + kI * h / (t * t * H);
      K(1, 1) = -g / t;
      HJets hj;
      hj.r0 = (M * K * Mi + jet_dt(M) * Mi).unaryExpr([zf](const JetC& x) { return x / JetC(zf); });
      hj.zcd.resize(2);
      hj.zcd(0) = H * (-al - b) / JetC(zf);
      hj.zcd(1) = H * (al - b) / JetC(zf);
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
