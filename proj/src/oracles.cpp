#include "dhs/presets.hpp"

#include <Eigen/QR>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dhs {

namespace {

/// Kahan-compensated complex accumulator.
struct CompensatedSum {
  cplx sum{0.0, 0.0};
  cplx comp{0.0, 0.0};
  void add(cplx v) {
    const cplx y = v - comp;
    const cplx t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

/// Taylor series of 1F1 at 0, for |x| <= 1.
cplx kummer_series(cplx a, cplx b, cplx x, double rtol) {
  CompensatedSum s;
  cplx term = 1.0;
  s.add(term);
  int small = 0;
  for (int k = 0; k < 10000; ++k) {
    term *= (a + double(k)) / (b + double(k)) * x / double(k + 1);
    s.add(term);
    if (std::abs(term) <= rtol * std::abs(s.sum)) {
      if (++small >= 2) return s.sum;
    } else {
      small = 0;
    }
    if (term == 0.0) return s.sum;
  }
  throw std::runtime_error("kummer_1f1: series did not converge");
}

}  // namespace

cplx kummer_1f1(cplx a, cplx b, cplx x, const KummerOptions& opt) {
  if (std::abs(b.imag()) == 0.0 && b.real() <= 0.0 && std::floor(b.real()) == b.real()) {
    std::ostringstream os;
    os << "kummer_1f1: b = " << b.real() << " is a nonpositive integer";
    throw std::domain_error(os.str());
  }
  const double R = std::abs(x);
  if (R > opt.x_cap) {
    std::ostringstream os;
    os << "kummer_1f1: |x| = " << R << " exceeds the cap " << opt.x_cap;
    throw std::domain_error(os.str());
  }
  if (R <= 1.0) return kummer_series(a, b, x, opt.rtol);

  // Continue along the ray 0 -> x with local power series of x y'' + (b - x) y' - a y = 0.
  const cplx dir = x / R;
  cplx x0 = dir;
  cplx y = kummer_series(a, b, x0, opt.rtol);
  cplx dy = a / b * kummer_series(a + 1.0, b + 1.0, x0, opt.rtol);
  double r0 = 1.0;
  while (r0 < R) {
    const double step = std::min({0.5 * r0, 2.0, R - r0});
    const cplx h = dir * step;
    cplx cprev = y, ccur = dy;  // c_0, c_1
    CompensatedSum sy, sdy;
    sy.add(cprev);
    sy.add(ccur * h);
    sdy.add(ccur);
    cplx hp = h;  // h^{k+1} with k the index of ccur
    int small = 0;
    for (int k = 0; k < 5000; ++k) {
      const cplx cnext = (-(double(k) + 1.0) * (double(k) + b - x0) * ccur + (double(k) + a) * cprev) /
                         (x0 * (double(k) + 2.0) * (double(k) + 1.0));
      const cplx ty = cnext * hp * h;
      const cplx tdy = (double(k) + 2.0) * cnext * hp;
      sy.add(ty);
      sdy.add(tdy);
      hp *= h;
      cprev = ccur;
      ccur = cnext;
      if (std::abs(ty) <= 1e-17 * std::abs(sy.sum) && std::abs(tdy) <= 1e-17 * std::abs(sdy.sum)) {
        if (++small >= 3) break;
      } else {
        small = 0;
      }
    }
    y = sy.sum;
    dy = sdy.sum;
    r0 += step;
    x0 = dir * r0;
  }
  return y;
}

std::pair<cplx, cplx> model_wave_exact(int ell, double c, cplx phi0, cplx phi1, double t, double xi) {
  if (ell < 1) throw std::domain_error("model_wave_exact: l must be a positive integer");
  const double l1 = ell + 1.0;
  const double theta = std::pow(t, l1) * xi / l1;
  const double dtheta = std::pow(t, double(ell)) * xi;
  const cplx I(0.0, 1.0);
  const cplx x = 2.0 * I * theta;
  const cplx e = std::exp(-I * theta);
  const cplx a1 = (ell - c) / (2.0 * l1), b1 = ell / l1;
  const cplx a2 = (ell - c + 2.0) / (2.0 * l1), b2 = (ell + 2.0) / l1;
  const cplx F1 = kummer_1f1(a1, b1, x), dF1 = a1 / b1 * kummer_1f1(a1 + 1.0, b1 + 1.0, x);
  const cplx F2 = kummer_1f1(a2, b2, x), dF2 = a2 / b2 * kummer_1f1(a2 + 1.0, b2 + 1.0, x);
  const cplx phi = e * F1 * phi0 + t * e * F2 * phi1;
  const cplx d1 = e * (-I * dtheta * F1 + 2.0 * I * dtheta * dF1);
  const cplx d2 = e * F2 + t * e * (-I * dtheta * F2 + 2.0 * I * dtheta * dF2);
  return {phi, d1 * phi0 + d2 * phi1};
}

std::pair<cplx, cplx> model_wave_numeric(double ell, double c, cplx phi0, cplx phi1, double t, double xi,
                                         double rtol) {
  if (ell < 1.0 && c != 0.0) throw std::domain_error("model_wave_numeric: coefficient singular at t = 0");
  const cplx I(0.0, 1.0);
  OdeRhs f = [&](double s, const VectorXcd& y, VectorXcd& dy) {
    const double sl = std::pow(s, ell);
    const cplx q = sl * sl * xi * xi + (c != 0.0 ? I * c * std::pow(s, ell - 1.0) * xi : cplx(0.0));
    dy(0) = y(1);
    dy(1) = -q * y(0);
  };
  VectorXcd y(2);
  y << phi0, phi1;
  OdeOptions opt;
  opt.rtol = rtol;
  opt.atol = 1e-3 * rtol * std::max(std::abs(phi0), std::abs(phi1));
  y = dop853(f, 0.0, t, y, opt);
  return {y(0), y(1)};
}

LossSolutionFit loss_solution_fit(const std::vector<double>& xis, double t) {
  const cplx I(0.0, 1.0);
  const Eigen::Index n = Eigen::Index(xis.size());
  MatrixXcd A(n, 2);
  VectorXcd v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double xi = xis[std::size_t(k)];
    const auto [phi, dphi] = model_wave_exact(1, 5.0, 1.0, 0.0, t, xi);
    (void)dphi;
    v(k) = phi * std::exp(I * xi * t * t / 2.0);
    A(k, 0) = 1.0;
    A(k, 1) = I * xi * t * t;
  }
  const VectorXcd coef = A.colPivHouseholderQr().solve(v);
  LossSolutionFit fit{coef(0), coef(1), 0.0};
  fit.max_residual = (A * coef - v).cwiseAbs().cwiseQuotient(v.cwiseAbs()).maxCoeff();
  return fit;
}

}  // namespace dhs
