#pragma once
// Shared pieces of the preset builders (internal).

#include "dhs/presets.hpp"

#include <cmath>

namespace dhs::detail {

inline constexpr cplx kI{0.0, 1.0};

/// Zone-interpolating weight Xi = (1 - chi(z)) + i tH chi(z) and its t-derivative.
struct Weight {
  cplx v;
  cplx dv;
};

inline Weight unified_weight(double t, double zf, double rho0, double tH, double dtH) {
  const double z = zf * t;
  const double chi = cutoff_chi(z, rho0);
  const double dchi = cutoff_chi_dz(z, rho0) * zf;
  return {(1.0 - chi) + kI * tH * chi, -dchi + kI * dtH * chi + kI * tH * dchi};
}

/// dU/dt for U = (t^{-1} Xi phi, phi') when phi'' + p phi' + q phi = 0.
inline MatrixXcd scalar2_coefficient(double t, cplx p, cplx q, const Weight& w) {
  MatrixXcd A(2, 2);
  A(0, 0) = -1.0 / t + w.dv / w.v;
  A(0, 1) = w.v / t;
  A(1, 0) = -q * t / w.v;
  A(1, 1) = -p;
  return A;
}

/// z^p / zfac^{p + shift} as a polyhomogeneous monomial with an exact exponent when possible.
inline PHExpansion zmono(cplx coeff, double p, double zf, double shift) {
  return PHExpansion::monomial(coeff * std::pow(zf, -(p + shift)), Exponent::from_double(p));
}

inline Exponent exact_or_inexact(cplx v) {
  return Exponent::from_double(v.real());
}

inline JordanBlock block(cplx ev, int size = 1) {
  JordanBlock b;
  b.eigenvalue = ev;
  b.size = size;
  if (std::abs(ev.imag()) < 1e-15) b.exact = Exponent::from_double(ev.real());
  return b;
}

/// Lowest power over all entries of an expansion matrix.
inline double ph_leading_power(const PHMatrix& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!m(i, j).empty()) lo = std::min(lo, m(i, j).leading_power());
  return lo;
}

inline PHMatrix ph_from(const MatrixXcd& m) {
  PHMatrix r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = PHExpansion(m(i, j));
  return r;
}

/// M X M^{-1} for a constant M.
inline PHMatrix ph_conjugate(const MatrixXcd& M, const PHMatrix& X, const MatrixXcd& Minv) {
  return ph_multiply(ph_multiply(ph_from(M), X), ph_from(Minv));
}

}  // namespace dhs::detail
