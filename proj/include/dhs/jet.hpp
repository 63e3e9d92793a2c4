#pragma once
// Truncated Taylor jets in one variable: c[k] = f^{(k)}(t0) / k!.
// Used to differentiate the hyperbolic-zone coefficients exactly in t.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>

namespace dhs {

inline constexpr int kJetSize = 8;

template <class T>
class Jet {
 public:
  using value_type = T;
  std::array<T, kJetSize> c{};

  Jet() { c.fill(T(0)); }
  Jet(T v) { c.fill(T(0)); c[0] = v; }  // NOLINT(google-explicit-constructor)
  template <class U, class = std::enable_if_t<std::is_arithmetic_v<U> && !std::is_same_v<U, T>>>
  Jet(U v) : Jet(T(v)) {}  // NOLINT(google-explicit-constructor)

  static Jet variable(T t0) {
    Jet j(t0);
    j.c[1] = T(1);
    return j;
  }
  [[nodiscard]] T value() const { return c[0]; }
  /// k-th derivative at t0.
  [[nodiscard]] T derivative_value(int k) const {
    T f = T(1);
    for (int i = 2; i <= k; ++i) f *= T(i);
    return c[k] * f;
  }

  Jet& operator+=(const Jet& o) { for (int k = 0; k < kJetSize; ++k) c[k] += o.c[k]; return *this; }
  Jet& operator-=(const Jet& o) { for (int k = 0; k < kJetSize; ++k) c[k] -= o.c[k]; return *this; }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) { for (auto& x : a.c) x = -x; return a; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < kJetSize; ++k) {
      T s = T(0);
      for (int j = 0; j <= k; ++j) s += a.c[j] * b.c[k - j];
      r.c[k] = s;
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (int k = 0; k < kJetSize; ++k) {
      T s = a.c[k];
      for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
      r.c[k] = s / b.c[0];
    }
    return r;
  }
  friend bool operator==(const Jet& a, const Jet& b) { return a.c == b.c; }
  friend bool operator!=(const Jet& a, const Jet& b) { return !(a == b); }
};

}  // namespace dhs

namespace Eigen {
template <class T>
struct NumTraits<dhs::Jet<T>> : GenericNumTraits<dhs::Jet<T>> {
  using Real = dhs::Jet<T>;
  using NonInteger = dhs::Jet<T>;
  using Nested = dhs::Jet<T>;
  using Literal = dhs::Jet<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = dhs::kJetSize,
    AddCost = dhs::kJetSize,
    MulCost = dhs::kJetSize * dhs::kJetSize
  };
};
}  // namespace Eigen

namespace dhs {

/// d/dt of a jet; the highest coefficient becomes unknown and is set to zero.
template <class T>
Jet<T> jet_dt(const Jet<T>& f) {
  Jet<T> r;
  for (int k = 0; k + 1 < kJetSize; ++k) r.c[k] = T(k + 1) * f.c[k + 1];
  r.c[kJetSize - 1] = T(0);
  return r;
}

/// f^p by the standard power recurrence (f(t0) must be nonzero).
template <class T>
Jet<T> pow(const Jet<T>& f, double p) {
  Jet<T> g;
  g.c[0] = std::pow(f.c[0], p);
  for (int k = 1; k < kJetSize; ++k) {
    T s = T(0);
    for (int j = 1; j <= k; ++j) s += (T(p * j) - T(k - j)) * f.c[j] * g.c[k - j];
    g.c[k] = s / (T(k) * f.c[0]);
  }
  return g;
}

template <class T>
Jet<T> sqrt(const Jet<T>& f) { return pow(f, 0.5); }

template <class T>
Jet<T> exp(const Jet<T>& f) {
  Jet<T> g;
  g.c[0] = std::exp(f.c[0]);
  for (int k = 1; k < kJetSize; ++k) {
    T s = T(0);
    for (int j = 1; j <= k; ++j) s += T(j) * f.c[j] * g.c[k - j];
    g.c[k] = s / T(k);
  }
  return g;
}

template <class T>
Jet<T> log(const Jet<T>& f) {
  Jet<T> g;
  g.c[0] = std::log(f.c[0]);
  for (int k = 1; k < kJetSize; ++k) {
    T s = f.c[k];
    for (int j = 1; j < k; ++j) s -= T(j) / T(k) * g.c[j] * f.c[k - j];
    g.c[k] = s / f.c[0];
  }
  return g;
}

/// Re-expresses a t-jet in z = zfac * t: coefficient k scales by zfac^{-k}.
template <class T>
Jet<T> jet_to_z(const Jet<T>& f, double zfac) {
  Jet<T> r = f;
  double s = 1.0;
  for (int k = 1; k < kJetSize; ++k) {
    s /= zfac;
    r.c[k] *= s;
  }
  return r;
}

using JetC = Jet<std::complex<double>>;
using JetMatrix = Eigen::Matrix<JetC, Eigen::Dynamic, Eigen::Dynamic>;
using JetVector = Eigen::Matrix<JetC, Eigen::Dynamic, 1>;

/// Value part of a matrix of jets.
template <class Derived>
Eigen::MatrixXcd jet_values(const Eigen::MatrixBase<Derived>& m) {
  return m.unaryExpr([](const JetC& j) { return j.value(); });
}

inline JetMatrix jet_dt(const JetMatrix& m) {
  return m.unaryExpr([](const JetC& j) { return jet_dt(j); });
}

inline JetMatrix jet_zeros(Eigen::Index r, Eigen::Index c) { return JetMatrix::Constant(r, c, JetC(0.0)); }

inline JetMatrix jet_constant(const Eigen::MatrixXcd& m) {
  return m.unaryExpr([](const std::complex<double>& v) { return JetC(v); });
}

/// Inverse of a small matrix of jets via Gauss-Jordan with partial pivoting on values.
JetMatrix jet_inverse(const JetMatrix& m);

}  // namespace dhs

