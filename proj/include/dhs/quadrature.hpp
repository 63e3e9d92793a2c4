#pragma once
// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

#include <cmath>
#include <complex>
#include <queue>
#include <type_traits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dhs {

struct QuadratureFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
template <class T>
double qnorm(const T& x) {
  if constexpr (requires { x.norm(); }) {
    return double(x.norm());
  } else {
    return double(std::abs(x));
  }
}

inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
auto gk15(F&& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  using R = std::decay_t<decltype(f(c))>;
  const R fc = f(c);
  R kron = fc * kWgk[7];
  R gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const R s = f(c - x) + f(c + x);
    kron += s * kWgk[j];
    if (j % 2 == 1) gauss += s * kWg[j / 2];
  }
  err = qnorm((kron - gauss) * h);
  return R(kron * h);
}
}  // namespace detail

/// Integral of f over [a, b] (a > b allowed) to max(rtol |I|, atol).
template <class F>
auto integrate_gk(F&& f, double a, double b, double rtol = 1e-10, double atol = 1e-14, int max_intervals = 2000) {
  using R = std::decay_t<decltype(f(a))>;
  if (a == b) return R(f(a) * 0.0);
  const double sign = b > a ? 1.0 : -1.0;
  const double lo = std::min(a, b), hi = std::max(a, b);
  struct Piece {
    double a, b, err;
    R val;
    bool operator<(const Piece& o) const { return err < o.err; }
  };
  std::priority_queue<Piece> heap;
  double e0 = 0.0;
  const R v0 = detail::gk15(f, lo, hi, e0);
  heap.push({lo, hi, e0, v0});
  R total = v0;
  double err_total = e0;
  int count = 1;
  while (err_total > std::max(rtol * detail::qnorm(total), atol)) {
    if (count >= max_intervals) {
      std::ostringstream os;
      os << "adaptive quadrature did not converge on [" << lo << ", " << hi << "]: error estimate "
         << err_total << " after " << count << " intervals";
      throw QuadratureFailure(os.str());
    }
    Piece p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    double el = 0.0, er = 0.0;
    const R vl = detail::gk15(f, p.a, mid, el);
    const R vr = detail::gk15(f, mid, p.b, er);
    total += vl + vr - p.val;
    err_total += el + er - p.err;
    heap.push({p.a, mid, el, vl});
    heap.push({mid, p.b, er, vr});
    ++count;
  }
  return R(total * sign);
}

}  // namespace dhs
