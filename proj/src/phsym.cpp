#include "dhs/phsym.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dhs {

namespace {

constexpr std::int64_t kMaxDen = 1000;
constexpr std::int64_t kRationalLimit = std::int64_t(1) << 40;
constexpr double kCancelRel = 1e-12;

Exponent make_reduced(__int128 num, __int128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 r = a % b;
    a = b;
    b = r;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  if (den > kRationalLimit || num > kRationalLimit || -num > kRationalLimit) {
    return Exponent::inexact(double(num) / double(den));
  }
  return Exponent::rational(std::int64_t(num), std::int64_t(den));
}

}  // namespace

Exponent Exponent::rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("Exponent: zero denominator");
  Exponent e;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  e.num_ = num / (g == 0 ? 1 : g);
  e.den_ = den / (g == 0 ? 1 : g);
  e.exact_ = true;
  return e;
}

Exponent Exponent::inexact(double x) {
  Exponent e;
  e.exact_ = false;
  e.val_ = x;
  e.num_ = 0;
  e.den_ = 0;
  return e;
}

Exponent Exponent::from_double(double x) {
  if (!std::isfinite(x)) return inexact(x);
  // Continued-fraction convergents p/q with q <= kMaxDen.
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(r);
    if (std::fabs(fl) > 1e15) break;
    const auto a = std::int64_t(fl);
    const std::int64_t p2 = a * p1 + p0;
    const std::int64_t q2 = a * q1 + q0;
    if (q2 > kMaxDen) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    if (std::fabs(x - double(p1) / double(q1)) < 1e-13) return rational(p1, q1);
    const double frac = r - fl;
    if (frac < 1e-16) break;
    r = 1.0 / frac;
  }
  return inexact(x);
}

Exponent operator+(const Exponent& a, const Exponent& b) {
  if (a.exact_ && b.exact_) {
    return make_reduced(__int128(a.num_) * b.den_ + __int128(b.num_) * a.den_,
                        __int128(a.den_) * b.den_);
  }
  return Exponent::inexact(a.value() + b.value());
}

Exponent operator-(const Exponent& a) {
  if (a.exact_) return Exponent::rational(-a.num_, a.den_);
  return Exponent::inexact(-a.val_);
}

Exponent operator-(const Exponent& a, const Exponent& b) { return a + (-b); }

bool same(const Exponent& a, const Exponent& b) {
  if (a.exact_ && b.exact_) return a.num_ == b.num_ && a.den_ == b.den_;
  return std::fabs(a.value() - b.value()) <= kPowerMergeTol;
}

std::string Exponent::str() const {
  std::ostringstream os;
  if (exact_) {
    os << num_;
    if (den_ != 1) os << '/' << den_;
  } else {
    os.precision(17);
    os << val_;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

PHExpansion::PHExpansion(double c) : PHExpansion(cplx(c, 0.0)) {}

PHExpansion::PHExpansion(cplx c) {
  if (c != cplx(0.0)) terms_.push_back({c, Exponent(0), 0});
}

PHExpansion PHExpansion::monomial(cplx c, Exponent a, int p) {
  if (p < 0) throw std::invalid_argument("PHExpansion: negative log power");
  PHExpansion e;
  if (c != cplx(0.0)) e.terms_.push_back({c, a, p});
  return e;
}

PHExpansion PHExpansion::from_terms(std::vector<LogMonomial> terms, double order) {
  for (const auto& t : terms) {
    if (t.logpow < 0) throw std::invalid_argument("PHExpansion: negative log power");
  }
  PHExpansion e;
  e.terms_ = std::move(terms);
  e.order_ = order;
  e.normalize();
  return e;
}

void PHExpansion::normalize() {
  if (terms_.empty()) return;
  // Snap near-equal inexact powers to a common representative so that equal
  // (power, logpow) pairs become adjacent after sorting.
  std::stable_sort(terms_.begin(), terms_.end(), [](const LogMonomial& a, const LogMonomial& b) {
    return a.power.value() < b.power.value();
  });
  for (std::size_t i = 1; i < terms_.size(); ++i) {
    if (!same(terms_[i].power, terms_[i - 1].power)) continue;
    if (!(terms_[i].power.exact() && terms_[i - 1].power.exact())) terms_[i].power = terms_[i - 1].power;
  }
  std::stable_sort(terms_.begin(), terms_.end(), [](const LogMonomial& a, const LogMonomial& b) {
    const double pa = a.power.value(), pb = b.power.value();
    if (pa != pb) return pa < pb;
    return a.logpow < b.logpow;
  });
  std::vector<LogMonomial> out;
  out.reserve(terms_.size());
  std::size_t i = 0;
  while (i < terms_.size()) {
    LogMonomial acc = terms_[i];
    double mag = std::abs(acc.coeff);
    std::size_t j = i + 1;
    while (j < terms_.size() && terms_[j].logpow == acc.logpow && same(terms_[j].power, acc.power)) {
      acc.coeff += terms_[j].coeff;
      mag = std::max(mag, std::abs(terms_[j].coeff));
      ++j;
    }
    const bool cancelled = acc.coeff == cplx(0.0) || std::abs(acc.coeff) <= kCancelRel * mag;
    const bool absorbed = acc.power.value() >= order_ - kPowerMergeTol;
    if (!cancelled && !absorbed) out.push_back(acc);
    i = j;
  }
  terms_ = std::move(out);
}

PHExpansion& PHExpansion::with_order(double order) {
  order_ = std::min(order_, order);
  normalize();
  return *this;
}

double PHExpansion::leading_power() const {
  return terms_.empty() ? order_ : terms_.front().power.value();
}

int PHExpansion::max_logpow() const {
  int p = 0;
  for (const auto& t : terms_) p = std::max(p, t.logpow);
  return p;
}

double PHExpansion::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& t : terms_) m = std::max(m, std::abs(t.coeff));
  return m;
}

cplx PHExpansion::evaluate(double z) const {
  if (!(z > 0.0)) throw std::domain_error("PHExpansion::evaluate requires z > 0");
  const double L = std::log(z);
  cplx sum = 0.0;
  for (const auto& t : terms_) {
    sum += t.coeff * std::exp(t.power.value() * L) * std::pow(L, t.logpow);
  }
  return sum;
}

std::string PHExpansion::str() const {
  std::ostringstream os;
  os.precision(12);
  if (terms_.empty()) os << "0";
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& t = terms_[i];
    if (i) os << " + ";
    os << '(' << t.coeff.real() << (t.coeff.imag() < 0 ? "-" : "+") << std::fabs(t.coeff.imag()) << "i)";
    if (!(t.power.exact() && t.power.num() == 0)) os << "*z^(" << t.power.str() << ')';
    if (t.logpow == 1) os << "*log(z)";
    if (t.logpow > 1) os << "*log(z)^" << t.logpow;
  }
  if (!exact()) os << " + O(z^" << order_ << ')';
  return os.str();
}

PHExpansion& PHExpansion::operator+=(const PHExpansion& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  order_ = std::min(order_, o.order_);
  normalize();
  return *this;
}

PHExpansion& PHExpansion::operator-=(const PHExpansion& o) { return *this += -o; }

PHExpansion operator-(const PHExpansion& a) {
  PHExpansion r = a;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

PHExpansion operator*(const PHExpansion& a, const PHExpansion& b) {
  PHExpansion r;
  r.order_ = std::min(a.order_ + b.leading_power(), b.order_ + a.leading_power());
  if (std::isnan(r.order_)) r.order_ = std::numeric_limits<double>::infinity();
  r.terms_.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& x : a.terms_) {
    for (const auto& y : b.terms_) {
      r.terms_.push_back({x.coeff * y.coeff, x.power + y.power, x.logpow + y.logpow});
    }
  }
  r.normalize();
  return r;
}

PHExpansion& PHExpansion::operator*=(const PHExpansion& o) { return *this = *this * o; }

PHExpansion& PHExpansion::operator*=(cplx c) {
  if (c == cplx(0.0)) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coeff *= c;
  return *this;
}

bool operator==(const PHExpansion& a, const PHExpansion& b) {
  if (a.terms_.size() != b.terms_.size()) return false;
  if (a.order_ != b.order_) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    const auto& x = a.terms_[i];
    const auto& y = b.terms_[i];
    if (x.logpow != y.logpow || !same(x.power, y.power) || x.coeff != y.coeff) return false;
  }
  return true;
}

PHExpansion combine(const PHExpansion& lhs, const PHExpansion& rhs, CombineMode mode, cplx c) {
  switch (mode) {
    case CombineMode::add: return lhs + rhs;
    case CombineMode::multiply: return lhs * rhs;
    case CombineMode::scale: return lhs * c;
  }
  return lhs;
}

PHExpansion derivative(const PHExpansion& g) {
  std::vector<LogMonomial> out;
  for (const auto& t : g.terms()) {
    const Exponent pm1 = t.power - Exponent(1);
    const double a = t.power.value();
    if (!(t.power.exact() && t.power.num() == 0)) out.push_back({t.coeff * a, pm1, t.logpow});
    if (t.logpow > 0) out.push_back({t.coeff * double(t.logpow), pm1, t.logpow - 1});
  }
  return PHExpansion::from_terms(std::move(out), g.order() - 1.0);
}

namespace {

// z^{a+1} * sum_k (-1)^k p!/(p-k)! L^{p-k} / s^{k+1}, with s = a + q + 1 != 0.
void append_power_integral(std::vector<LogMonomial>& out, const LogMonomial& t, cplx s) {
  const Exponent out_pow = t.power + Exponent(1);
  cplx factor = 1.0 / s;
  double falling = 1.0;
  for (int k = 0; k <= t.logpow; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    out.push_back({t.coeff * sign * falling * factor, out_pow, t.logpow - k});
    falling *= double(t.logpow - k);
    factor /= s;
  }
}

void check_cap(const LogMonomial& t, int cap) {
  if (t.logpow + 1 > cap) {
    throw LogCapExceeded("log-power cap " + std::to_string(cap) + " exceeded at resonant power z^(" +
                         t.power.str() + ")");
  }
}

}  // namespace

PHExpansion antiderivative(const PHExpansion& g, int logpow_cap) {
  std::vector<LogMonomial> out;
  for (const auto& t : g.terms()) {
    if (same(t.power, Exponent(-1))) {
      check_cap(t, logpow_cap);
      out.push_back({t.coeff / double(t.logpow + 1), Exponent(0), t.logpow + 1});
    } else {
      append_power_integral(out, t, cplx(t.power.value() + 1.0));
    }
  }
  return PHExpansion::from_terms(std::move(out), g.order() + 1.0);
}

PHExpansion twisted_antiderivative(const PHExpansion& g, cplx q, std::optional<Exponent> q_exact,
                                   int logpow_cap) {
  const bool real_shift = std::fabs(q.imag()) <= kPowerMergeTol;
  if (real_shift && !q_exact) q_exact = Exponent::from_double(q.real());
  std::vector<LogMonomial> out;
  for (const auto& t : g.terms()) {
    const bool resonant = real_shift && same(t.power + *q_exact + Exponent(1), Exponent(0));
    if (resonant) {
      check_cap(t, logpow_cap);
      out.push_back({t.coeff / double(t.logpow + 1), t.power + Exponent(1), t.logpow + 1});
    } else {
      append_power_integral(out, t, t.power.value() + 1.0 + q);
    }
  }
  return PHExpansion::from_terms(std::move(out), g.order() + 1.0);
}

PHExpansion truncate(const PHExpansion& e, double max_power) {
  std::vector<LogMonomial> kept;
  double dropped = e.order();
  for (const auto& t : e.terms()) {
    if (t.power.value() > max_power + kPowerMergeTol) {
      dropped = std::min(dropped, t.power.value());
    } else {
      kept.push_back(t);
    }
  }
  return PHExpansion::from_terms(std::move(kept), dropped);
}

PHExpansion shift_power(const PHExpansion& e, Exponent a) {
  std::vector<LogMonomial> out = e.terms();
  for (auto& t : out) t.power = t.power + a;
  return PHExpansion::from_terms(std::move(out), e.order() + a.value());
}

// ---------------------------------------------------------------------------

PHMatrix ph_zero(Eigen::Index rows, Eigen::Index cols) {
  PHMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = PHExpansion();
  return m;
}

PHMatrix ph_identity(Eigen::Index n) {
  PHMatrix m = ph_zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = PHExpansion(1.0);
  return m;
}

PHMatrix ph_multiply(const PHMatrix& a, const PHMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("ph_multiply: shape mismatch");
  PHMatrix r = ph_zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      PHExpansion acc;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        if (a(i, k).empty() && a(i, k).exact()) continue;
        if (b(k, j).empty() && b(k, j).exact()) continue;
        acc += a(i, k) * b(k, j);
      }
      r(i, j) = std::move(acc);
    }
  }
  return r;
}

PHMatrix ph_derivative(const PHMatrix& a) { return a.unaryExpr([](const PHExpansion& e) { return derivative(e); }); }

Eigen::MatrixXcd ph_evaluate(const PHMatrix& a, double z) {
  Eigen::MatrixXcd m(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) m(i, j) = a(i, j).evaluate(z);
  return m;
}

double ph_order(const PHMatrix& a) {
  double o = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) o = std::min(o, a.data()[i].order());
  return o;
}

bool ph_is_empty(const PHMatrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!a.data()[i].empty()) return false;
  return true;
}

}  // namespace dhs
