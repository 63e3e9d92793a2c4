#pragma once
// Polyhomogeneous expansions: finite sums c * z^a * (log z)^p with complex c,
// real a and integer p >= 0.

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhs {

using cplx = std::complex<double>;

/// Real exponent, stored as an exact rational when possible.
class Exponent {
 public:
  Exponent() = default;
  Exponent(int v) : num_(v), den_(1) {}  // NOLINT(google-explicit-constructor)

  static Exponent rational(std::int64_t num, std::int64_t den);
  /// Recovers p/q (q <= 1000) when |x - p/q| < 1e-13; otherwise stores x inexactly.
  static Exponent from_double(double x);
  static Exponent inexact(double x);

  [[nodiscard]] bool exact() const { return exact_; }
  [[nodiscard]] std::int64_t num() const { return num_; }
  [[nodiscard]] std::int64_t den() const { return den_; }
  [[nodiscard]] double value() const { return exact_ ? double(num_) / double(den_) : val_; }

  friend Exponent operator+(const Exponent& a, const Exponent& b);
  friend Exponent operator-(const Exponent& a, const Exponent& b);
  friend Exponent operator-(const Exponent& a);
  /// Equality: exact when both are rationals, otherwise within 1e-12.
  friend bool same(const Exponent& a, const Exponent& b);
  [[nodiscard]] std::string str() const;

 private:
  bool exact_ = true;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double val_ = 0.0;
};

inline constexpr double kPowerMergeTol = 1e-12;

struct LogMonomial {
  cplx coeff;
  Exponent power;
  int logpow = 0;
};

class LogCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PHExpansion {
 public:
  PHExpansion() = default;
  PHExpansion(double c);  // NOLINT(google-explicit-constructor)
  PHExpansion(cplx c);    // NOLINT(google-explicit-constructor)
  PHExpansion(int c) : PHExpansion(double(c)) {}  // NOLINT(google-explicit-constructor)

  static PHExpansion monomial(cplx c, Exponent a, int p = 0);
  static PHExpansion from_terms(std::vector<LogMonomial> terms,
                                double order = std::numeric_limits<double>::infinity());

  [[nodiscard]] const std::vector<LogMonomial>& terms() const { return terms_; }
  [[nodiscard]] bool empty() const { return terms_.empty(); }
  [[nodiscard]] std::size_t size() const { return terms_.size(); }

  /// Truncation order: the expansion represents sum(terms) + O(z^order).
  [[nodiscard]] double order() const { return order_; }
  [[nodiscard]] bool exact() const { return order_ == std::numeric_limits<double>::infinity(); }
  /// Declares an O(z^order) remainder; terms with power >= order are absorbed.
  PHExpansion& with_order(double order);

  /// Smallest power present, or order() when there are no terms.
  [[nodiscard]] double leading_power() const;
  [[nodiscard]] int max_logpow() const;
  [[nodiscard]] double max_abs_coeff() const;

  [[nodiscard]] cplx evaluate(double z) const;
  [[nodiscard]] std::string str() const;

  PHExpansion& operator+=(const PHExpansion& o);
  PHExpansion& operator-=(const PHExpansion& o);
  PHExpansion& operator*=(const PHExpansion& o);
  PHExpansion& operator*=(cplx c);

  friend PHExpansion operator+(PHExpansion a, const PHExpansion& b) { return a += b; }
  friend PHExpansion operator-(PHExpansion a, const PHExpansion& b) { return a -= b; }
  friend PHExpansion operator*(const PHExpansion& a, const PHExpansion& b);
  friend PHExpansion operator*(PHExpansion a, cplx c) { return a *= c; }
  friend PHExpansion operator*(cplx c, PHExpansion a) { return a *= c; }
  friend PHExpansion operator-(const PHExpansion& a);
  friend PHExpansion operator/(PHExpansion a, cplx c) { return a *= (1.0 / c); }
  friend bool operator==(const PHExpansion& a, const PHExpansion& b);
  friend bool operator!=(const PHExpansion& a, const PHExpansion& b) { return !(a == b); }

 private:
  void normalize();
  std::vector<LogMonomial> terms_;
  double order_ = std::numeric_limits<double>::infinity();
};

enum class CombineMode { add, multiply, scale };
/// Uniform entry point for the three algebra operations; `c` is used only by scale.
PHExpansion combine(const PHExpansion& lhs, const PHExpansion& rhs, CombineMode mode,
                    cplx c = 1.0);

PHExpansion derivative(const PHExpansion& g);

/// I(g) with d/dz I(g) = g. Powers > -1 are anchored at 0, powers < -1 at infinity,
/// and power -1 at z = 1 (raising the log power by one).
PHExpansion antiderivative(const PHExpansion& g, int logpow_cap = std::numeric_limits<int>::max());

/// z^{-q} I(z^q g) for a complex shift q. `q_exact` carries the real part as an exact
/// exponent when q is real, so resonances a + q + 1 = 0 are detected exactly.
PHExpansion twisted_antiderivative(const PHExpansion& g, cplx q,
                                   std::optional<Exponent> q_exact = std::nullopt,
                                   int logpow_cap = std::numeric_limits<int>::max());

/// Drops terms with power > max_power and records the lowest dropped power as the order.
PHExpansion truncate(const PHExpansion& e, double max_power);

/// Multiplication by z^a (shifts every power, keeps logs).
PHExpansion shift_power(const PHExpansion& e, Exponent a);

using PHMatrix = Eigen::Matrix<PHExpansion, Eigen::Dynamic, Eigen::Dynamic>;

PHMatrix ph_zero(Eigen::Index rows, Eigen::Index cols);
PHMatrix ph_identity(Eigen::Index n);
PHMatrix ph_multiply(const PHMatrix& a, const PHMatrix& b);
PHMatrix ph_derivative(const PHMatrix& a);
Eigen::MatrixXcd ph_evaluate(const PHMatrix& a, double z);
/// Minimum over entries of the declared order (infinity if all exact).
double ph_order(const PHMatrix& a);
bool ph_is_empty(const PHMatrix& a);

}  // namespace dhs

namespace Eigen {
template <>
struct NumTraits<dhs::PHExpansion> : GenericNumTraits<dhs::PHExpansion> {
  using Real = dhs::PHExpansion;
  using NonInteger = dhs::PHExpansion;
  using Nested = dhs::PHExpansion;
  using Literal = dhs::PHExpansion;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 20,
    AddCost = 50,
    MulCost = 200
  };
};
}  // namespace Eigen
