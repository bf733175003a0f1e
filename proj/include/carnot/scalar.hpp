#pragma once

#include <gmpxx.h>

#include <cmath>
#include <compare>
#include <ostream>
#include <stdexcept>
#include <string>

namespace carnot {

using Rational = mpq_class;

/// Exact element a + b*sqrt(2) of the quadratic field Q(sqrt 2).
///
/// Rational values are the special case b == 0; every exact computation in
/// the library runs in this field so that rational and irrational structure
/// constants share one code path.
class QSqrt2 {
 public:
  QSqrt2() : a_(0), b_(0) {}
  QSqrt2(long v) : a_(v), b_(0) {}  // NOLINT(google-explicit-constructor)
  QSqrt2(const Rational& a) : a_(a), b_(0) { a_.canonicalize(); }  // NOLINT
  QSqrt2(Rational a, Rational b) : a_(std::move(a)), b_(std::move(b)) {
    a_.canonicalize();
    b_.canonicalize();
  }

  static QSqrt2 sqrt2() { return {Rational(0), Rational(1)}; }

  const Rational& rational_part() const { return a_; }
  const Rational& sqrt2_part() const { return b_; }
  bool is_rational() const { return sgn(b_) == 0; }
  bool is_zero() const { return sgn(a_) == 0 && sgn(b_) == 0; }

  double to_double() const {
    if (sgn(a_) * sgn(b_) >= 0) return a_.get_d() + b_.get_d() * std::sqrt(2.0);
    // opposite signs: a + b sqrt2 = (a^2 - 2 b^2) / (a - b sqrt2) avoids cancellation
    Rational norm = a_ * a_ - 2 * b_ * b_;
    return norm.get_d() / (a_.get_d() - b_.get_d() * std::sqrt(2.0));
  }

  QSqrt2& operator+=(const QSqrt2& o) {
    a_ += o.a_;
    b_ += o.b_;
    return *this;
  }
  QSqrt2& operator-=(const QSqrt2& o) {
    a_ -= o.a_;
    b_ -= o.b_;
    return *this;
  }
  QSqrt2& operator*=(const QSqrt2& o) {
    if (is_rational() && o.is_rational()) {
      a_ *= o.a_;
      return *this;
    }
    Rational na = a_ * o.a_ + 2 * b_ * o.b_;
    Rational nb = a_ * o.b_ + b_ * o.a_;
    a_ = std::move(na);
    b_ = std::move(nb);
    return *this;
  }
  QSqrt2& operator/=(const QSqrt2& o) { return *this *= o.inverse(); }

  /// Multiplicative inverse; throws on zero.
  QSqrt2 inverse() const {
    if (is_zero()) throw std::domain_error("QSqrt2: division by zero");
    if (is_rational()) return QSqrt2(Rational(1 / a_));
    // norm a^2 - 2 b^2 is nonzero because sqrt(2) is irrational
    Rational norm = a_ * a_ - 2 * b_ * b_;
    return {Rational(a_ / norm), Rational(-b_ / norm)};
  }

  /// Sign of the real number a + b*sqrt(2), decided exactly.
  int sign() const {
    int sa = sgn(a_), sb = sgn(b_);
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    // opposite signs: compare a^2 with 2 b^2
    int c = cmp(Rational(a_ * a_), Rational(2 * b_ * b_));
    return c > 0 ? sa : (c < 0 ? sb : 0);
  }

  friend QSqrt2 operator+(QSqrt2 x, const QSqrt2& y) { return x += y; }
  friend QSqrt2 operator-(QSqrt2 x, const QSqrt2& y) { return x -= y; }
  friend QSqrt2 operator*(QSqrt2 x, const QSqrt2& y) { return x *= y; }
  friend QSqrt2 operator/(QSqrt2 x, const QSqrt2& y) { return x /= y; }
  friend QSqrt2 operator-(const QSqrt2& x) { return {Rational(-x.a_), Rational(-x.b_)}; }
  friend bool operator==(const QSqrt2& x, const QSqrt2& y) {
    return x.a_ == y.a_ && x.b_ == y.b_;
  }
  friend std::strong_ordering operator<=>(const QSqrt2& x, const QSqrt2& y) {
    int s = (x - y).sign();
    return s < 0 ? std::strong_ordering::less
                 : (s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  std::string str() const {
    if (is_rational()) return a_.get_str();
    return a_.get_str() + "+" + b_.get_str() + "*sqrt2";
  }
  friend std::ostream& operator<<(std::ostream& os, const QSqrt2& x) { return os << x.str(); }

 private:
  Rational a_;
  Rational b_;
};

/// Parse "p", "p/q", "p/q+r/s*sqrt2" or "r/s*sqrt2". Throws std::invalid_argument.
QSqrt2 parse_qsqrt2(const std::string& text);

/// Exact rational from a finite double (every finite double is dyadic).
Rational rational_from_double(double v);

// Scalar traits so kernels can be written once for double and for QSqrt2.
inline double to_double(double v) { return v; }
inline double to_double(const QSqrt2& v) { return v.to_double(); }
inline bool is_zero(double v) { return v == 0.0; }
inline bool is_zero(const QSqrt2& v) { return v.is_zero(); }

template <typename T>
T scalar_from(const QSqrt2& exact);
template <>
inline double scalar_from<double>(const QSqrt2& exact) { return exact.to_double(); }
template <>
inline QSqrt2 scalar_from<QSqrt2>(const QSqrt2& exact) { return exact; }

}  // namespace carnot
