#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <gmpxx.h>

namespace calibeat {

// Exact rational value. Wraps mpq_class so generic code never sees
// gmpxx expression templates.
class Rational {
 public:
  Rational() = default;
  Rational(int v) : q_(v) {}
  Rational(long v) : q_(v) {}
  Rational(long long v) : q_(static_cast<long>(v)) {}
  Rational(unsigned long v) : q_(v) {}
  Rational(long num, long den);
  explicit Rational(double v);  // exact binary value of v
  explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

  // Accepts "3/4", "-2", "0.2", "1e-3", "1.5E+2".
  static Rational parse(std::string_view text);

  double to_double() const { return q_.get_d(); }
  std::string str() const { return q_.get_str(); }
  const mpq_class& raw() const { return q_; }
  bool is_zero() const { return sgn(q_) == 0; }
  int sign() const { return sgn(q_); }

  Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
  Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
  Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
  Rational& operator/=(const Rational& o);

  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
  friend Rational operator-(const Rational& a) { return Rational(mpq_class(-a.q_)); }

  friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.q_, b.q_) == 0; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const int c = cmp(a.q_, b.q_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  mpq_class q_;
};

Rational abs(const Rational& x);
// Integer power; negative exponents invert (throws Validation on 0^-k).
Rational pow(const Rational& base, int exponent);

}  // namespace calibeat
