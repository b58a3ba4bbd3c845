#include "calibeat/rational.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "calibeat/error.hpp"
#include "calibeat/numeric.hpp"

namespace calibeat {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  }
  return true;
}

mpz_class parse_integer(std::string_view s, std::string_view whole) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) throw Error(ErrorKind::Parse, "bad rational '" + std::string(whole) + "'");
  mpz_class z(std::string(s), 10);
  return neg ? mpz_class(-z) : z;
}

mpz_class pow10(unsigned long e) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
  return r;
}

}  // namespace

Rational::Rational(long num, long den) {
  if (den == 0) throw Error(ErrorKind::Validation, "zero denominator");
  q_ = mpq_class(num, 1);
  q_ /= den;
  q_.canonicalize();
}

Rational::Rational(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::Validation, "non-finite value cannot be made exact");
  q_ = mpq_class(v);
}

Rational& Rational::operator/=(const Rational& o) {
  if (o.is_zero()) throw Error(ErrorKind::Validation, "division by zero");
  q_ /= o.q_;
  return *this;
}

Rational Rational::parse(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) throw Error(ErrorKind::Parse, "empty rational");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    mpz_class n = parse_integer(text.substr(0, slash), text);
    mpz_class d = parse_integer(text.substr(slash + 1), text);
    if (d == 0) throw Error(ErrorKind::Parse, "zero denominator in '" + std::string(text) + "'");
    mpq_class q(n, d);
    q.canonicalize();
    return Rational(q);
  }

  std::string_view s = text;
  bool neg = false;
  if (s.front() == '-' || s.front() == '+') {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view ex = s.substr(e + 1);
    if (!ex.empty() && ex.front() == '+') ex.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(ex.data(), ex.data() + ex.size(), exponent);
    if (ec != std::errc() || ptr != ex.data() + ex.size()) {
      throw Error(ErrorKind::Parse, "bad exponent in '" + std::string(text) + "'");
    }
    s = s.substr(0, e);
  }
  std::string digits;
  long frac = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot);
    std::string_view fp = s.substr(dot + 1);
    if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp))) {
      throw Error(ErrorKind::Parse, "bad decimal '" + std::string(text) + "'");
    }
    digits = std::string(ip) + std::string(fp);
    frac = static_cast<long>(fp.size());
  } else {
    if (!all_digits(s)) throw Error(ErrorKind::Parse, "bad number '" + std::string(text) + "'");
    digits = std::string(s);
  }
  mpz_class mant(digits, 10);
  if (neg) mant = -mant;
  const long scale = exponent - frac;
  mpq_class q;
  if (scale >= 0) {
    q = mpq_class(mant * pow10(static_cast<unsigned long>(scale)));
  } else {
    q = mpq_class(mant, pow10(static_cast<unsigned long>(-scale)));
  }
  q.canonicalize();
  return Rational(q);
}

Rational abs(const Rational& x) { return x.sign() < 0 ? -x : x; }

Rational pow(const Rational& base, int exponent) {
  if (exponent < 0) {
    if (base.is_zero()) throw Error(ErrorKind::Validation, "zero raised to a negative power");
    return Rational(1) / pow(base, -exponent);
  }
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), base.raw().get_num_mpz_t(), static_cast<unsigned long>(exponent));
  mpz_pow_ui(den.get_mpz_t(), base.raw().get_den_mpz_t(), static_cast<unsigned long>(exponent));
  return Rational(mpq_class(num, den));
}

std::string scalar_str(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return ec == std::errc() ? std::string(buf.data(), ptr) : std::string("nan");
}

std::string scalar_str(const Rational& x) {
  return x.str();
}

}  // namespace calibeat
