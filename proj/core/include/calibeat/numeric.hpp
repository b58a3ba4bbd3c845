#pragma once

#include <cmath>
#include <concepts>
#include <string>
#include <type_traits>

#include "calibeat/rational.hpp"

namespace calibeat {

template <class T>
concept Scalar = std::same_as<T, double> || std::same_as<T, Rational>;

inline constexpr double kMassTolerance = 1e-12;
inline constexpr double kBinTolerance = 1e-9;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.to_double(); }

template <Scalar T>
T from_double(double x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    return Rational(x);
  }
}

template <Scalar T>
T scalar_abs(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    return std::fabs(x);
  } else {
    return abs(x);
  }
}

template <Scalar T>
constexpr bool is_exact_v = std::is_same_v<T, Rational>;

// Tolerance-aware comparisons; exact for Rational.
template <Scalar T>
bool approx_equal(const T& a, const T& b, double tol) {
  if constexpr (is_exact_v<T>) {
    return a == b;
  } else {
    return std::fabs(a - b) <= tol;
  }
}

std::string scalar_str(double x);
std::string scalar_str(const Rational& x);

// Compensated running sum (Neumaier) for double; plain sum for Rational.
template <Scalar T>
class Accumulator {
 public:
  void add(const T& x) {
    if constexpr (is_exact_v<T>) {
      sum_ += x;
    } else {
      const double t = sum_ + x;
      if (std::fabs(sum_) >= std::fabs(x)) {
        comp_ += (sum_ - t) + x;
      } else {
        comp_ += (x - t) + sum_;
      }
      sum_ = t;
    }
  }
  T value() const {
    if constexpr (is_exact_v<T>) {
      return sum_;
    } else {
      return sum_ + comp_;
    }
  }

 private:
  T sum_{0};
  double comp_ = 0.0;
};

}  // namespace calibeat
