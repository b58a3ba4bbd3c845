#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "calibeat/simplex.hpp"

namespace calibeat {

// Seeded generator with library-independent derived draws, so runs are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }
  long between(long lo, long hi) { return lo + static_cast<long>(below(static_cast<std::size_t>(hi - lo + 1))); }
  bool coin(double p = 0.5) { return uniform() < p; }
  double exponential() { return -std::log1p(-uniform()); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Flat Dirichlet sample.
  std::vector<double> simplex_point(std::size_t n) {
    std::vector<double> w(n);
    double total = 0;
    for (auto& x : w) total += (x = exponential());
    for (auto& x : w) x /= total;
    return w;
  }

  Dist<double> dist(const ActionSetPtr& actions) {
    return Dist<double>(typename Dist<double>::Trusted{}, actions, simplex_point(actions->size()));
  }

  // Point with small denominators; usable in exact mode. `min_count` 1 keeps it interior.
  template <Scalar T>
  Dist<T> grid_dist(const ActionSetPtr& actions, long max_count = 10, long min_count = 0) {
    std::vector<long> k(actions->size());
    long total = 0;
    do {
      total = 0;
      for (auto& x : k) total += (x = between(min_count, max_count));
    } while (total == 0);
    std::vector<T> w(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) w[i] = T(k[i]) / T(total);
    return Dist<T>(actions, std::move(w));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace calibeat
