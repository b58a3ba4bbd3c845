#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calibeat/error.hpp"
#include "calibeat/numeric.hpp"
#include "calibeat/random.hpp"
#include "calibeat/simplex.hpp"

namespace calibeat {

// c -> L(c), the vector of losses of each action when c is forecast.
template <Scalar T>
using LossFn = std::function<std::vector<T>(std::span<const T>)>;

struct RuleConstants {
  std::optional<double> bound;      // M with ||L(c)-L(c')|| <= M
  std::optional<double> lipschitz;  // M with ||L(c)-L(c')|| <= M ||c-c'||
};

enum class NormalizeMode { Bounded, Lipschitz };

template <Scalar T>
class ScoringRule {
 public:
  // `interior_only` marks rules that are infinite on the simplex boundary.
  // The proper flag is the outcome of a seeded properness sample.
  ScoringRule(std::string id, ActionSetPtr actions, LossFn<T> fn, RuleConstants constants, bool interior_only = false)
      : id_(std::move(id)),
        actions_(std::move(actions)),
        fn_(std::move(fn)),
        constants_(constants),
        interior_only_(interior_only) {
    if (!interior_only_) {
      for (std::size_t a = 0; a < actions_->size(); ++a) {
        action_entropy_.push_back(entropy(Dist<T>::unit(actions_, a)));
      }
    }
    proper_ = verify_proper();
  }

  const std::string& id() const { return id_; }
  const ActionSetPtr& action_set() const { return actions_; }
  std::size_t arity() const { return actions_->size(); }
  const std::optional<double>& declared_bound() const { return constants_.bound; }
  const std::optional<double>& declared_lipschitz() const { return constants_.lipschitz; }
  const RuleConstants& constants() const { return constants_; }
  bool proper() const { return proper_; }
  bool interior_only() const { return interior_only_; }
  const LossFn<T>& loss_fn() const { return fn_; }

  std::vector<T> loss_vector(const Dist<T>& c) const {
    require_same(actions_, c.action_set());
    return fn_(c.weights());
  }

  // L_A(a, c)
  T loss(std::size_t a, const Dist<T>& c) const { return loss_vector(c).at(a); }

  T expected_loss(const Dist<T>& d, const Dist<T>& c) const {
    require_same(d.action_set(), c.action_set());
    return dot(d, loss_vector(c));
  }

  T entropy(const Dist<T>& c) const { return expected_loss(c, c); }

  T divergence(const Dist<T>& d, const Dist<T>& c) const {
    if (d == c) return T(0);
    return expected_loss(d, c) - entropy(d);
  }

  // D(e_a, c) for a pure action.
  T divergence(std::size_t a, const Dist<T>& c) const { return loss(a, c) - action_entropy(a); }

  T action_entropy(std::size_t a) const {
    if (interior_only_) throw Error(ErrorKind::Validation, "rule '" + id_ + "' is infinite at pure actions");
    return action_entropy_.at(a);
  }

  ScoringRule scaled(const T& factor, std::string new_id = {}) const {
    if (!(factor > T(0))) throw Error(ErrorKind::Validation, "scale factor must be positive");
    auto base = fn_;
    LossFn<T> fn = [base, factor](std::span<const T> c) {
      auto v = base(c);
      for (auto& x : v) x *= factor;
      return v;
    };
    const double f = to_double(factor);
    RuleConstants k;
    if (constants_.bound) k.bound = *constants_.bound * f;
    if (constants_.lipschitz) k.lipschitz = *constants_.lipschitz * f;
    if (new_id.empty()) new_id = id_ + "*" + scalar_str(factor);
    return ScoringRule(std::move(new_id), actions_, std::move(fn), k, interior_only_);
  }

 private:
  static T dot(const Dist<T>& d, const std::vector<T>& v) {
    Accumulator<T> acc;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (d[k] != T(0)) acc.add(d[k] * v[k]);
    }
    return acc.value();
  }

  bool verify_proper() const {
    Rng rng(0xCA1BEA7ULL ^ (actions_->size() * 0x9E3779B97F4A7C15ULL));
    const long lo = interior_only_ ? 1 : 0;
    for (int k = 0; k < 48; ++k) {
      const auto d = rng.grid_dist<T>(actions_, 12, lo);
      const auto c = rng.grid_dist<T>(actions_, 12, lo);
      const T dv = expected_loss(d, c) - entropy(d);
      if constexpr (is_exact_v<T>) {
        if (dv < T(0)) return false;
      } else {
        if (!(dv >= -1e-10)) return false;
      }
    }
    return true;
  }

  std::string id_;
  ActionSetPtr actions_;
  LossFn<T> fn_;
  RuleConstants constants_;
  bool interior_only_ = false;
  bool proper_ = false;
  std::vector<T> action_entropy_;
};

// Constants of a rule from a fine sweep of the simplex, inflated by a small
// safety margin. Results are cached per (key, |A|).
RuleConstants sweep_constants(const std::string& key, const LossFn<double>& fn, std::size_t arity, bool want_bound,
                              bool want_lipschitz);

// Analytic constants of the quadratic rule -2c(a) + ||c||^2.
RuleConstants quadratic_constants(std::size_t arity);

template <Scalar T>
ScoringRule<T> make_quadratic(ActionSetPtr actions) {
  LossFn<T> fn = [](std::span<const T> c) {
    T sq(0);
    for (const auto& x : c) sq += x * x;
    std::vector<T> v(c.size());
    for (std::size_t a = 0; a < c.size(); ++a) v[a] = sq - T(2) * c[a];
    return v;
  };
  const auto k = quadratic_constants(actions->size());
  return ScoringRule<T>("quadratic", std::move(actions), std::move(fn), k);
}

ScoringRule<double> make_spherical(ActionSetPtr actions, double alpha);

namespace detail {

inline bool is_integer(double x) { return std::floor(x) == x && std::fabs(x) < 1e6; }

template <Scalar T>
T power_of(const T& base, double exponent) {
  if constexpr (is_exact_v<T>) {
    return pow(base, static_cast<int>(exponent));
  } else {
    return std::pow(base, exponent);
  }
}

template <Scalar T>
LossFn<T> power_loss(double alpha) {
  const bool needs_interior = alpha < 1.0;
  return [alpha, needs_interior](std::span<const T> c) {
    T sum(0);
    for (const auto& x : c) {
      if (needs_interior && x == T(0)) throw Error(ErrorKind::Validation, "power rule with alpha<1 is infinite on the boundary");
      sum += power_of(x, alpha);
    }
    const T inv_alpha_minus_1 = T(1) / from_double<T>(alpha - 1.0);
    const T mean_term = sum / from_double<T>(alpha);
    std::vector<T> v(c.size());
    for (std::size_t a = 0; a < c.size(); ++a) v[a] = mean_term - inv_alpha_minus_1 * power_of(c[a], alpha - 1.0);
    return v;
  };
}

std::string alpha_str(double alpha);

}  // namespace detail

// Tsallis-type rule; alpha = 2 is half the quadratic rule.
template <Scalar T>
ScoringRule<T> make_power(ActionSetPtr actions, double alpha) {
  if (!std::isfinite(alpha) || alpha == 0.0 || alpha == 1.0) throw Error(ErrorKind::BadAlpha, "power rule needs alpha not in {0,1}");
  if constexpr (is_exact_v<T>) {
    if (!detail::is_integer(alpha)) throw Error(ErrorKind::BadAlpha, "exact power rule needs an integer alpha");
  }
  const std::string id = "power:" + detail::alpha_str(alpha);
  RuleConstants k;
  if (alpha > 1.0) {
    k = sweep_constants(id, detail::power_loss<double>(alpha), actions->size(), true, alpha >= 2.0);
  }
  return ScoringRule<T>(id, std::move(actions), detail::power_loss<T>(alpha), k, alpha < 1.0);
}

enum class StepTie { HighAtHalf, LowAtHalf };

// Binary rule L(d,c) = 1-d if c >= 1/2 else d, with d, c the probability of "1".
template <Scalar T>
ScoringRule<T> make_step(ActionSetPtr actions, StepTie tie = StepTie::HighAtHalf) {
  if (actions->size() != 2) throw Error(ErrorKind::WrongArity, "step rule needs exactly two actions");
  const std::size_t one = actions->find("1").value_or(1);
  LossFn<T> fn = [one, tie](std::span<const T> c) {
    const T half = T(1) / T(2);
    const bool high = tie == StepTie::HighAtHalf ? c[one] >= half : c[one] > half;
    std::vector<T> v(2);
    v[one] = high ? T(0) : T(1);
    v[1 - one] = high ? T(1) : T(0);
    return v;
  };
  RuleConstants k;
  k.bound = std::sqrt(2.0);
  return ScoringRule<T>(tie == StepTie::HighAtHalf ? "step" : "step:tie-low", std::move(actions), std::move(fn), k);
}

// Rule generated by a concave entropy H and a supergradient G via
// L(c) = G(c) + (H(c) - c.G(c)) 1.
ScoringRule<double> make_entropy_rule(std::string id, ActionSetPtr actions,
                                      std::function<double(std::span<const double>)> entropy,
                                      std::function<std::vector<double>(std::span<const double>)> supergradient,
                                      RuleConstants constants = {});

// Catalog lookup: "quadratic", "spherical:a", "power:a", "step", "step:tie-low".
template <Scalar T>
ScoringRule<T> make_rule(const std::string& id, ActionSetPtr actions);

template <Scalar T>
ScoringRule<T> normalize_rule(const ScoringRule<T>& rule, NormalizeMode mode) {
  const auto& m = mode == NormalizeMode::Bounded ? rule.declared_bound() : rule.declared_lipschitz();
  const char* tag = mode == NormalizeMode::Bounded ? "bounded" : "lipschitz";
  if (!m) throw Error(ErrorKind::MissingConstant, "rule '" + rule.id() + "' has no declared " + tag + " constant");
  if (*m <= 0.0 || *m == 1.0) return rule.scaled(T(1), rule.id() + "@" + tag);
  return rule.scaled(T(1) / from_double<T>(*m), rule.id() + "@" + tag);
}

struct ConstantEstimate {
  double bound = 0.0;
  double lipschitz = 0.0;
};

// Empirical lower bounds for the two constants over a deterministic pair set:
// random pairs, short random segments, and segments through the barycenter
// whose length shrinks with the sample count.
template <Scalar T>
ConstantEstimate estimate_constants(const ScoringRule<T>& rule, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw Error(ErrorKind::Validation, "need at least two samples");
  const auto& actions = rule.action_set();
  const std::size_t n = actions->size();
  Rng rng(seed);
  ConstantEstimate est;
  auto eval = [&](const std::vector<double>& w) {
    std::vector<T> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = from_double<T>(w[k]);
    return rule.loss_fn()(std::span<const T>(x));
  };
  auto probe = [&](const std::vector<double>& c, const std::vector<double>& c2) {
    const auto l1 = eval(c);
    const auto l2 = eval(c2);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double dl = to_double(l1[k]) - to_double(l2[k]);
      num += dl * dl;
      den += (c[k] - c2[k]) * (c[k] - c2[k]);
    }
    num = std::sqrt(num);
    den = std::sqrt(den);
    est.bound = std::max(est.bound, num);
    // coincident probes differ only by roundoff, so their ratio is noise
    if (den > 1e-9) est.lipschitz = std::max(est.lipschitz, num / den);
  };
  auto interior = [&](std::vector<double> w) {
    if (!rule.interior_only()) return w;
    for (auto& x : w) x = 1e-6 + (1 - 1e-6 * static_cast<double>(n)) * x;
    return w;
  };
  auto shift = [&](const std::vector<double>& c, double eps) {
    std::vector<double> dir(n);
    for (auto& x : dir) x = rng.normal();
    double mean = 0;
    for (double x : dir) mean += x / static_cast<double>(n);
    double norm = 0;
    for (auto& x : dir) {
      x -= mean;
      norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<double> out(n);
    double lo = 0;
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = c[k] + eps * dir[k] / norm;
      lo = std::min(lo, out[k]);
    }
    if (lo < 0) return c;
    return out;
  };
  std::vector<double> center(n, 1.0 / static_cast<double>(n));
  for (std::size_t s = 0; s < samples; ++s) {
    const auto c = interior(rng.simplex_point(n));
    switch (s % 3) {
      case 0: probe(c, interior(rng.simplex_point(n))); break;
      case 1: probe(c, shift(c, 1e-3)); break;
      default: {
        const double eps = 1.0 / static_cast<double>(s + 1);
        probe(shift(center, eps / 2), shift(center, eps / 2));
        break;
      }
    }
  }
  for (std::size_t a = 0; a < n && !rule.interior_only(); ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::vector<double> ea(n, 0.0), eb(n, 0.0);
      ea[a] = 1;
      eb[b] = 1;
      probe(ea, eb);
    }
  }
  return est;
}

}  // namespace calibeat
