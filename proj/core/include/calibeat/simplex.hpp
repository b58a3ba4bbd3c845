#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calibeat/error.hpp"
#include "calibeat/numeric.hpp"

namespace calibeat {

class ActionSet {
 public:
  explicit ActionSet(std::vector<std::string> labels);

  static std::shared_ptr<const ActionSet> binary();  // {"0","1"}
  static std::shared_ptr<const ActionSet> indexed(std::size_t n);  // {"0",...,"n-1"}

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> find(std::string_view label) const;
  std::size_t index_of(std::string_view label) const;  // throws Validation

  friend bool operator==(const ActionSet& a, const ActionSet& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
};

using ActionSetPtr = std::shared_ptr<const ActionSet>;

inline void require_same(const ActionSetPtr& a, const ActionSetPtr& b) {
  if (a != b && !(a && b && *a == *b)) throw Error(ErrorKind::ActionSetMismatch, "distributions over different action sets");
}

// A point of the simplex over an action set.
template <Scalar T>
class Dist {
 public:
  struct Trusted {};

  Dist() = default;
  Dist(ActionSetPtr actions, std::vector<T> weights) : actions_(std::move(actions)), w_(std::move(weights)) {
    validate();
  }
  Dist(Trusted, ActionSetPtr actions, std::vector<T> weights) : actions_(std::move(actions)), w_(std::move(weights)) {}

  static Dist unit(ActionSetPtr actions, std::size_t a) {
    std::vector<T> w(actions->size(), T(0));
    w.at(a) = T(1);
    return Dist(Trusted{}, std::move(actions), std::move(w));
  }
  static Dist barycenter(ActionSetPtr actions) {
    const auto n = static_cast<long>(actions->size());
    std::vector<T> w(actions->size(), T(1) / T(n));
    return Dist(Trusted{}, std::move(actions), std::move(w));
  }

  std::size_t size() const { return w_.size(); }
  const T& operator[](std::size_t i) const { return w_[i]; }
  std::span<const T> weights() const { return w_; }
  const ActionSetPtr& action_set() const { return actions_; }

  friend bool operator==(const Dist& a, const Dist& b) { return a.w_ == b.w_; }

 private:
  void validate() {
    if (!actions_) throw Error(ErrorKind::ActionSetMismatch, "missing action set");
    if (w_.size() != actions_->size()) {
      throw Error(ErrorKind::LengthMismatch, "expected " + std::to_string(actions_->size()) + " weights, got " +
                                                 std::to_string(w_.size()));
    }
    Accumulator<T> total;
    for (auto& x : w_) {
      if constexpr (is_exact_v<T>) {
        if (x < T(0)) throw Error(ErrorKind::NegativeWeight, "weight " + x.str());
      } else {
        if (!std::isfinite(x)) throw Error(ErrorKind::Validation, "non-finite weight");
        if (x < -kMassTolerance) throw Error(ErrorKind::NegativeWeight, "weight " + scalar_str(x));
        if (x < 0.0) x = 0.0;
      }
      total.add(x);
    }
    const T mass = total.value();
    if constexpr (is_exact_v<T>) {
      if (mass != T(1)) throw Error(ErrorKind::MassNotOne, "mass " + mass.str());
    } else {
      if (std::fabs(mass - 1.0) > kMassTolerance) throw Error(ErrorKind::MassNotOne, "mass " + scalar_str(mass));
      if (mass != 1.0) {
        for (auto& x : w_) x /= mass;
      }
    }
  }

  ActionSetPtr actions_;
  std::vector<T> w_;
};

template <Scalar T>
Dist<T> dist_new(ActionSetPtr actions, std::vector<T> weights) {
  return Dist<T>(std::move(actions), std::move(weights));
}

template <Scalar T>
T squared_distance(const Dist<T>& x, const Dist<T>& y) {
  require_same(x.action_set(), y.action_set());
  Accumulator<T> acc;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const T d = x[k] - y[k];
    acc.add(d * d);
  }
  return acc.value();
}

template <Scalar T>
double euclid_dist(const Dist<T>& x, const Dist<T>& y) {
  return std::sqrt(to_double(squared_distance(x, y)));
}

// Weighted average of simplex points; weights default to uniform.
template <Scalar T>
Dist<T> running_average(std::span<const Dist<T>> points, std::optional<std::span<const T>> weights = std::nullopt) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "no points to average");
  if (weights && weights->size() != points.size()) throw Error(ErrorKind::LengthMismatch, "weights vs points");
  const auto& actions = points.front().action_set();
  const std::size_t n = actions->size();
  std::vector<Accumulator<T>> acc(n);
  Accumulator<T> total;
  for (std::size_t s = 0; s < points.size(); ++s) {
    require_same(actions, points[s].action_set());
    const T w = weights ? (*weights)[s] : T(1);
    if (w < T(0)) throw Error(ErrorKind::NegativeWeight, "averaging weight");
    total.add(w);
    for (std::size_t k = 0; k < n; ++k) acc[k].add(w * points[s][k]);
  }
  const T sum = total.value();
  if (!(sum > T(0))) throw Error(ErrorKind::ZeroTotalWeight, "averaging weights sum to zero");
  std::vector<T> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = acc[k].value() / sum;
  return Dist<T>(actions, std::move(out));
}

template <Scalar T>
std::string dist_str(const Dist<T>& d) {
  std::string s = "(";
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (k) s += ",";
    s += scalar_str(d[k]);
  }
  return s + ")";
}

template <Scalar T>
Dist<double> to_double_dist(const Dist<T>& d) {
  std::vector<double> w(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) w[k] = to_double(d[k]);
  return Dist<double>(typename Dist<double>::Trusted{}, d.action_set(), std::move(w));
}

// Binary convention: the scalar coordinate is the probability of action "1".
template <Scalar T>
Dist<T> binary_dist(ActionSetPtr actions, const T& p1) {
  if (actions->size() != 2) throw Error(ErrorKind::WrongArity, "binary distribution needs |A|=2");
  const std::size_t one = actions->find("1").value_or(1);
  std::vector<T> w(2);
  w[one] = p1;
  w[1 - one] = T(1) - p1;
  return Dist<T>(std::move(actions), std::move(w));
}

}  // namespace calibeat
