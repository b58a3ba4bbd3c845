#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calibeat/binning.hpp"
#include "calibeat/error.hpp"
#include "calibeat/scores.hpp"
#include "calibeat/scoring.hpp"

namespace calibeat {

enum class TieRule { Lowest, Highest };

// u: A x X -> R with a best-reply selector x*. Either a finite payoff table
// (u[a][x]) or the utility -L_A(a, c) of a scoring rule over X = C, whose
// best reply to d is d itself.
template <Scalar T>
class Utility {
 public:
  static Utility table(std::string id, ActionSetPtr actions, std::vector<std::string> decisions,
                       std::vector<std::vector<T>> payoff, TieRule tie = TieRule::Lowest) {
    if (payoff.size() != actions->size()) throw Error(ErrorKind::LengthMismatch, "payoff rows must match actions");
    for (const auto& row : payoff) {
      if (row.size() != decisions.size()) throw Error(ErrorKind::LengthMismatch, "payoff columns must match decisions");
    }
    Utility u;
    u.id_ = std::move(id);
    u.actions_ = std::move(actions);
    u.decisions_ = std::move(decisions);
    u.payoff_ = std::move(payoff);
    u.tie_ = tie;
    return u;
  }

  static Utility from_rule(const ScoringRule<T>& rule) {
    Utility u;
    u.id_ = "rule:" + rule.id();
    u.actions_ = rule.action_set();
    u.rule_ = rule;
    return u;
  }

  // u(a,x) = -1{a != x} on a binary action set; decisions ordered ("1","0")
  // so the lowest-index tie rule picks 1 at d = 1/2.
  static Utility threshold(ActionSetPtr actions, TieRule tie = TieRule::Lowest) {
    if (actions->size() != 2) throw Error(ErrorKind::WrongArity, "threshold utility needs two actions");
    const std::size_t one = actions->find("1").value_or(1);
    std::vector<std::vector<T>> pay(2, std::vector<T>(2));
    for (std::size_t a = 0; a < 2; ++a) {
      pay[a][0] = a == one ? T(0) : T(-1);
      pay[a][1] = a == one ? T(-1) : T(0);
    }
    return table(tie == TieRule::Lowest ? "threshold" : "threshold:tie-low", std::move(actions), {"1", "0"},
                 std::move(pay), tie);
  }

  const std::string& id() const { return id_; }
  const ActionSetPtr& action_set() const { return actions_; }
  bool finite() const { return !rule_.has_value(); }
  const std::optional<ScoringRule<T>>& rule() const { return rule_; }
  std::size_t decision_count() const { return decisions_.size(); }
  const std::vector<std::string>& decisions() const { return decisions_; }
  TieRule tie() const { return tie_; }
  const T& payoff(std::size_t a, std::size_t x) const { return payoff_.at(a).at(x); }

  // U(d, x) for a finite decision.
  T expected(const Dist<T>& d, std::size_t x) const {
    Accumulator<T> acc;
    for (std::size_t a = 0; a < d.size(); ++a) acc.add(d[a] * payoff_[a][x]);
    return acc.value();
  }

  std::size_t best_reply(const Dist<T>& d) const {
    if (!finite()) throw Error(ErrorKind::OptimizerFailure, "continuous utility has no decision index");
    if (decisions_.empty()) throw Error(ErrorKind::OptimizerFailure, "empty decision set");
    std::optional<std::size_t> best;
    std::optional<T> best_v;
    for (std::size_t x = 0; x < decisions_.size(); ++x) {
      const T v = expected(d, x);
      if constexpr (!is_exact_v<T>) {
        if (std::isnan(v)) throw Error(ErrorKind::OptimizerFailure, "payoff is NaN");
      }
      const bool better = !best_v || v > *best_v || (tie_ == TieRule::Highest && v == *best_v);
      if (better) best = x, best_v = v;
    }
    return *best;
  }

  // u(., x*(d)) as a vector over actions.
  std::vector<T> reply_payoffs(const Dist<T>& d) const {
    if (rule_) {
      auto v = rule_->loss_vector(d);
      for (auto& x : v) x = -x;
      return v;
    }
    const auto x = best_reply(d);
    std::vector<T> v(actions_->size());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = payoff_[a][x];
    return v;
  }

  Utility scaled(const T& factor) const {
    if (!(factor > T(0))) throw Error(ErrorKind::Validation, "utility scale must be positive");
    Utility u = *this;
    u.id_ = id_ + "*" + scalar_str(factor);
    if (rule_) u.rule_ = rule_->scaled(factor);
    for (auto& row : u.payoff_) {
      for (auto& x : row) x *= factor;
    }
    return u;
  }

 private:
  Utility() = default;

  std::string id_;
  ActionSetPtr actions_;
  std::vector<std::string> decisions_;
  std::vector<std::vector<T>> payoff_;
  TieRule tie_ = TieRule::Lowest;
  std::optional<ScoringRule<T>> rule_;
};

// Bounded constant of the induced rule: the largest distance between two
// decision columns u(., x) (zero for a constant utility).
template <Scalar T>
double induced_bound(const Utility<T>& u) {
  double best = 0;
  for (std::size_t x = 0; x < u.decision_count(); ++x) {
    for (std::size_t y = x + 1; y < u.decision_count(); ++y) {
      double s = 0;
      for (std::size_t a = 0; a < u.action_set()->size(); ++a) {
        const double d = to_double(u.payoff(a, x)) - to_double(u.payoff(a, y));
        s += d * d;
      }
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

// L_A(a, c) = -u(a, x*(c)).
template <Scalar T>
ScoringRule<T> make_induced_rule(const Utility<T>& u) {
  if (u.rule()) {
    const auto& r = *u.rule();
    LossFn<T> fn = r.loss_fn();
    return ScoringRule<T>("induced:" + u.id(), r.action_set(), std::move(fn), r.constants(), r.interior_only());
  }
  if (u.decision_count() == 0) throw Error(ErrorKind::OptimizerFailure, "empty decision set");
  const auto set = u.action_set();
  LossFn<T> fn = [u, set](std::span<const T> c) {
    std::vector<T> w(c.begin(), c.end());
    auto v = u.reply_payoffs(Dist<T>(typename Dist<T>::Trusted{}, set, std::move(w)));
    for (auto& x : v) x = -x;
    return v;
  };
  RuleConstants k;
  k.bound = induced_bound(u);
  if (*k.bound == 0.0) k.lipschitz = 0.0;
  return ScoringRule<T>("induced:" + u.id(), set, std::move(fn), k);
}

// Rescale so that the induced rule is 1-bounded.
template <Scalar T>
Utility<T> normalize_utility(const Utility<T>& u) {
  const double m = u.rule() ? u.rule()->declared_bound().value_or(0.0) : induced_bound(u);
  if (m <= 0.0 || m == 1.0) return u;
  return u.scaled(T(1) / from_double<T>(m));
}

// (1/t) sum_s u(a_s, x*(c_s))
template <Scalar T>
T avg_utility(const Utility<T>& u, std::span<const std::size_t> actions, std::span<const Dist<T>> forecasts) {
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  detail::require_nonempty(actions.size());
  Accumulator<T> acc;
  for (std::size_t s = 0; s < actions.size(); ++s) acc.add(u.reply_payoffs(forecasts[s]).at(actions[s]));
  return acc.value() / detail::count_as<T>(actions.size());
}

template <Scalar T>
struct RegretReport {
  T avg_utility;
  T best_remap_utility;
  T regret;
  T matched_calibration;  // K^{L^u}(c; i)
  T residual;             // regret - matched_calibration
  std::vector<std::optional<std::size_t>> remap;  // per-bin argmax decision (finite X)
  std::optional<T> brute_force_best;              // max over all maps I -> X
  bool brute_force_skipped = false;
};

inline constexpr double kBruteForceLimit = 1e6;

namespace detail {

template <Scalar T>
std::vector<std::vector<long>> bin_action_counts(std::span<const std::size_t> actions, const PureBinning& binning,
                                                 std::size_t arity) {
  std::vector<std::vector<long>> counts(binning.bin_count(), std::vector<long>(arity, 0));
  for (std::size_t s = 0; s < actions.size(); ++s) ++counts[binning.ids[s]][actions[s]];
  return counts;
}

template <Scalar T>
T bin_value(const Utility<T>& u, const std::vector<long>& counts, std::size_t x) {
  Accumulator<T> acc;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a]) acc.add(T(counts[a]) * u.payoff(a, x));
  }
  return acc.value();
}

}  // namespace detail

// max over maps xi: I -> X of the average utility of playing xi(i_s), minus
// the utility of best-replying to the forecasts.
template <Scalar T>
RegretReport<T> regret(const Utility<T>& u, std::span<const std::size_t> actions, std::span<const Dist<T>> forecasts,
                       const PureBinning& binning, bool brute_force = true) {
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  detail::require_length(actions.size(), binning.size(), "actions vs binning");
  detail::require_nonempty(actions.size());
  if (!refines_forecasts(binning, forecasts)) throw Error(ErrorKind::NotARefinement, "binning does not refine the forecasts");
  const std::size_t arity = u.action_set()->size();
  const T t = detail::count_as<T>(actions.size());
  const auto counts = detail::bin_action_counts<T>(actions, binning, arity);

  RegretReport<T> r;
  r.avg_utility = avg_utility(u, actions, forecasts);
  r.remap.assign(binning.bin_count(), std::nullopt);
  Accumulator<T> best;
  for (std::size_t i = 0; i < binning.bin_count(); ++i) {
    long n = 0;
    for (long k : counts[i]) n += k;
    if (n == 0) continue;
    if (u.finite()) {
      std::optional<T> top;
      for (std::size_t x = 0; x < u.decision_count(); ++x) {
        const T v = detail::bin_value(u, counts[i], x);
        if (!top || v > *top) top = v, r.remap[i] = x;
      }
      if (!top) throw Error(ErrorKind::OptimizerFailure, "empty decision set");
      best.add(*top);
    } else {
      std::vector<T> w(arity);
      for (std::size_t a = 0; a < arity; ++a) w[a] = T(counts[i][a]) / T(n);
      const auto pay = u.reply_payoffs(Dist<T>(u.action_set(), std::move(w)));
      for (std::size_t a = 0; a < arity; ++a) {
        if (counts[i][a]) best.add(T(counts[i][a]) * pay[a]);
      }
    }
  }
  r.best_remap_utility = best.value() / t;
  r.regret = r.best_remap_utility - r.avg_utility;
  r.matched_calibration = calibration(make_induced_rule(u), actions, forecasts, binning);
  r.residual = r.regret - r.matched_calibration;

  if (brute_force && u.finite()) {
    const double maps = std::pow(static_cast<double>(u.decision_count()), static_cast<double>(binning.bin_count()));
    if (maps > kBruteForceLimit) {
      r.brute_force_skipped = true;
    } else {
      // value of every decision in every bin, then an odometer over all maps
      std::vector<std::vector<T>> value(binning.bin_count());
      for (std::size_t i = 0; i < binning.bin_count(); ++i) {
        for (std::size_t x = 0; x < u.decision_count(); ++x) value[i].push_back(detail::bin_value(u, counts[i], x));
      }
      std::vector<std::size_t> xi(binning.bin_count(), 0);
      std::optional<T> top;
      while (true) {
        Accumulator<T> acc;
        for (std::size_t i = 0; i < xi.size(); ++i) acc.add(value[i][xi[i]]);
        const T v = acc.value();
        if (!top || v > *top) top = v;
        std::size_t pos = 0;
        while (pos < xi.size() && ++xi[pos] == u.decision_count()) xi[pos++] = 0;
        if (pos == xi.size()) break;
      }
      r.brute_force_best = *top / t;
    }
  }
  return r;
}

template <Scalar T>
struct UtilityGain {
  T utility_c;           // U(c)
  T utility_b;           // U(b)
  T regret_b;            // Reg(b; i)
  T refinement_i;        // R^{L^u}(i)
  T brier_c;             // B^{L^u}(c)
  T residual;            // (U(c) - U(b)) - (Reg(b;i) + R(i) - B(c))
};

template <Scalar T>
UtilityGain<T> utility_gain_check(const Utility<T>& u, std::span<const std::size_t> actions,
                                  std::span<const Dist<T>> b, std::span<const Dist<T>> c, const PureBinning& binning) {
  detail::require_length(b.size(), c.size(), "reference vs forecasts");
  if (!refines_forecasts(binning, b)) throw Error(ErrorKind::NotARefinement, "binning does not refine the reference forecasts");
  const auto rule = make_induced_rule(u);
  UtilityGain<T> g{avg_utility(u, actions, c), avg_utility(u, actions, b), regret(u, actions, b, binning, false).regret,
                   refinement(rule, actions, binning), brier(rule, actions, c), T(0)};
  g.residual = (g.utility_c - g.utility_b) - (g.regret_b + g.refinement_i - g.brier_c);
  return g;
}

template <Scalar T>
struct SwapComparison {
  T swap_regret;      // best map X -> X applied to x*(c_s)
  T forecast_regret;  // best map from forecast values to X
};

template <Scalar T>
SwapComparison<T> swap_vs_forecast_regret(const Utility<T>& u, std::span<const std::size_t> actions,
                                          std::span<const Dist<T>> forecasts) {
  if (!u.finite()) throw Error(ErrorKind::OptimizerFailure, "swap regret needs a finite decision set");
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  std::vector<std::string> chosen;
  chosen.reserve(forecasts.size());
  for (const auto& c : forecasts) chosen.push_back(u.decisions()[u.best_reply(c)]);
  const auto by_decision = PureBinning::from_labels(chosen);
  const auto by_forecast = from_forecasts(forecasts);
  SwapComparison<T> out{T(0), regret(u, actions, forecasts, by_forecast, false).regret};
  const std::size_t arity = u.action_set()->size();
  const auto counts = detail::bin_action_counts<T>(actions, by_decision, arity);
  Accumulator<T> best;
  for (std::size_t i = 0; i < by_decision.bin_count(); ++i) {
    std::optional<T> top;
    for (std::size_t x = 0; x < u.decision_count(); ++x) {
      const T v = detail::bin_value(u, counts[i], x);
      if (!top || v > *top) top = v;
    }
    best.add(*top);
  }
  out.swap_regret = best.value() / detail::count_as<T>(actions.size()) - avg_utility(u, actions, forecasts);
  return out;
}

}  // namespace calibeat
