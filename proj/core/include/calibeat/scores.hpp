#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "calibeat/binning.hpp"
#include "calibeat/error.hpp"
#include "calibeat/numeric.hpp"
#include "calibeat/scoring.hpp"
#include "calibeat/simplex.hpp"

namespace calibeat {

namespace detail {

inline void require_nonempty(std::size_t t) {
  if (t == 0) throw Error(ErrorKind::EmptySequence, "no periods");
}

inline void require_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorKind::LengthMismatch, what);
}

template <Scalar T>
T count_as(std::size_t n) {
  return T(static_cast<long>(n));
}

// Per-bin mass n(i), average action and (optionally) average forecast.
template <Scalar T>
struct BinAverages {
  std::vector<T> mass;
  std::vector<std::optional<Dist<T>>> actions;
  std::vector<std::optional<Dist<T>>> forecasts;
};

template <Scalar T>
BinAverages<T> bin_averages(const ActionSetPtr& set, std::span<const std::size_t> actions,
                            const GeneralBinning<T>& binning, std::span<const Dist<T>> forecasts = {}) {
  const std::size_t n = set->size();
  const std::size_t bins = binning.bin_count();
  std::vector<Accumulator<T>> mass(bins);
  std::vector<std::vector<Accumulator<T>>> asum(bins, std::vector<Accumulator<T>>(n));
  std::vector<std::vector<Accumulator<T>>> csum(forecasts.empty() ? 0 : bins, std::vector<Accumulator<T>>(n));
  // A bin holding a single forecast value reports that value itself: rules
  // that jump at best-reply ties must not see a one-ulp averaging error.
  std::vector<const Dist<T>*> single(bins, nullptr);
  std::vector<bool> mixed(bins, false);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    for (const auto& [i, w] : binning.periods[s]) {
      if (w == T(0)) continue;
      mass[i].add(w);
      asum[i][actions[s]].add(w);
      if (!forecasts.empty()) {
        for (std::size_t k = 0; k < n; ++k) csum[i][k].add(w * forecasts[s][k]);
        if (!single[i]) {
          single[i] = &forecasts[s];
        } else if (!mixed[i] && !(*single[i] == forecasts[s])) {
          mixed[i] = true;
        }
      }
    }
  }
  BinAverages<T> out;
  out.mass.resize(bins);
  out.actions.resize(bins);
  out.forecasts.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out.mass[i] = mass[i].value();
    if (!(out.mass[i] > T(0))) continue;
    std::vector<T> a(n), c(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = asum[i][k].value() / out.mass[i];
    out.actions[i] = Dist<T>(set, std::move(a));
    if (!forecasts.empty() && !mixed[i]) {
      out.forecasts[i] = *single[i];
    } else if (!forecasts.empty()) {
      for (std::size_t k = 0; k < n; ++k) c[k] = csum[i][k].value() / out.mass[i];
      out.forecasts[i] = Dist<T>(set, std::move(c));
    }
  }
  return out;
}

template <Scalar T>
void check_actions(const ScoringRule<T>& rule, std::span<const std::size_t> actions) {
  for (auto a : actions) {
    if (a >= rule.arity()) throw Error(ErrorKind::Validation, "action index out of range");
  }
}

}  // namespace detail

// (1/t) sum_s D(a_s, c_s)
template <Scalar T>
T brier(const ScoringRule<T>& rule, std::span<const std::size_t> actions, std::span<const Dist<T>> forecasts) {
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  detail::require_nonempty(actions.size());
  detail::check_actions(rule, actions);
  Accumulator<T> acc;
  for (std::size_t s = 0; s < actions.size(); ++s) acc.add(rule.divergence(actions[s], forecasts[s]));
  return acc.value() / detail::count_as<T>(actions.size());
}

// (1/t) sum_s L(a_s, c_s); brier equals this minus avg_entropy.
template <Scalar T>
T avg_loss(const ScoringRule<T>& rule, std::span<const std::size_t> actions, std::span<const Dist<T>> forecasts) {
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  detail::require_nonempty(actions.size());
  Accumulator<T> acc;
  for (std::size_t s = 0; s < actions.size(); ++s) acc.add(rule.loss(actions[s], forecasts[s]));
  return acc.value() / detail::count_as<T>(actions.size());
}

template <Scalar T>
T avg_entropy(const ScoringRule<T>& rule, std::span<const std::size_t> actions) {
  detail::require_nonempty(actions.size());
  detail::check_actions(rule, actions);
  Accumulator<T> acc;
  for (auto a : actions) acc.add(rule.action_entropy(a));
  return acc.value() / detail::count_as<T>(actions.size());
}

// (1/t) sum_i n(i) D(abar(i), cbar(i)); empty bins contribute nothing.
template <Scalar T>
T calibration(const ScoringRule<T>& rule, std::span<const std::size_t> actions, std::span<const Dist<T>> forecasts,
              const GeneralBinning<T>& binning) {
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  detail::require_length(actions.size(), binning.size(), "actions vs binning");
  detail::require_nonempty(actions.size());
  detail::check_actions(rule, actions);
  const auto avg = detail::bin_averages(rule.action_set(), actions, binning, forecasts);
  Accumulator<T> acc;
  for (std::size_t i = 0; i < binning.bin_count(); ++i) {
    if (!avg.actions[i]) continue;
    acc.add(avg.mass[i] * rule.divergence(*avg.actions[i], *avg.forecasts[i]));
  }
  return acc.value() / detail::count_as<T>(actions.size());
}

template <Scalar T>
T calibration(const ScoringRule<T>& rule, std::span<const std::size_t> actions, std::span<const Dist<T>> forecasts,
              const PureBinning& binning) {
  return calibration(rule, actions, forecasts, GeneralBinning<T>::from_pure(binning));
}

template <Scalar T>
struct RefinementValue {
  T direct;        // (1/t) sum_i sum_s f_s(i) D(a_s, abar(i))
  T entropy_form;  // sum_i (n(i)/t) H(abar(i)) - avg entropy
};

template <Scalar T>
RefinementValue<T> refinement_both(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                   const GeneralBinning<T>& binning) {
  detail::require_length(actions.size(), binning.size(), "actions vs binning");
  detail::require_nonempty(actions.size());
  detail::check_actions(rule, actions);
  const auto avg = detail::bin_averages(rule.action_set(), actions, binning);
  std::vector<std::vector<T>> bin_loss(binning.bin_count());
  Accumulator<T> ent;
  for (std::size_t i = 0; i < binning.bin_count(); ++i) {
    if (!avg.actions[i]) continue;
    bin_loss[i] = rule.loss_vector(*avg.actions[i]);
    ent.add(avg.mass[i] * rule.entropy(*avg.actions[i]));
  }
  Accumulator<T> direct;
  for (std::size_t s = 0; s < actions.size(); ++s) {
    const T h = rule.action_entropy(actions[s]);
    for (const auto& [i, w] : binning.periods[s]) {
      if (w == T(0)) continue;
      direct.add(w * (bin_loss[i][actions[s]] - h));
    }
  }
  const T t = detail::count_as<T>(actions.size());
  return {direct.value() / t, ent.value() / t - avg_entropy(rule, actions)};
}

template <Scalar T>
T refinement(const ScoringRule<T>& rule, std::span<const std::size_t> actions, const GeneralBinning<T>& binning) {
  return refinement_both(rule, actions, binning).direct;
}

template <Scalar T>
T refinement(const ScoringRule<T>& rule, std::span<const std::size_t> actions, const PureBinning& binning) {
  return refinement(rule, actions, GeneralBinning<T>::from_pure(binning));
}

template <Scalar T>
struct Decomposition {
  T brier;
  T calibration;
  T refinement;
  T residual;  // brier - calibration - refinement
};

// Exact decomposition for a pure binning on which the forecast is constant.
template <Scalar T>
Decomposition<T> decomposition_check(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                     std::span<const Dist<T>> forecasts, const PureBinning& binning) {
  detail::require_length(actions.size(), forecasts.size(), "actions vs forecasts");
  if (!refines_forecasts(binning, forecasts)) {
    throw Error(ErrorKind::NotARefinement, "binning does not refine the forecasts");
  }
  const auto g = GeneralBinning<T>::from_pure(binning);
  Decomposition<T> d{brier(rule, actions, forecasts), calibration(rule, actions, forecasts, g),
                     refinement(rule, actions, g), T(0)};
  d.residual = d.brier - d.calibration - d.refinement;
  return d;
}

struct DeltaDecomposition {
  double brier = 0;
  double calibration = 0;
  double refinement = 0;
  double residual = 0;
  double bound = 0;  // 2 M_L delta
};

template <Scalar T>
DeltaDecomposition delta_decomposition_check(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                             std::span<const Dist<T>> forecasts, const GeneralBinning<T>& binning,
                                             double delta,
                                             std::optional<std::span<const Dist<double>>> centers = std::nullopt) {
  if (!rule.declared_lipschitz()) throw Error(ErrorKind::MissingConstant, "rule '" + rule.id() + "' is not declared Lipschitz");
  if (!check_delta_local(binning, forecasts, delta, centers)) {
    throw Error(ErrorKind::NotDeltaLocal, "binning is not " + scalar_str(delta) + "-local");
  }
  DeltaDecomposition d;
  d.brier = to_double(brier(rule, actions, forecasts));
  d.calibration = to_double(calibration(rule, actions, forecasts, binning));
  d.refinement = to_double(refinement(rule, actions, binning));
  d.residual = d.brier - d.calibration - d.refinement;
  d.bound = 2.0 * *rule.declared_lipschitz() * delta;
  return d;
}

template <Scalar T>
struct OnlineRefinementReport {
  T online;
  T offline;
  T gap;
  std::optional<double> bound;  // 2M (N/t)(ln(t/N) + 1) for declared-Lipschitz rules
  std::size_t bins_used = 0;
  std::size_t t = 0;
};

// Refinement with past-only bin averages; a bin's first visit uses `seed`
// (default: the barycenter).
template <Scalar T>
OnlineRefinementReport<T> online_refinement(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                            const PureBinning& binning,
                                            std::optional<Dist<T>> seed = std::nullopt) {
  detail::require_length(actions.size(), binning.size(), "actions vs binning");
  detail::require_nonempty(actions.size());
  detail::check_actions(rule, actions);
  const auto& set = rule.action_set();
  const Dist<T> first = seed ? *seed : Dist<T>::barycenter(set);
  const std::size_t n = set->size();
  std::vector<std::vector<long>> counts(binning.bin_count());
  std::vector<long> visits(binning.bin_count(), 0);
  Accumulator<T> acc;
  std::size_t used = 0;
  for (std::size_t s = 0; s < actions.size(); ++s) {
    const auto i = binning.ids[s];
    if (visits[i] == 0) {
      ++used;
      counts[i].assign(n, 0);
      acc.add(rule.divergence(actions[s], first));
    } else {
      std::vector<T> w(n);
      for (std::size_t k = 0; k < n; ++k) w[k] = T(counts[i][k]) / T(visits[i]);
      acc.add(rule.divergence(actions[s], Dist<T>(typename Dist<T>::Trusted{}, set, std::move(w))));
    }
    ++counts[i][actions[s]];
    ++visits[i];
  }
  OnlineRefinementReport<T> r{acc.value() / detail::count_as<T>(actions.size()), refinement(rule, actions, binning), T(0),
                              std::nullopt, used, actions.size()};
  r.gap = r.online - r.offline;
  if (rule.declared_lipschitz()) {
    const double t = static_cast<double>(actions.size());
    const double bins = static_cast<double>(used);
    r.bound = 2.0 * *rule.declared_lipschitz() * (bins / t) * (std::log(t / bins) + 1.0);
  }
  return r;
}

template <Scalar T>
struct OnlineOfflineIdentity {
  std::optional<T> online;   // (1/n) sum_j D(x_j, xbar_{j-1})
  std::optional<T> offline;  // (1/n) sum_j D(x_j, xbar_n)
  std::optional<T> lhs;      // online - offline
  T rhs;                     // (1/n) sum_{j >= first} j D(xbar_j, xbar_{j-1})
  std::vector<T> eta;        // j D(xbar_j, xbar_{j-1}) for j >= first
  std::optional<double> bound;  // 2M (ln n + 1)/n
};

// Single-bin online vs offline refinement over points x_1..x_n of the
// simplex with xbar_0 = seed. With first > 1 only the eta terms from j = first
// on are formed (for rules that are infinite at the early averages).
template <Scalar T>
OnlineOfflineIdentity<T> online_offline_identity(const ScoringRule<T>& rule, std::span<const Dist<T>> xs,
                                                 const Dist<T>& seed, std::size_t first = 1) {
  detail::require_nonempty(xs.size());
  const std::size_t n = xs.size();
  const std::size_t dim = rule.arity();
  std::vector<Dist<T>> bars;
  bars.reserve(n + 1);
  bars.push_back(seed);
  std::vector<Accumulator<T>> sum(dim);
  for (std::size_t j = 1; j <= n; ++j) {
    std::vector<T> w(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      sum[k].add(xs[j - 1][k]);
      w[k] = sum[k].value() / detail::count_as<T>(j);
    }
    bars.emplace_back(typename Dist<T>::Trusted{}, rule.action_set(), std::move(w));
  }
  OnlineOfflineIdentity<T> out;
  const T nn = detail::count_as<T>(n);
  Accumulator<T> rhs;
  for (std::size_t j = std::max<std::size_t>(first, 1); j <= n; ++j) {
    const T eta = detail::count_as<T>(j) * rule.divergence(bars[j], bars[j - 1]);
    out.eta.push_back(eta);
    rhs.add(eta);
  }
  out.rhs = rhs.value() / nn;
  if (first <= 1) {
    Accumulator<T> on, off;
    for (std::size_t j = 1; j <= n; ++j) {
      on.add(rule.divergence(xs[j - 1], bars[j - 1]));
      off.add(rule.divergence(xs[j - 1], bars[n]));
    }
    out.online = on.value() / nn;
    out.offline = off.value() / nn;
    out.lhs = *out.online - *out.offline;
  }
  if (rule.declared_lipschitz()) {
    out.bound = 2.0 * *rule.declared_lipschitz() * (std::log(static_cast<double>(n)) + 1.0) / static_cast<double>(n);
  }
  return out;
}

struct CalibrationBound {
  double k_rule = 0;       // K^L
  double k_quadratic = 0;  // K for the quadratic rule
  std::optional<bool> bounded_holds;    // K^L <= M_b sqrt(K) + 1e-9
  std::optional<bool> lipschitz_holds;  // K^L <= M_L K + 1e-9
  bool holds = true;
};

template <Scalar T>
CalibrationBound calibration_bound_check(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                         std::span<const Dist<T>> forecasts, const GeneralBinning<T>& binning) {
  if (!rule.declared_bound() && !rule.declared_lipschitz()) {
    throw Error(ErrorKind::MissingConstant, "rule '" + rule.id() + "' declares no constant");
  }
  const auto quad = make_quadratic<T>(rule.action_set());
  CalibrationBound r;
  r.k_rule = to_double(calibration(rule, actions, forecasts, binning));
  r.k_quadratic = to_double(calibration(quad, actions, forecasts, binning));
  if (rule.declared_bound()) {
    r.bounded_holds = r.k_rule <= *rule.declared_bound() * std::sqrt(std::max(0.0, r.k_quadratic)) + 1e-9;
    r.holds = r.holds && *r.bounded_holds;
  }
  if (rule.declared_lipschitz()) {
    r.lipschitz_holds = r.k_rule <= *rule.declared_lipschitz() * r.k_quadratic + 1e-9;
    r.holds = r.holds && *r.lipschitz_holds;
  }
  return r;
}

struct MonotonicityReport {
  double fine = 0;
  double coarse = 0;
  bool holds = true;
};

// Refinement score can only drop when the binning is refined.
template <Scalar T>
MonotonicityReport refinement_monotonicity_check(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                                 const GeneralBinning<T>& fine, const GeneralBinning<T>& coarse,
                                                 const RefinementWitness& witness) {
  if (!check_refines(fine, coarse, witness)) throw Error(ErrorKind::NotARefinement, "fine binning does not refine coarse");
  MonotonicityReport r;
  const T rf = refinement(rule, actions, fine);
  const T rc = refinement(rule, actions, coarse);
  r.fine = to_double(rf);
  r.coarse = to_double(rc);
  if constexpr (is_exact_v<T>) {
    r.holds = rf <= rc;
  } else {
    r.holds = rf <= rc + 1e-10;
  }
  return r;
}

struct CalibrationChain {
  double fine = 0;      // K(c; f)
  double mid = 0;       // K(c; g)
  double forecast = 0;  // K(c)
  bool holds = true;
};

// K(c;f) >= K(c;g) >= K(c) for f refining g, with g's bins each carrying a
// single forecast value.
template <Scalar T>
CalibrationChain calibration_monotonicity_check(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                                                std::span<const Dist<T>> forecasts, const GeneralBinning<T>& fine,
                                                const GeneralBinning<T>& mid, const RefinementWitness& witness) {
  if (!check_refines(fine, mid, witness)) throw Error(ErrorKind::NotARefinement, "fine binning does not refine mid");
  const auto by_forecast = from_forecasts(forecasts);
  RefinementWitness to_forecast{std::vector<std::size_t>(mid.bin_count(), by_forecast.bin_count())};
  for (std::size_t s = 0; s < mid.size(); ++s) {
    for (const auto& [j, w] : mid.periods[s]) {
      if (!(w > T(0))) continue;
      auto& slot = to_forecast.fine_to_coarse[j];
      if (slot == by_forecast.bin_count()) {
        slot = by_forecast.ids[s];
      } else if (slot != by_forecast.ids[s]) {
        throw Error(ErrorKind::NotARefinement, "mid binning mixes forecast values");
      }
    }
  }
  for (auto& slot : to_forecast.fine_to_coarse) {
    if (slot == by_forecast.bin_count()) slot = 0;  // empty bin
  }
  const auto g_forecast = GeneralBinning<T>::from_pure(by_forecast);
  CalibrationChain r;
  const T kf = calibration(rule, actions, forecasts, fine);
  const T km = calibration(rule, actions, forecasts, mid);
  const T kc = calibration(rule, actions, forecasts, g_forecast);
  r.fine = to_double(kf);
  r.mid = to_double(km);
  r.forecast = to_double(kc);
  if constexpr (is_exact_v<T>) {
    r.holds = kf >= km && km >= kc;
  } else {
    r.holds = kf + 1e-10 >= km && km + 1e-10 >= kc;
  }
  return r;
}

}  // namespace calibeat
