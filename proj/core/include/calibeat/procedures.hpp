#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "calibeat/binning.hpp"
#include "calibeat/random.hpp"
#include "calibeat/simplex.hpp"
#include "calibeat/transcript.hpp"

namespace calibeat {

using BinKey = std::vector<std::size_t>;

// Forecasts the running average action of the current reference bin (a tuple
// of bins for multicalibeating); a bin's first visit gets the seed forecast.
template <Scalar T>
class SimpleCalibeater {
 public:
  explicit SimpleCalibeater(ActionSetPtr actions, std::optional<Dist<T>> seed = std::nullopt)
      : actions_(std::move(actions)), seed_(seed ? *seed : Dist<T>::barycenter(actions_)) {
    require_same(actions_, seed_.action_set());
  }

  Dist<T> forecast(const BinKey& bin) const {
    auto it = state_.find(bin);
    if (it == state_.end()) return seed_;
    const auto& [counts, n] = it->second;
    std::vector<T> w(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) w[k] = T(counts[k]) / T(n);
    return Dist<T>(typename Dist<T>::Trusted{}, actions_, std::move(w));
  }
  Dist<T> forecast(std::size_t bin) const { return forecast(BinKey{bin}); }

  void observe(const BinKey& bin, std::size_t action) {
    if (action >= actions_->size()) throw Error(ErrorKind::Validation, "action index out of range");
    auto& [counts, n] = state_[bin];
    if (counts.empty()) counts.assign(actions_->size(), 0);
    ++counts[action];
    ++n;
  }
  void observe(std::size_t bin, std::size_t action) { observe(BinKey{bin}, action); }

  std::size_t bins_used() const { return state_.size(); }

 private:
  ActionSetPtr actions_;
  Dist<T> seed_;
  std::map<BinKey, std::pair<std::vector<long>, long>> state_;
};

// Finite delta-cover of the simplex by the lattice {k/n}.
struct Grid {
  double delta = 0;
  std::size_t resolution = 0;
  double covering_radius = 0;
  std::vector<Dist<double>> points;

  std::size_t size() const { return points.size(); }
  std::size_t nearest(const Dist<double>& c) const;  // lowest index on ties
};

Grid make_grid(const ActionSetPtr& actions, double delta);
// Largest distance from a sampled simplex point to the grid.
double grid_max_gap(const Grid& grid, std::size_t samples, std::uint64_t seed);

// min over eta in the simplex of max over columns of eta^T M.
struct MatrixGameSolution {
  std::vector<double> row_strategy;
  double value = 0;
};
MatrixGameSolution solve_matrix_game_min(const std::vector<std::vector<double>>& m);

// Stochastic forecaster over a grid. Every reference bin keeps, per grid
// point y, the count n and the bias sum V = sum (a - y) of the periods where y
// was used. Each period it mixes over grid points so that the expected
// first-order change of sum |V|^2/n is as small as the minimax allows.
class GridCalibratedForecaster {
 public:
  explicit GridCalibratedForecaster(std::shared_ptr<const Grid> grid);

  const Grid& grid() const { return *grid_; }
  std::vector<double> mixture(std::size_t bin) const;
  Dist<double> mixture_mean(const std::vector<double>& mix) const;
  std::size_t sample(const std::vector<double>& mix, Rng& rng) const;
  void observe(std::size_t bin, std::size_t point, std::size_t action);

 private:
  struct BinState {
    std::vector<long> count;
    std::vector<std::vector<double>> bias;
  };
  BinState& state(std::size_t bin);

  std::shared_ptr<const Grid> grid_;
  std::map<std::size_t, BinState> bins_;
};

// Action generators. "flip_farthest" plays the pure action farthest from the
// announced forecast (lowest index on ties); "pattern:0110" cycles through
// the given action indices; "stochastic" (or "stochastic:p0,p1,...") draws
// i.i.d. actions from the given probabilities (uniform by default).
class Adversary {
 public:
  static Adversary make(const std::string& id, std::size_t arity, std::uint64_t seed);

  std::size_t next(const Dist<double>& announced);
  const std::string& id() const { return id_; }

 private:
  enum class Kind { FlipFarthest, Pattern, Stochastic };
  Adversary(std::string id, Kind kind, std::uint64_t seed) : id_(std::move(id)), kind_(kind), rng_(seed) {}

  std::string id_;
  Kind kind_;
  std::vector<std::size_t> pattern_;
  std::vector<double> probs_;
  std::size_t period_ = 0;
  Rng rng_;
};

// Reference bin generators over `bins` labels: "random" (seeded uniform),
// "cyclic" (s mod bins), "constant" (always bin 0), "blocks:k" (runs of k).
class ReferenceGenerator {
 public:
  static ReferenceGenerator make(const std::string& id, std::size_t bins, std::uint64_t seed);

  std::size_t next();
  std::size_t bins() const { return bins_; }
  const std::string& id() const { return id_; }

 private:
  ReferenceGenerator(std::string id, std::size_t bins, std::uint64_t seed) : id_(std::move(id)), bins_(bins), rng_(seed) {}

  std::string id_;
  std::size_t bins_;
  std::size_t block_ = 1;
  std::size_t period_ = 0;
  Rng rng_;
};

template <Scalar T>
struct SimpleRun {
  std::vector<std::size_t> actions;
  PureBinning reference;  // labels b0..b{k-1}
  std::vector<Dist<T>> forecasts;
};

PureBinning labelled_binning(std::size_t bins);
PureBinning binning_prefix(const PureBinning& binning, std::size_t t);

template <Scalar T>
SimpleRun<T> run_simple_calibeat(const ActionSetPtr& actions, std::size_t horizon, Adversary& adversary,
                                 ReferenceGenerator& reference, std::optional<Dist<T>> seed = std::nullopt) {
  SimpleRun<T> run;
  run.reference = labelled_binning(reference.bins());
  run.actions.reserve(horizon);
  run.forecasts.reserve(horizon);
  run.reference.ids.reserve(horizon);
  SimpleCalibeater<T> proc(actions, seed);
  for (std::size_t s = 0; s < horizon; ++s) {
    const auto b = reference.next();
    auto c = proc.forecast(b);
    const auto a = adversary.next(to_double_dist(c));
    proc.observe(b, a);
    run.reference.ids.push_back(b);
    run.actions.push_back(a);
    run.forecasts.push_back(std::move(c));
  }
  return run;
}

struct GridRun {
  std::vector<std::size_t> actions;
  PureBinning reference;
  std::vector<std::size_t> grid_index;  // realized grid point
  std::vector<Dist<double>> forecasts;  // realized forecasts
  std::shared_ptr<const Grid> grid;
};

GridRun run_grid_forecaster(const ActionSetPtr& actions, double delta, std::size_t horizon, Adversary& adversary,
                            ReferenceGenerator& reference, std::uint64_t seed);

// The ten-period table of Example 1, repeated m times.
template <Scalar T>
Transcript<T> replay_example_1(std::size_t m = 1) {
  static const int a[] = {1, 0, 0, 0, 0, 1, 1, 1, 1, 0};
  static const int b5[] = {1, 1, 1, 1, 1, 4, 4, 4, 4, 4};  // b in fifths
  static const int c2[] = {2, 0, 1, 1, 1, 1, 1, 1, 2, 0};  // c in halves
  Transcript<T> tr;
  tr.actions = ActionSet::binary();
  for (std::size_t rep = 0; rep < m; ++rep) {
    for (int s = 0; s < 10; ++s) {
      tr.a.push_back(static_cast<std::size_t>(a[s]));
      tr.b.push_back(binary_dist<T>(tr.actions, T(b5[s]) / T(5)));
      tr.c.push_back(binary_dist<T>(tr.actions, T(c2[s]) / T(2)));
    }
  }
  return tr;
}

}  // namespace calibeat
