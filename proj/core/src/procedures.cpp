#include "calibeat/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace calibeat {

namespace {

double sq_distance(const Dist<double>& x, const Dist<double>& y) {
  double s = 0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

std::size_t Grid::nearest(const Dist<double>& c) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = sq_distance(c, points[i]);
    if (d < best_d) best = i, best_d = d;
  }
  return best;
}

Grid make_grid(const ActionSetPtr& actions, double delta) {
  if (!(delta > 0)) throw Error(ErrorKind::Validation, "grid delta must be positive");
  Grid g;
  g.delta = delta;
  g.resolution = lattice_resolution_for(actions->size(), delta);
  g.covering_radius = lattice_covering_radius(actions->size(), g.resolution);
  g.points = simplex_lattice(actions, g.resolution);
  return g;
}

double grid_max_gap(const Grid& grid, std::size_t samples, std::uint64_t seed) {
  if (grid.points.empty()) throw Error(ErrorKind::GridMissing, "empty grid");
  Rng rng(seed);
  const auto& actions = grid.points.front().action_set();
  double worst = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto c = rng.dist(actions);
    worst = std::max(worst, std::sqrt(sq_distance(c, grid.points[grid.nearest(c)])));
  }
  return worst;
}

GridCalibratedForecaster::GridCalibratedForecaster(std::shared_ptr<const Grid> grid) : grid_(std::move(grid)) {
  if (!grid_ || grid_->points.empty()) throw Error(ErrorKind::GridMissing, "grid forecaster needs a grid");
}

GridCalibratedForecaster::BinState& GridCalibratedForecaster::state(std::size_t bin) {
  auto& st = bins_[bin];
  if (st.count.empty()) {
    const std::size_t n = grid_->points.front().size();
    st.count.assign(grid_->size(), 0);
    st.bias.assign(grid_->size(), std::vector<double>(n, 0.0));
  }
  return st;
}

std::vector<double> GridCalibratedForecaster::mixture(std::size_t bin) const {
  const std::size_t points = grid_->size();
  const std::size_t n = grid_->points.front().size();
  auto it = bins_.find(bin);
  if (it == bins_.end()) {
    // no history: every point is equally unbiased; take the first
    std::vector<double> mix(points, 0.0);
    mix[0] = 1.0;
    return mix;
  }
  const auto& st = it->second;
  // payoff of point y against action a: g.(e_a - y), g = V/(n+1)
  std::vector<std::vector<double>> m(points, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < points; ++i) {
    const auto& y = grid_->points[i];
    const double scale = 1.0 / static_cast<double>(st.count[i] + 1);
    double gy = 0;
    for (std::size_t k = 0; k < n; ++k) gy += st.bias[i][k] * y[k];
    for (std::size_t a = 0; a < n; ++a) m[i][a] = scale * (st.bias[i][a] - gy);
  }
  return solve_matrix_game_min(m).row_strategy;
}

Dist<double> GridCalibratedForecaster::mixture_mean(const std::vector<double>& mix) const {
  const std::size_t n = grid_->points.front().size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (mix[i] == 0.0) continue;
    for (std::size_t k = 0; k < n; ++k) w[k] += mix[i] * grid_->points[i][k];
  }
  return Dist<double>(grid_->points.front().action_set(), std::move(w));
}

std::size_t GridCalibratedForecaster::sample(const std::vector<double>& mix, Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    if (mix[i] <= 0.0) continue;
    last = i;
    acc += mix[i];
    if (u < acc) return i;
  }
  return last;
}

void GridCalibratedForecaster::observe(std::size_t bin, std::size_t point, std::size_t action) {
  auto& st = state(bin);
  const auto& y = grid_->points.at(point);
  ++st.count[point];
  for (std::size_t k = 0; k < y.size(); ++k) st.bias[point][k] += (k == action ? 1.0 : 0.0) - y[k];
}

Adversary Adversary::make(const std::string& id, std::size_t arity, std::uint64_t seed) {
  if (id == "flip_farthest") return Adversary(id, Kind::FlipFarthest, seed);
  const auto colon = id.find(':');
  const std::string family = id.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : id.substr(colon + 1);
  if (family == "pattern") {
    Adversary adv(id, Kind::Pattern, seed);
    for (char ch : arg) {
      if (ch < '0' || ch > '9' || static_cast<std::size_t>(ch - '0') >= arity) {
        throw Error(ErrorKind::UnknownStrategy, "bad pattern '" + arg + "'");
      }
      adv.pattern_.push_back(static_cast<std::size_t>(ch - '0'));
    }
    if (adv.pattern_.empty()) throw Error(ErrorKind::UnknownStrategy, "empty pattern");
    return adv;
  }
  if (family == "stochastic") {
    Adversary adv(id, Kind::Stochastic, seed);
    if (arg.empty()) {
      adv.probs_.assign(arity, 1.0 / static_cast<double>(arity));
    } else {
      for (const auto& p : split(arg, ',')) {
        try {
          adv.probs_.push_back(std::stod(p));
        } catch (const std::exception&) {
          throw Error(ErrorKind::UnknownStrategy, "bad probability '" + p + "'");
        }
      }
      if (adv.probs_.size() != arity) throw Error(ErrorKind::UnknownStrategy, "stochastic adversary needs one probability per action");
      Dist<double> check(ActionSet::indexed(arity), adv.probs_);
      (void)check;
    }
    return adv;
  }
  throw Error(ErrorKind::UnknownStrategy, "unknown adversary '" + id + "'");
}

std::size_t Adversary::next(const Dist<double>& announced) {
  const std::size_t s = period_++;
  switch (kind_) {
    case Kind::FlipFarthest: {
      std::size_t best = 0;
      for (std::size_t k = 1; k < announced.size(); ++k) {
        if (announced[k] < announced[best]) best = k;
      }
      return best;
    }
    case Kind::Pattern:
      return pattern_[s % pattern_.size()];
    case Kind::Stochastic: {
      const double u = rng_.uniform();
      double acc = 0;
      for (std::size_t k = 0; k < probs_.size(); ++k) {
        acc += probs_[k];
        if (u < acc) return k;
      }
      return probs_.size() - 1;
    }
  }
  return 0;
}

ReferenceGenerator ReferenceGenerator::make(const std::string& id, std::size_t bins, std::uint64_t seed) {
  if (bins == 0) throw Error(ErrorKind::Config, "reference needs at least one bin");
  if (id == "random" || id == "cyclic" || id == "constant") return ReferenceGenerator(id, bins, seed);
  if (id.rfind("blocks:", 0) == 0) {
    ReferenceGenerator g(id, bins, seed);
    try {
      g.block_ = static_cast<std::size_t>(std::stoul(id.substr(7)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::UnknownStrategy, "bad block length in '" + id + "'");
    }
    if (g.block_ == 0) throw Error(ErrorKind::UnknownStrategy, "block length must be positive");
    return g;
  }
  throw Error(ErrorKind::UnknownStrategy, "unknown reference generator '" + id + "'");
}

std::size_t ReferenceGenerator::next() {
  const std::size_t s = period_++;
  if (id_ == "random") return rng_.below(bins_);
  if (id_ == "cyclic") return s % bins_;
  if (id_ == "constant") return 0;
  return (s / block_) % bins_;
}

PureBinning labelled_binning(std::size_t bins) {
  PureBinning b;
  for (std::size_t i = 0; i < bins; ++i) b.labels.push_back("b" + std::to_string(i));
  return b;
}

PureBinning binning_prefix(const PureBinning& binning, std::size_t t) {
  if (t > binning.size()) throw Error(ErrorKind::LengthMismatch, "prefix longer than binning");
  PureBinning out;
  out.labels = binning.labels;
  out.parts = binning.parts;
  out.ids.assign(binning.ids.begin(), binning.ids.begin() + static_cast<std::ptrdiff_t>(t));
  return out;
}

GridRun run_grid_forecaster(const ActionSetPtr& actions, double delta, std::size_t horizon, Adversary& adversary,
                            ReferenceGenerator& reference, std::uint64_t seed) {
  GridRun run;
  run.grid = std::make_shared<const Grid>(make_grid(actions, delta));
  run.reference = labelled_binning(reference.bins());
  GridCalibratedForecaster f(run.grid);
  Rng rng(seed);
  run.actions.reserve(horizon);
  run.grid_index.reserve(horizon);
  run.forecasts.reserve(horizon);
  for (std::size_t s = 0; s < horizon; ++s) {
    const auto b = reference.next();
    const auto mix = f.mixture(b);
    const auto a = adversary.next(f.mixture_mean(mix));
    const auto i = f.sample(mix, rng);
    f.observe(b, i, a);
    run.reference.ids.push_back(b);
    run.actions.push_back(a);
    run.grid_index.push_back(i);
    run.forecasts.push_back(run.grid->points[i]);
  }
  return run;
}

}  // namespace calibeat
