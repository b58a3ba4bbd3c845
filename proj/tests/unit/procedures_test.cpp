#include <gtest/gtest.h>

#include <cmath>

#include "calibeat/procedures.hpp"
#include "calibeat/scores.hpp"

namespace calibeat {
namespace {

TEST(SimpleCalibeater, ForecastsRunningBinAverage) {
  const auto a = ActionSet::binary();
  SimpleCalibeater<Rational> proc(a);
  EXPECT_EQ(proc.forecast(0), Dist<Rational>::barycenter(a));
  proc.observe(0, 1);
  proc.observe(0, 1);
  proc.observe(0, 0);
  proc.observe(1, 0);
  EXPECT_EQ(proc.forecast(0)[1], Rational(2, 3));
  EXPECT_EQ(proc.forecast(1)[1], Rational(0));
  EXPECT_EQ(proc.bins_used(), 2u);
  EXPECT_THROW(proc.observe(0, 5), Error);
}

TEST(SimpleCalibeater, TupleBinsAreIndependent) {
  const auto a = ActionSet::indexed(3);
  SimpleCalibeater<Rational> proc(a, Dist<Rational>::unit(a, 2));
  proc.observe(BinKey{0, 1}, 0);
  EXPECT_EQ(proc.forecast(BinKey{0, 1}), Dist<Rational>::unit(a, 0));
  EXPECT_EQ(proc.forecast(BinKey{1, 0}), Dist<Rational>::unit(a, 2));
}

TEST(Adversary, FlipFarthestAndPattern) {
  const auto a = ActionSet::binary();
  auto flip = Adversary::make("flip_farthest", 2, 0);
  EXPECT_EQ(flip.next(binary_dist(a, 0.9)), 0u);
  EXPECT_EQ(flip.next(binary_dist(a, 0.1)), 1u);
  EXPECT_EQ(flip.next(binary_dist(a, 0.5)), 0u);
  auto pat = Adversary::make("pattern:0110", 2, 0);
  std::string seen;
  for (int k = 0; k < 6; ++k) seen += std::to_string(pat.next(binary_dist(a, 0.5)));
  EXPECT_EQ(seen, "011001");
}

TEST(Adversary, StochasticFrequencies) {
  const auto a = ActionSet::binary();
  auto adv = Adversary::make("stochastic:0.2,0.8", 2, 5);
  int ones = 0;
  for (int k = 0; k < 20000; ++k) ones += static_cast<int>(adv.next(binary_dist(a, 0.5)));
  EXPECT_NEAR(ones / 20000.0, 0.8, 0.02);
}

TEST(Adversary, UnknownStrategyErrors) {
  for (const char* id : {"nope", "pattern:", "pattern:0120", "stochastic:0.5"}) {
    try {
      Adversary::make(id, 2, 0);
      FAIL() << id;
    } catch (const Error& e) {
      EXPECT_TRUE(e.kind() == ErrorKind::UnknownStrategy || e.kind() == ErrorKind::Config) << id;
    }
  }
}

TEST(Reference, Generators) {
  auto cyc = ReferenceGenerator::make("cyclic", 3, 0);
  auto blk = ReferenceGenerator::make("blocks:2", 2, 0);
  auto cst = ReferenceGenerator::make("constant", 4, 0);
  std::string c, b;
  for (int k = 0; k < 6; ++k) {
    c += std::to_string(cyc.next());
    b += std::to_string(blk.next());
    EXPECT_EQ(cst.next(), 0u);
  }
  EXPECT_EQ(c, "012012");
  EXPECT_EQ(b, "001100");
  EXPECT_THROW(ReferenceGenerator::make("zigzag", 2, 0), Error);
}

TEST(SimpleRun, CalibeatsReferenceAgainstAdversary) {
  const auto a = ActionSet::binary();
  auto adv = Adversary::make("flip_farthest", 2, 0);
  auto ref = ReferenceGenerator::make("random", 3, 9);
  const std::size_t t = 4000;
  const auto run = run_simple_calibeat<double>(a, t, adv, ref);
  const auto rule = make_quadratic<double>(a);
  const double b = brier<double>(rule, run.actions, run.forecasts);
  const double r = refinement<double>(rule, run.actions, run.reference);
  const double bound = *rule.declared_lipschitz() * 2 * 3 * (std::log(static_cast<double>(t)) + 1) / t;
  EXPECT_LE(b - r, bound);
  // the forecast loss is the online refinement of the reference bins
  const auto online = online_refinement<double>(rule, run.actions, run.reference);
  EXPECT_NEAR(online.online, b, 1e-12);
}

TEST(SimpleRun, ExactAndFloatAgree) {
  const auto a = ActionSet::indexed(3);
  auto adv1 = Adversary::make("pattern:0121", 3, 0), adv2 = Adversary::make("pattern:0121", 3, 0);
  auto ref1 = ReferenceGenerator::make("cyclic", 2, 0), ref2 = ReferenceGenerator::make("cyclic", 2, 0);
  const auto x = run_simple_calibeat<Rational>(a, 200, adv1, ref1);
  const auto y = run_simple_calibeat<double>(a, 200, adv2, ref2);
  ASSERT_EQ(x.actions, y.actions);
  for (std::size_t s = 0; s < 200; ++s) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(x.forecasts[s][k].to_double(), y.forecasts[s][k], 1e-15);
  }
}

TEST(MatrixGame, KnownValues) {
  const auto pennies = solve_matrix_game_min({{1, -1}, {-1, 1}});
  EXPECT_NEAR(pennies.value, 0.0, 1e-9);
  EXPECT_NEAR(pennies.row_strategy[0], 0.5, 1e-9);
  const auto g = solve_matrix_game_min({{1, 2}, {3, 0}});
  EXPECT_NEAR(g.value, 1.5, 1e-9);
  EXPECT_NEAR(g.row_strategy[0], 0.75, 1e-9);
  const auto dominated = solve_matrix_game_min({{0, 0}, {5, 5}});
  EXPECT_NEAR(dominated.value, 0.0, 1e-9);
}

TEST(Grid, CoversSimplex) {
  for (std::size_t n : {2u, 3u}) {
    const auto g = make_grid(ActionSet::indexed(n), 0.1);
    EXPECT_LE(g.covering_radius, 0.1);
    EXPECT_LE(grid_max_gap(g, 2000, 1), g.covering_radius + 1e-12);
  }
  EXPECT_THROW(make_grid(ActionSet::binary(), 0.0), Error);
}

TEST(GridForecaster, MixtureIsDistribution) {
  auto grid = std::make_shared<const Grid>(make_grid(ActionSet::binary(), 0.2));
  GridCalibratedForecaster f(grid);
  Rng rng(3);
  for (int s = 0; s < 300; ++s) {
    const auto mix = f.mixture(s % 2);
    double total = 0;
    for (double m : mix) {
      EXPECT_GE(m, -1e-12);
      total += m;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    f.observe(s % 2, f.sample(mix, rng), rng.below(2));
  }
}

TEST(GridRun, CalibrationShrinks) {
  const auto a = ActionSet::binary();
  auto adv = Adversary::make("flip_farthest", 2, 0);
  auto ref = ReferenceGenerator::make("random", 2, 4);
  const auto run = run_grid_forecaster(a, 0.2, 3000, adv, ref, 4);
  const auto rule = make_quadratic<double>(a);
  const auto bins = joint(run.reference, from_forecasts<double>(run.forecasts));
  const double k = calibration<double>(rule, run.actions, run.forecasts, bins);
  const double t = 3000, nb = 2, grid = static_cast<double>(run.grid->size());
  EXPECT_LE(k, 0.2 * 0.2 + 2 * nb * grid * (std::log(t) + 1) / t);
}

TEST(GridRun, SeedDeterminesRun) {
  const auto a = ActionSet::indexed(3);
  auto run = [&] {
    auto adv = Adversary::make("stochastic", 3, 8);
    auto ref = ReferenceGenerator::make("random", 2, 8);
    return run_grid_forecaster(a, 0.25, 200, adv, ref, 8);
  };
  EXPECT_EQ(run().grid_index, run().grid_index);
}

}  // namespace
}  // namespace calibeat
