#include <gtest/gtest.h>

#include "calibeat/procedures.hpp"
#include "calibeat/scores.hpp"
#include "support/generators.hpp"

namespace calibeat {
namespace {

using testing::random_instance;

// mean ||e_a - c||^2, written out independently of the library
Rational quadratic_brier_by_hand(const Transcript<Rational>& tr) {
  Rational sum(0);
  for (std::size_t s = 0; s < tr.size(); ++s) {
    for (std::size_t k = 0; k < tr.c[s].size(); ++k) {
      const Rational e = k == tr.a[s] ? Rational(1) : Rational(0);
      sum += (e - tr.c[s][k]) * (e - tr.c[s][k]);
    }
  }
  return sum / Rational(static_cast<long>(tr.size()));
}

TEST(Example1, QuadraticScores) {
  const auto tr = replay_example_1<Rational>();
  const auto rule = make_quadratic<Rational>(tr.actions);
  const auto b = tr.reference_binning();
  EXPECT_EQ(brier<Rational>(rule, tr.a, tr.c), Rational(3, 10));
  EXPECT_EQ(brier<Rational>(rule, tr.a, tr.c), quadratic_brier_by_hand(tr));
  EXPECT_EQ(refinement<Rational>(rule, tr.a, b), Rational(8, 25));
  EXPECT_EQ(calibration<Rational>(rule, tr.a, tr.c, tr.forecast_binning()), Rational(0));
  // forecasts beat the reference without any calibeating
  EXPECT_EQ(brier<Rational>(rule, tr.a, tr.b), Rational(8, 25));
}

TEST(Example1, SphericalScores) {
  const auto tr = replay_example_1<double>();
  const auto rule = make_rule<double>("spherical:2", tr.actions);
  // six periods at (1/2,1/2), each costing 1 - 1/sqrt(2)
  EXPECT_NEAR(brier<double>(rule, tr.a, tr.c), 0.6 * (1 - 1 / std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(refinement<double>(rule, tr.a, tr.reference_binning()), 0.175378874876468, 1e-12);
}

TEST(Decomposition, ExactOnRandomInstances) {
  Rng rng(21);
  for (int k = 0; k < 150; ++k) {
    const auto in = random_instance<Rational>(rng, 40, 2 + rng.below(3));
    const auto rule = rng.coin() ? make_quadratic<Rational>(in.actions) : make_rule<Rational>("power:3", in.actions);
    const auto bins = joint(from_forecasts<Rational>(in.b), from_forecasts<Rational>(in.c));
    const auto d = decomposition_check<Rational>(rule, in.a, in.c, bins);
    EXPECT_EQ(d.residual, Rational(0));
    EXPECT_GE(d.calibration, Rational(0));
    EXPECT_GE(d.refinement, Rational(0));
  }
}

TEST(Decomposition, RejectsNonRefiningBinning) {
  const auto tr = replay_example_1<Rational>();
  const auto rule = make_quadratic<Rational>(tr.actions);
  try {
    decomposition_check<Rational>(rule, tr.a, tr.c, tr.reference_binning());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotARefinement);
  }
}

TEST(Scores, EmptyAndMismatchedInputs) {
  const auto a = ActionSet::binary();
  const auto rule = make_quadratic<double>(a);
  const std::vector<std::size_t> none;
  const std::vector<Dist<double>> no_c;
  EXPECT_THROW(brier<double>(rule, none, no_c), Error);
  const std::vector<std::size_t> two{0, 1};
  const std::vector<Dist<double>> one{Dist<double>::barycenter(a)};
  EXPECT_THROW(brier<double>(rule, two, one), Error);
}

TEST(RefinementMonotonicity, SplittingNeverRaisesRefinement) {
  Rng rng(22);
  for (int k = 0; k < 150; ++k) {
    const auto in = random_instance<Rational>(rng, 30, 2 + rng.below(2));
    const auto rule = make_quadratic<Rational>(in.actions);
    const auto coarse = from_forecasts<Rational>(in.b);
    const auto [fine, w] = testing::random_split<Rational>(rng, coarse);
    const auto r = refinement_monotonicity_check<Rational>(rule, in.a, fine, GeneralBinning<Rational>::from_pure(coarse), w);
    EXPECT_TRUE(r.holds) << r.fine << " > " << r.coarse;
  }
}

TEST(CalibrationMonotonicity, ChainThroughForecastBins) {
  Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    const auto in = random_instance<double>(rng, 30, 2);
    const auto rule = make_rule<double>("spherical:2", in.actions);
    const auto mid = joint(from_forecasts<double>(in.b), from_forecasts<double>(in.c));
    const auto [fine, w] = testing::random_split<double>(rng, mid);
    const auto r = calibration_monotonicity_check<double>(rule, in.a, in.c, fine, GeneralBinning<double>::from_pure(mid), w);
    EXPECT_TRUE(r.holds);
    EXPECT_LE(r.forecast, r.mid + 1e-12);
  }
}

TEST(CalibrationBound, QuadraticControlsOtherRules) {
  Rng rng(24);
  for (int k = 0; k < 100; ++k) {
    const auto in = random_instance<double>(rng, 40, 3);
    const auto g = testing::random_fractional_binning<double>(rng, in.a.size(), 4);
    for (const char* id : {"spherical:2", "power:3"}) {
      const auto r = calibration_bound_check<double>(make_rule<double>(id, in.actions), in.a, in.c, g);
      EXPECT_TRUE(r.holds) << id;
    }
  }
}

TEST(DeltaDecomposition, ResidualWithinBound) {
  Rng rng(25);
  const auto a = ActionSet::indexed(3);
  const auto rule = make_quadratic<double>(a);
  for (int k = 0; k < 30; ++k) {
    std::vector<std::size_t> acts;
    std::vector<Dist<double>> c;
    for (int s = 0; s < 100; ++s) {
      c.push_back(rng.dist(a));
      acts.push_back(rng.below(3));
    }
    const double delta = 0.1 + 0.2 * rng.uniform();
    const auto g = smoothed_grid_binning(c, delta);
    const auto d = delta_decomposition_check<double>(rule, acts, c, g.binning, delta, std::span<const Dist<double>>(g.centers));
    EXPECT_LE(std::abs(d.residual), d.bound + 1e-12);
  }
}

TEST(OnlineRefinement, GapWithinLogBound) {
  Rng rng(26);
  const auto a = ActionSet::binary();
  const auto rule = make_quadratic<Rational>(a);
  for (int k = 0; k < 20; ++k) {
    const std::size_t t = 50 + rng.below(200);
    std::vector<std::size_t> acts;
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < t; ++s) {
      acts.push_back(rng.below(2));
      labels.push_back(std::to_string(rng.below(3)));
    }
    const auto r = online_refinement<Rational>(rule, acts, PureBinning::from_labels(labels));
    ASSERT_TRUE(r.bound);
    EXPECT_GE(r.gap, Rational(0));
    EXPECT_LE(r.gap.to_double(), *r.bound + 1e-12);
  }
}

TEST(OnlineOffline, IdentityIsExact) {
  Rng rng(27);
  const auto a = ActionSet::indexed(3);
  const auto rule = make_quadratic<Rational>(a);
  for (int k = 0; k < 30; ++k) {
    std::vector<Dist<Rational>> xs;
    for (std::size_t j = 0; j < 1 + rng.below(40); ++j) xs.push_back(Dist<Rational>::unit(a, rng.below(3)));
    const auto r = online_offline_identity<Rational>(rule, xs, Dist<Rational>::barycenter(a));
    ASSERT_TRUE(r.lhs);
    EXPECT_EQ(*r.lhs, r.rhs);
  }
}

TEST(InducedBins, TiedForecastsStayExact) {
  // identical forecasts must average to themselves bit for bit
  const auto a = ActionSet::indexed(3);
  const Dist<double> c(a, {0.1, 0.2, 0.7});
  const std::vector<Dist<double>> cs(7, c);
  const std::vector<std::size_t> acts{0, 1, 2, 2, 1, 0, 2};
  const auto avg = detail::bin_averages<double>(a, acts, GeneralBinning<double>::from_pure(PureBinning::constant(7)), cs);
  ASSERT_TRUE(avg.forecasts[0]);
  EXPECT_EQ(*avg.forecasts[0], c);
}

}  // namespace
}  // namespace calibeat
