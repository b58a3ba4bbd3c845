#include <gtest/gtest.h>

#include "calibeat/binning.hpp"
#include "calibeat/random.hpp"
#include "support/generators.hpp"

namespace calibeat {
namespace {

TEST(PureBinning, LabelsInFirstSeenOrder) {
  const std::vector<std::string> names{"x", "y", "x", "z"};
  const auto b = PureBinning::from_labels(names);
  EXPECT_EQ(b.labels, (std::vector<std::string>{"x", "y", "z"}));
  EXPECT_EQ(b.ids, (std::vector<std::size_t>{0, 1, 0, 2}));
}

TEST(PureBinning, ForecastBinsAreEqualValueClasses) {
  const auto a = ActionSet::binary();
  std::vector<Dist<double>> c{binary_dist(a, 0.5), binary_dist(a, 0.25), binary_dist(a, 0.5 + 1e-12)};
  const auto b = from_forecasts<double>(c);
  EXPECT_EQ(b.bin_count(), 2u);
  EXPECT_EQ(b.ids[0], b.ids[2]);
}

TEST(Joint, RefinesBothComponents) {
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const std::size_t t = 1 + rng.below(30);
    std::vector<std::string> x, y;
    for (std::size_t s = 0; s < t; ++s) {
      x.push_back(std::to_string(rng.below(3)));
      y.push_back(std::to_string(rng.below(4)));
    }
    const auto bx = PureBinning::from_labels(x), by = PureBinning::from_labels(y);
    const auto j = joint(bx, by);
    EXPECT_TRUE(check_refines(j, bx, projection_witness(j, 0)));
    EXPECT_TRUE(check_refines(j, by, projection_witness(j, 1)));
    EXPECT_LE(j.bin_count(), bx.bin_count() * by.bin_count());
  }
}

TEST(Refinement, WrongWitnessIsRejected) {
  const std::vector<std::string> x{"a", "b", "a"}, y{"p", "p", "q"};
  const auto bx = PureBinning::from_labels(x), by = PureBinning::from_labels(y);
  EXPECT_FALSE(check_refines(bx, by, RefinementWitness{{0, 0}}));
  EXPECT_TRUE(check_refines(bx, PureBinning::constant(3), single_bin_witness(bx.bin_count())));
}

TEST(Refinement, RandomSplitsRefineProperty) {
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    std::vector<std::string> x;
    for (std::size_t s = 0; s < 1 + rng.below(20); ++s) x.push_back(std::to_string(rng.below(4)));
    const auto coarse = PureBinning::from_labels(x);
    auto [fine, w] = testing::random_split<Rational>(rng, coarse);
    fine.validate();
    EXPECT_TRUE(check_refines(fine, GeneralBinning<Rational>::from_pure(coarse), w));
    const auto back = coarsen(fine, w, coarse.bin_count());
    const auto counts = back.counts();
    const auto direct = GeneralBinning<Rational>::from_pure(coarse).counts();
    EXPECT_EQ(counts, direct);
  }
}

TEST(GeneralBinning, ValidateCatchesBadRows) {
  GeneralBinning<double> g;
  g.labels = {"a", "b"};
  g.periods = {{{0, 0.5}, {1, 0.4}}};
  EXPECT_THROW(g.validate(), Error);
  g.periods = {{{0, 1.5}, {1, -0.5}}};
  EXPECT_THROW(g.validate(), Error);
  g.periods = {{{2, 1.0}}};
  EXPECT_THROW(g.validate(), Error);
}

TEST(RefinesForecasts, DetectsMixedBins) {
  const auto a = ActionSet::binary();
  std::vector<Dist<double>> c{binary_dist(a, 0.5), binary_dist(a, 0.25)};
  EXPECT_FALSE(refines_forecasts<double>(PureBinning::constant(2), c));
  EXPECT_TRUE(refines_forecasts<double>(PureBinning::singletons(2), c));
}

TEST(Lattice, CoveringRadiusAndSize) {
  const auto a = ActionSet::indexed(3);
  // (res+1)(res+2)/2 points for three actions
  EXPECT_EQ(simplex_lattice(a, 4).size(), 15u);
  EXPECT_NEAR(lattice_covering_radius(2, 1), std::sqrt(0.5), 1e-15);
  for (double r : {0.3, 0.1, 0.05}) {
    const auto res = lattice_resolution_for(3, r);
    EXPECT_LE(lattice_covering_radius(3, res), r);
    if (res > 1) EXPECT_GT(lattice_covering_radius(3, res - 1), r);
  }
}

TEST(Lattice, SampledPointsWithinCoveringRadius) {
  Rng rng(4);
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto a = ActionSet::indexed(n);
    const std::size_t res = 5;
    const auto pts = simplex_lattice(a, res);
    const double radius = lattice_covering_radius(n, res);
    for (int k = 0; k < 300; ++k) {
      const auto c = rng.dist(a);
      double best = 1e9;
      for (const auto& y : pts) best = std::min(best, euclid_dist(c, y));
      EXPECT_LE(best, radius + 1e-12);
    }
  }
}

TEST(DeltaLocal, GridBinningsAreLocal) {
  Rng rng(5);
  const auto a = ActionSet::indexed(3);
  std::vector<Dist<double>> c;
  for (int k = 0; k < 200; ++k) c.push_back(rng.dist(a));
  for (double delta : {0.3, 0.1}) {
    const auto smooth = smoothed_grid_binning(c, delta);
    smooth.binning.validate();
    EXPECT_TRUE(check_delta_local<double>(smooth.binning, c, delta, std::span<const Dist<double>>(smooth.centers)));
    const auto nearest = nearest_grid_binning(c, delta);
    EXPECT_TRUE(check_delta_local<double>(nearest.binning, c, delta, std::span<const Dist<double>>(nearest.centers)));
  }
  EXPECT_FALSE(check_delta_local<double>(GeneralBinning<double>::from_pure(PureBinning::constant(c.size())), c, 0.05));
}

}  // namespace
}  // namespace calibeat
