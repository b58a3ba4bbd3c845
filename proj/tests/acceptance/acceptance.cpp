// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures. Tolerances and runtime budgets are fixed here on purpose.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "calibeat/binning.hpp"
#include "calibeat/decision.hpp"
#include "calibeat/procedures.hpp"
#include "calibeat/rowcol.hpp"
#include "calibeat/scenario.hpp"
#include "calibeat/scores.hpp"
#include "calibeat/scoring.hpp"
#include "support/generators.hpp"

using namespace calibeat;
using namespace calibeat::testing;

namespace {

constexpr double kFloatResidual = 1e-10;
constexpr double kRegretResidual = 1e-9;
constexpr double kExampleTol = 1e-9;
constexpr double kCaseBTol = 1e-12;
constexpr double kBoundSlack = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && failures_.size() < 3) failures_.push_back(what);
    pass_ = pass_ && ok;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  Outcome outcome() const {
    std::ostringstream out;
    out << checks_ << " checks";
    for (const auto& n : notes_) out << "; " << n;
    for (const auto& f : failures_) out << "; FAILED " << f;
    return {pass_, out.str()};
  }

 private:
  bool pass_ = true;
  std::size_t checks_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

template <Scalar T>
std::span<const Dist<T>> view(const std::vector<Dist<T>>& v) {
  return v;
}
std::span<const std::size_t> view(const std::vector<std::size_t>& v) { return v; }

// 1 -------------------------------------------------------------------------
Outcome example_one() {
  Checker ck;
  const auto q = make_quadratic<Rational>(ActionSet::binary());
  const auto sph = make_rule<double>("spherical:2", ActionSet::binary());
  const double b_sph = 0.6 * (1 - 1 / std::sqrt(2.0));
  const double r_sph = 1 - std::sqrt(0.68);
  for (std::size_t m : {1, 2, 5}) {
    const auto tr = replay_example_1<Rational>(m);
    const auto rb = tr.reference_binning();
    const auto bq = brier(q, view(tr.a), view(tr.c));
    const auto rq = refinement(q, view(tr.a), rb);
    ck.expect(bq == Rational(3, 10), "B=3/10 at m=" + std::to_string(m) + " got " + bq.str());
    ck.expect(rq == Rational(8, 25), "R(b)=8/25 at m=" + std::to_string(m) + " got " + rq.str());
    const auto trd = replay_example_1<double>(m);
    const double bs = brier(sph, view(trd.a), view(trd.c));
    const double rs = refinement(sph, view(trd.a), trd.reference_binning());
    ck.expect(std::abs(bs - b_sph) <= kExampleTol, "spherical B at m=" + std::to_string(m) + " got " + fmt(bs));
    ck.expect(std::abs(rs - r_sph) <= kExampleTol, "spherical R(b) at m=" + std::to_string(m) + " got " + fmt(rs));
    ck.expect(bs > rs, "spherical B > R(b)");
  }
  ck.note("B^sph=" + fmt(b_sph) + " R^sph=" + fmt(r_sph));
  return ck.outcome();
}

// 2 -------------------------------------------------------------------------
template <Scalar T>
void decomposition_round(Checker& ck, Rng& rng, bool exact) {
  const std::size_t arity = rng.coin() ? 2 : 3;
  auto in = random_instance<T>(rng, 200, arity);
  std::vector<ScoringRule<T>> rules{make_quadratic<T>(in.actions), make_rule<T>("power:3", in.actions),
                                    make_induced_rule(random_utility<T>(rng, in.actions, 3))};
  if constexpr (!is_exact_v<T>) rules.push_back(make_rule<T>("spherical:2", in.actions));
  if (arity == 2) rules.push_back(make_step<T>(in.actions));
  const auto by_c = from_forecasts<T>(in.c);
  const auto bc = joint(from_forecasts<T>(in.b), by_c);
  for (const auto& rule : rules) {
    for (const auto* binning : {&by_c, &bc}) {
      const auto d = decomposition_check(rule, view(in.a), view(in.c), *binning);
      if (exact) {
        ck.expect(d.residual == T(0), rule.id() + " residual not zero");
      } else {
        ck.expect(std::abs(to_double(d.residual)) <= kFloatResidual, rule.id() + " residual " + fmt(to_double(d.residual)));
      }
    }
  }
}

Outcome decomposition() {
  Checker ck;
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) decomposition_round<Rational>(ck, rng, true);
  for (int i = 0; i < 500; ++i) decomposition_round<double>(ck, rng, false);
  return ck.outcome();
}

// 3 -------------------------------------------------------------------------
Outcome delta_local() {
  Checker ck;
  Rng rng(303);
  double worst_ratio = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t arity = 2 + rng.below(2);
    const auto actions = arity == 2 ? ActionSet::binary() : ActionSet::indexed(arity);
    const double delta = std::array{0.05, 0.1, 0.2}[i % 3];
    const std::size_t t = 20 + rng.below(180);
    std::vector<Dist<double>> c;
    std::vector<std::size_t> a;
    for (std::size_t s = 0; s < t; ++s) {
      c.push_back(rng.dist(actions));
      a.push_back(rng.below(arity));
    }
    const auto grid = smoothed_grid_binning(view(c), delta);
    for (const char* id : {"quadratic", "spherical:2", "power:3"}) {
      const auto rule = make_rule<double>(id, actions);
      const auto d = delta_decomposition_check(rule, view(a), view(c), grid.binning, delta,
                                               std::optional<std::span<const Dist<double>>>(grid.centers));
      ck.expect(std::abs(d.residual) < d.bound, std::string(id) + " |B-K-R|=" + fmt(std::abs(d.residual)) + " bound " + fmt(d.bound));
      worst_ratio = std::max(worst_ratio, std::abs(d.residual) / d.bound);
    }
  }
  ck.note("max |B-K-R|/(2M delta)=" + fmt(worst_ratio));
  return ck.outcome();
}

// 4 -------------------------------------------------------------------------
Outcome simple_bound() {
  Checker ck;
  const auto actions = ActionSet::binary();
  std::vector<ScoringRule<double>> rules;
  for (const char* id : {"quadratic", "spherical:2", "spherical:3", "power:2", "power:3"}) {
    rules.push_back(normalize_rule(make_rule<double>(id, actions), NormalizeMode::Lipschitz));
  }
  double worst = 0;
  for (std::size_t bins : {2, 5}) {
    for (const char* adv_id : {"flip_farthest", "pattern:0110", "stochastic:0.3,0.7"}) {
      auto adv = Adversary::make(adv_id, 2, 11 + bins);
      auto ref = ReferenceGenerator::make("random", bins, 17 + bins);
      const auto run = run_simple_calibeat<double>(actions, 100000, adv, ref);
      for (std::size_t t : {100, 1000, 10000, 100000}) {
        const std::span<const std::size_t> a(run.actions.data(), t);
        const std::span<const Dist<double>> c(run.forecasts.data(), t);
        const auto b = binning_prefix(run.reference, t);
        const double bound = 2.0 * static_cast<double>(bins) * (std::log(static_cast<double>(t)) + 1.0) / static_cast<double>(t);
        for (const auto& rule : rules) {
          const double gap = brier(rule, a, c) - refinement(rule, a, b);
          ck.expect(gap >= -kBoundSlack && gap <= bound + kBoundSlack,
                    rule.id() + " " + adv_id + " |B|=" + std::to_string(bins) + " t=" + std::to_string(t) + " gap " + fmt(gap));
          worst = std::max(worst, gap / bound);
        }
      }
    }
  }
  ck.note("max gap/bound=" + fmt(worst));
  return ck.outcome();
}

// 5 -------------------------------------------------------------------------
Outcome step_failure() {
  Checker ck;
  const auto actions = ActionSet::binary();
  auto adv = Adversary::make("flip_farthest", 2, 1);
  auto ref = ReferenceGenerator::make("constant", 1, 1);
  const auto run = run_simple_calibeat<Rational>(actions, 10000, adv, ref);
  const auto step = make_step<Rational>(actions);
  // prefix sums of the divergences keep the sweep over every t linear
  std::vector<std::size_t> ones(1, 0);
  Rational loss_sum(0);
  std::size_t n1 = 0;
  double min_gap = 1e9;
  for (std::size_t t = 1; t <= run.actions.size(); ++t) {
    loss_sum += step.divergence(run.actions[t - 1], run.forecasts[t - 1]);
    n1 += run.actions[t - 1];
    if (t < 100) continue;
    const Rational b = loss_sum / Rational(static_cast<long>(t));
    const Rational p1 = Rational(static_cast<long>(n1), static_cast<long>(t));
    // single bin: R = H(abar) = min(p1, 1 - p1) for the step rule
    const Rational r = step.entropy(binary_dist<Rational>(actions, p1));
    ck.expect(b == Rational(1), "B != 1 at t=" + std::to_string(t));
    if (t % 2 == 0) ck.expect(abs(r - Rational(1, 2)) <= Rational(1, static_cast<long>(t)), "|R-1/2| > 1/t at t=" + std::to_string(t));
    min_gap = std::min(min_gap, (b - r).to_double());
    ck.expect(b - r >= Rational(2, 5), "B-R < 0.4 at t=" + std::to_string(t));
  }
  // the direct score functions agree at a few horizons
  for (std::size_t t : {100, 1001, 10000}) {
    const std::span<const std::size_t> a(run.actions.data(), t);
    const std::span<const Dist<Rational>> c(run.forecasts.data(), t);
    ck.expect(brier(step, a, c) == Rational(1), "brier != 1 at t=" + std::to_string(t));
    const auto r = refinement(step, a, binning_prefix(run.reference, t));
    ck.expect(abs(r - Rational(1, 2)) <= Rational(1, static_cast<long>(t)), "refinement far from 1/2");
  }
  ck.note("min B-R over t in [100,1e4]=" + fmt(min_gap));
  return ck.outcome();
}

// 6 -------------------------------------------------------------------------
Outcome online_offline() {
  Checker ck;
  Rng rng(606);
  const auto actions3 = ActionSet::indexed(3);
  for (int i = 0; i < 100; ++i) {
    const auto actions = i % 2 ? ActionSet::binary() : actions3;
    const std::size_t n = 1 + rng.below(100);
    std::vector<Dist<Rational>> xs;
    for (std::size_t j = 0; j < n; ++j) xs.push_back(rng.grid_dist<Rational>(actions, 4));
    for (const auto& rule : {make_quadratic<Rational>(actions), make_rule<Rational>("power:3", actions)}) {
      const auto id = online_offline_identity(rule, view(xs), Dist<Rational>::barycenter(actions));
      ck.expect(*id.lhs == id.rhs, rule.id() + " identity not exact at n=" + std::to_string(n));
    }
  }
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const auto actions = i % 2 ? ActionSet::binary() : actions3;
    const std::size_t n = 1 + rng.below(100);
    std::vector<Dist<double>> xs;
    for (std::size_t j = 0; j < n; ++j) xs.push_back(rng.coin(0.3) ? Dist<double>::unit(actions, rng.below(actions->size())) : rng.dist(actions));
    for (const char* rid : {"quadratic", "spherical:2", "power:3"}) {
      const auto rule = make_rule<double>(rid, actions);
      const auto id = online_offline_identity(rule, view(xs), Dist<double>::barycenter(actions));
      ck.expect(std::abs(*id.lhs - id.rhs) <= kFloatResidual, std::string(rid) + " float identity");
      ck.expect(*id.lhs <= *id.bound + kBoundSlack, std::string(rid) + " gap " + fmt(*id.lhs) + " > bound " + fmt(*id.bound));
      worst = std::max(worst, *id.lhs / *id.bound);
    }
  }
  ck.note("max gap/bound=" + fmt(worst));
  // x_1 = (1,0) then (0,1) forever, under power:-1 scaled by two
  const auto binary = ActionSet::binary();
  const auto harsh = make_rule<Rational>("power:-1", binary).scaled(Rational(2), "power:-1*2");
  for (std::size_t n : {10, 100, 1000}) {
    std::vector<Dist<Rational>> xs{Dist<Rational>::unit(binary, 0)};
    for (std::size_t j = 1; j < n; ++j) xs.push_back(Dist<Rational>::unit(binary, 1));
    const auto id = online_offline_identity(harsh, view(xs), Dist<Rational>::barycenter(binary), 3);
    const Rational floor(static_cast<long>(n - 2), static_cast<long>(n));
    ck.expect(id.rhs >= floor, "remark gap " + id.rhs.str() + " below (n-2)/n at n=" + std::to_string(n));
    if (n == 1000) ck.note("remark gap at n=1000: " + fmt(id.rhs.to_double()));
  }
  return ck.outcome();
}

// 7 -------------------------------------------------------------------------
Outcome calibration_bounds() {
  Checker ck;
  Rng rng(707);
  for (int i = 0; i < 500; ++i) {
    const std::size_t arity = 2 + rng.below(2);
    const auto in = random_instance<double>(rng, 120, arity);
    std::vector<std::string> ids{"quadratic", "spherical:2", "spherical:1.5", "power:3"};
    if (arity == 2) ids.push_back("step");
    const auto rule = make_rule<double>(ids[rng.below(ids.size())], in.actions);
    GeneralBinning<double> binning;
    switch (i % 3) {
      case 0: binning = GeneralBinning<double>::from_pure(from_forecasts<double>(in.c)); break;
      case 1: binning = GeneralBinning<double>::from_pure(joint(from_forecasts<double>(in.b), from_forecasts<double>(in.c))); break;
      default: binning = random_fractional_binning<double>(rng, in.a.size(), 1 + rng.below(6)); break;
    }
    const auto r = calibration_bound_check(rule, view(in.a), view(in.c), binning);
    ck.expect(r.holds, rule.id() + " K^L=" + fmt(r.k_rule) + " K=" + fmt(r.k_quadratic));
    if (i % 5 == 0) {
      const auto u = make_induced_rule(random_utility<double>(rng, in.actions, 3));
      ck.expect(calibration_bound_check(u, view(in.a), view(in.c), binning).holds, "induced rule bound");
    }
  }
  return ck.outcome();
}

// 8 -------------------------------------------------------------------------
template <Scalar T>
void monotone_round(Checker& ck, Rng& rng) {
  const auto in = random_instance<T>(rng, 120, 2 + rng.below(2));
  const auto mid_pure = joint(from_forecasts<T>(in.b), from_forecasts<T>(in.c));
  const auto mid = GeneralBinning<T>::from_pure(mid_pure);
  auto [fine, witness] = random_split<T>(rng, mid_pure);
  std::vector<ScoringRule<T>> rules{make_quadratic<T>(in.actions), make_rule<T>("power:3", in.actions)};
  if constexpr (!is_exact_v<T>) rules.push_back(make_rule<T>("spherical:2", in.actions));
  for (const auto& rule : rules) {
    ck.expect(refinement_monotonicity_check(rule, view(in.a), fine, mid, witness).holds, rule.id() + " refinement chain");
    // a fractional fine binning against its own coarsening
    const auto frac = random_fractional_binning<T>(rng, in.a.size(), 2 + rng.below(6));
    RefinementWitness pairs;
    for (std::size_t i = 0; i < frac.bin_count(); ++i) pairs.fine_to_coarse.push_back(i / 2);
    const auto coarse = coarsen(frac, pairs, (frac.bin_count() + 1) / 2);
    ck.expect(refinement_monotonicity_check(rule, view(in.a), frac, coarse, pairs).holds, rule.id() + " fractional refinement chain");
    ck.expect(calibration_monotonicity_check(rule, view(in.a), view(in.c), fine, mid, witness).holds, rule.id() + " calibration chain");
  }
}

Outcome monotonicity() {
  Checker ck;
  Rng rng(808);
  for (int i = 0; i < 250; ++i) monotone_round<Rational>(ck, rng);
  for (int i = 0; i < 250; ++i) monotone_round<double>(ck, rng);
  return ck.outcome();
}

// 9 -------------------------------------------------------------------------
Outcome regret_calibration() {
  Checker ck;
  Rng rng(909);
  std::size_t brute = 0;
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t arity = 2 + rng.below(2);
    const auto in = random_instance<double>(rng, 100, arity);
    const auto u = random_utility<double>(rng, in.actions, 2 + rng.below(3));
    const auto by_c = from_forecasts<double>(in.c);
    const auto bc = joint(from_forecasts<double>(in.b), by_c);
    for (const auto* binning : {&by_c, &bc}) {
      const auto r = regret(u, view(in.a), view(in.c), *binning);
      ck.expect(std::abs(to_double(r.residual)) <= kRegretResidual, "regret residual " + fmt(r.residual));
      worst = std::max(worst, std::abs(r.residual));
      if (r.brute_force_best) {
        ++brute;
        ck.expect(std::abs(*r.brute_force_best - r.best_remap_utility) <= kRegretResidual, "brute force disagrees");
      }
    }
    // Prop 12 needs a binning on which b is constant
    const auto by_b = from_forecasts<double>(in.b);
    const auto bb = joint(by_b, by_c);
    for (const auto* binning : {&by_b, &bb}) {
      const auto g = utility_gain_check(u, view(in.a), view(in.b), view(in.c), *binning);
      ck.expect(std::abs(g.residual) <= kRegretResidual, "utility gain residual " + fmt(g.residual));
    }
  }
  // forecasts 0.2 and 0.4 both lead to decision "0"; splitting them pays
  const auto actions = ActionSet::binary();
  std::vector<std::size_t> a;
  std::vector<Dist<double>> c;
  for (int s = 0; s < 10; ++s) {
    a.push_back(0);
    c.push_back(binary_dist<double>(actions, 0.2));
    a.push_back(1);
    c.push_back(binary_dist<double>(actions, 0.4));
  }
  const auto swap = swap_vs_forecast_regret(Utility<double>::threshold(actions), view(a), view(c));
  ck.expect(swap.forecast_regret > swap.swap_regret + 0.1, "no gap between swap and forecast regret");
  ck.note("brute-forced " + std::to_string(brute) + " cases; max residual " + fmt(worst) + "; swap " + fmt(swap.swap_regret) +
          " vs forecast " + fmt(swap.forecast_regret));
  return ck.outcome();
}

// 10 ------------------------------------------------------------------------
Outcome grid_contract() {
  Checker ck;
  const auto actions = ActionSet::binary();
  constexpr double delta = 0.1;
  constexpr std::size_t t = 10000, bins = 2, seeds = 30;
  std::vector<ScoringRule<double>> rules;
  for (const char* id : {"quadratic", "spherical:2", "spherical:1.5", "power:3", "step"}) {
    rules.push_back(normalize_rule(make_rule<double>(id, actions), NormalizeMode::Bounded));
  }
  const auto quad = make_quadratic<double>(actions);
  double k_sum = 0;
  std::size_t grid_size = 0;
  std::vector<double> gap_sum(rules.size(), 0.0);
  for (std::size_t seed = 1; seed <= seeds; ++seed) {
    auto adv = Adversary::make("flip_farthest", 2, seed);
    auto ref = ReferenceGenerator::make("random", bins, 1000 + seed);
    const auto run = run_grid_forecaster(actions, delta, t, adv, ref, seed);
    grid_size = run.grid->size();
    const auto bc = joint(run.reference, from_forecasts<double>(run.forecasts));
    k_sum += calibration(quad, view(run.actions), view(run.forecasts), bc);
    for (std::size_t k = 0; k < rules.size(); ++k) {
      gap_sum[k] += brier(rules[k], view(run.actions), view(run.forecasts)) - refinement(rules[k], view(run.actions), run.reference);
    }
  }
  const double bound = delta * delta + 2.0 * bins * grid_size * (std::log(static_cast<double>(t)) + 1.0) / t;
  const double k_mean = k_sum / seeds;
  ck.expect(k_mean <= bound, "mean K=" + fmt(k_mean) + " > " + fmt(bound));
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const double g = gap_sum[k] / seeds;
    ck.expect(g <= std::sqrt(bound), rules[k].id() + " mean B-R=" + fmt(g));
  }
  ck.note("|C|=" + std::to_string(grid_size) + " mean K=" + fmt(k_mean) + " bound=" + fmt(bound));
  return ck.outcome();
}

// 11 ------------------------------------------------------------------------
Outcome appendix_prop14() {
  Checker ck;
  Rng rng(1111);
  const auto q = quadratic_functional<Rational>();
  std::size_t col_const = 0, row_const = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto shape = static_cast<MatrixShape>(i % 3);
    const auto wm = random_weighted_matrix<Rational>(rng, 2 + rng.below(2), 2 + rng.below(2), 1 + rng.below(2), shape,
                                                     i % 7 == 0 ? 0.6 : 0.2);
    const auto r = prop14_check(wm, q);
    col_const += r.constancy.w_column_constant;
    row_const += r.constancy.w_row_constant;
    ck.expect(r.all(), "prop14 exact instance " + std::to_string(i));
  }
  for (int i = 0; i < 2000; ++i) {
    const auto wm = random_weighted_matrix<double>(rng, 2 + rng.below(3), 2 + rng.below(3), 1 + rng.below(3),
                                                   static_cast<MatrixShape>(i % 3), 0.25);
    for (const auto& f : {soft_norm_functional(), log_cosh_functional()}) {
      ck.expect(prop14_check(wm, f).all(), f.name + " float instance " + std::to_string(i));
    }
  }
  double worst_b = 0;
  for (int k = 1; k < 20; ++k) {
    const double delta = k / 20.0;
    const auto v = functionals(case_b_weights(delta), quadratic_functional<double>());
    const double err = std::abs((v.r - v.c) - case_b_gap(delta));
    worst_b = std::max(worst_b, err);
    ck.expect(err <= kCaseBTol, "case B closed form at delta=" + fmt(delta));
  }
  ck.expect(std::abs(case_b_gap(0.5) - 1.0 / 30.0) <= kCaseBTol, "case B gap at 1/2");
  {
    const auto i2 = WeightedMatrix<Rational>::make(2, 2, {{Rational(1)}, {Rational(0)}, {Rational(0)}, {Rational(1)}},
                                                   {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)});
    const auto v = functionals(i2, q);
    ck.expect(v.c == Rational(-1, 4) && v.r == Rational(-1, 4) && v.e == Rational(-1, 2), "identity-2 values");
    ck.expect(!constancy(i2).nondegenerate, "identity-2 flagged degenerate");
  }
  std::size_t case_b = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t dim = 1 + rng.below(3);
    Point a, b, d;
    do {
      a = random_point<double>(rng, dim);
      b = random_point<double>(rng, dim);
      if (i % 3 == 0) {
        const double s = (1 + rng.below(9)) / 10.0;
        d = a;
        for (std::size_t k = 0; k < dim; ++k) d[k] = s * a[k] + (1 - s) * b[k];
      } else {
        d = random_point<double>(rng, dim);
      }
    } while (same_point(a, b) || same_point(a, d) || same_point(b, d));
    const auto ce = counterexample_weights(a, b, d);
    case_b += ce.which == CounterexampleCase::B;
    const auto u = u_checks(ce.wm);
    ck.expect(u.premise && !u.u3 && !u.u1, "counterexample " + std::to_string(i) + " does not violate");
    if (ce.closed_form_gap) ck.expect(std::abs((ce.r_q - ce.c_q) - *ce.closed_form_gap) <= kCaseBTol, "case B gap in place");
  }
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto wm = random_weighted_matrix<double>(rng, 2 + rng.below(3), 2 + rng.below(3), 1 + rng.below(3),
                                                   MatrixShape::ColumnConstant, 0.3);
    const auto u = u_checks(wm);
    violations += !(u.u2 && u.u3);
  }
  ck.expect(violations == 0, std::to_string(violations) + " column-constant violations");
  ck.note("W-col-const " + std::to_string(col_const) + ", W-row-const " + std::to_string(row_const) + ", case B " +
          std::to_string(case_b) + "/50, max case-B error " + fmt(worst_b));
  return ck.outcome();
}

// 12 ------------------------------------------------------------------------
Outcome theorem12() {
  Checker ck;
  const std::string dir = CALIBEAT_DATA_DIR "/appendix/";
  const auto ex = read_scenario_file(dir + "example1_snapshot.json");
  Theorem12Options opt;
  opt.allow_degenerate = ex.allow_degenerate;
  opt.sweep = ex.sweep.value_or(1000);
  const auto rep = theorem12_scenario(ex.averages, ex.lambda, opt);
  ck.expect(rep.flags.calibeats, "example 1 should calibeat");
  ck.expect(!rep.flags.calibeats_joint, "example 1 should not calibeat jointly");
  ck.expect(!rep.flags.proper_calibeats, "example 1 should not calibeat properly");
  ck.expect(std::abs(rep.quadratic.c + 0.7) <= kExampleTol && std::abs(rep.quadratic.r + 0.68) <= kExampleTol,
            "example 1 C(Q)/R(Q)");
  bool refused = false;
  try {
    Theorem12Options strict;
    (void)theorem12_scenario(ex.averages, ex.lambda, strict);
  } catch (const Error& e) {
    refused = e.kind() == ErrorKind::DegenerateMatrix;
  }
  ck.expect(refused, "degenerate snapshot accepted without the flag");

  const auto nd = read_scenario_file(dir + "nondegenerate_2x2.json");
  Theorem12Options sweep;
  sweep.sweep = nd.sweep.value_or(1000);
  sweep.seed = nd.seed.value_or(1);
  const auto nrep = theorem12_scenario(nd.averages, nd.lambda, sweep);
  ck.expect(nrep.shape.nondegenerate, "bundled matrix should be nondegenerate");
  ck.expect(nrep.calibeat_without_proper.has_value(), "no lambda calibeats without calibeating properly");
  ck.expect(nrep.joint_without_proper == 0, "joint calibeating without proper calibeating");
  ck.expect(nrep.equivalence_consistent, "equivalence inconsistent on the nondegenerate matrix");

  const auto cc = read_scenario_file(dir + "column_constant_3x3.json");
  Theorem12Options cc_opt;
  cc_opt.sweep = cc.sweep.value_or(1000);
  const auto crep = theorem12_scenario(cc.averages, cc.lambda, cc_opt);
  ck.expect(!crep.calibeat_without_proper && crep.equivalence_consistent, "column-constant matrix should never fail");
  return ck.outcome();
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "example-1-reproduction", 1, example_one},
      {2, "decomposition", 30, decomposition},
      {3, "delta-local-decomposition", 30, delta_local},
      {4, "simple-calibeating-bound", 120, simple_bound},
      {5, "step-rule-failure", 1, step_failure},
      {6, "online-offline-identity", 60, online_offline},
      {7, "calibration-bounds", 60, calibration_bounds},
      {8, "monotonicity", 60, monotonicity},
      {9, "regret-equals-calibration", 60, regret_calibration},
      {10, "grid-forecaster-contract", 300, grid_contract},
      {11, "row-column-appendix", 120, appendix_prop14},
      {12, "snapshot-equivalence", 60, theorem12},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = secs < c.budget_seconds;
    const bool pass = out.pass && in_budget;
    failures += !pass;
    std::printf("%s %2d %-28s %7.2fs (budget %gs) %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_seconds,
                out.detail.c_str(), in_budget ? "" : "; over budget");
    std::fflush(stdout);
  }
  return failures;
}
