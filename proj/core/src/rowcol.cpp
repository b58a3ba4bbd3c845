#include "calibeat/rowcol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "calibeat/random.hpp"
#include "calibeat/scoring.hpp"

namespace calibeat {

namespace {

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

double sq_norm(std::span<const double> x) { return dot(x, x); }

Point minus(const Point& x, const Point& y) {
  Point out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - y[k];
  return out;
}

// Solves a dense square system in place; false when (numerically) singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-13) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0) continue;
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return true;
}

// Affine projection of z onto the span of the chosen points (weights sum to 1).
std::optional<std::vector<double>> affine_weights(const Point& z, std::span<const Point> points,
                                                  const std::vector<std::size_t>& subset) {
  const std::size_t k = subset.size();
  // KKT: [G 1; 1^T 0] [lambda; mu] = [P^T z; 1]
  std::vector<std::vector<double>> a(k + 1, std::vector<double>(k + 1, 0.0));
  std::vector<double> rhs(k + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) a[i][j] = dot(points[subset[i]], points[subset[j]]);
    a[i][k] = 1.0;
    a[k][i] = 1.0;
    rhs[i] = dot(points[subset[i]], z);
  }
  rhs[k] = 1.0;
  std::vector<double> sol;
  if (!solve_linear(std::move(a), std::move(rhs), sol)) return std::nullopt;
  sol.pop_back();
  return sol;
}

WeightedMatrix<double> two_by_two(const Point& a, const Point& b, const Point& d, const std::vector<double>& w) {
  return WeightedMatrix<double>::make(2, 2, {a, b, d, d}, w);
}

void fill_quadratic(Counterexample& ce) {
  const auto f = functionals(ce.wm, quadratic_functional<double>());
  ce.c_q = f.c;
  ce.r_q = f.r;
  ce.e_q = f.e;
}

// Distance from a row average to the hull of the positive-weight column averages.
HullProjection row_outside(const WeightedMatrix<double>& wm, std::size_t row) {
  std::vector<Point> cols;
  for (const auto& c : wm.col_averages()) {
    if (c) cols.push_back(*c);
  }
  const auto r = wm.row_averages().at(row);
  if (!r) return {};
  return project_onto_hull(*r, cols);
}

}  // namespace

ConcaveFunctional<double> hinge_functional(std::vector<double> v, double alpha, double n) {
  return {"hinge:n=" + scalar_str(n),
          [v = std::move(v), alpha, n](std::span<const double> z) {
            const double excess = std::max(dot(v, z) - alpha, 0.0);
            return -sq_norm(z) - n * excess * excess;
          },
          true};
}

ConcaveFunctional<double> soft_norm_functional() {
  return {"soft-norm", [](std::span<const double> z) { return -std::sqrt(1.0 + sq_norm(z)); }, true};
}

ConcaveFunctional<double> log_cosh_functional() {
  return {"log-cosh",
          [](std::span<const double> z) {
            double s = 0;
            for (double v : z) s -= std::log(std::cosh(v));
            return s;
          },
          true};
}

HullProjection project_onto_hull(const Point& z, std::span<const Point> points) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "hull of no points");
  if (points.size() > 16) throw Error(ErrorKind::Validation, "hull projection supports at most 16 points");
  // The nearest point lies in the relative interior of the hull of an affinely
  // independent subset, so the best feasible affine projection is exact.
  const std::size_t k = points.size();
  const std::size_t max_size = std::min(k, z.size() + 1);
  HullProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) subset.push_back(i);
    }
    if (subset.size() > max_size) continue;
    const auto lambda = affine_weights(z, points, subset);
    if (!lambda) continue;
    if (std::any_of(lambda->begin(), lambda->end(), [](double l) { return l < -1e-12; })) continue;
    Point p(z.size(), 0.0);
    for (std::size_t i = 0; i < subset.size(); ++i) {
      for (std::size_t c = 0; c < z.size(); ++c) p[c] += (*lambda)[i] * points[subset[i]][c];
    }
    const double dist = std::sqrt(sq_norm(minus(z, p)));
    if (dist < best.distance) best = {std::move(p), dist};
  }
  return best;
}

double case_b_gap(double delta) { return delta * (1 - delta) * (1 + 2 * delta) / (6 * (2 + delta)); }

WeightedMatrix<double> case_b_weights(double delta) {
  if (!(delta > 0 && delta < 1)) throw Error(ErrorKind::Validation, "case B needs 0 < delta < 1");
  const double s = 1.0 / (3.0 * (1.0 + delta));
  return two_by_two({1.0}, {0.0}, {delta}, {s * (1 + 2 * delta), s * (1 - delta), s * (1 + 2 * delta), 0.0});
}

Counterexample counterexample_weights(const Point& a, const Point& b, const Point& d) {
  if (a.size() != b.size() || a.size() != d.size()) throw Error(ErrorKind::LengthMismatch, "point dimension");
  const auto ab = minus(a, b);
  const double len2 = sq_norm(ab);
  if (len2 <= kHullTolerance * kHullTolerance || sq_norm(minus(a, d)) <= kHullTolerance * kHullTolerance ||
      sq_norm(minus(b, d)) <= kHullTolerance * kHullTolerance) {
    throw Error(ErrorKind::Validation, "counterexample needs three distinct entries");
  }
  // d = b + t (a - b) + residual
  const auto db = minus(d, b);
  const double t = dot(db, ab) / len2;
  Point off = db;
  for (std::size_t k = 0; k < off.size(); ++k) off[k] -= t * ab[k];
  const bool between = std::sqrt(sq_norm(off)) <= kHullTolerance && t > 0 && t < 1;

  Counterexample ce;
  if (between) {
    ce.which = CounterexampleCase::B;
    ce.parameter = t;
    const double s = 1.0 / (3.0 * (1.0 + t));
    ce.wm = two_by_two(a, b, d, {s * (1 + 2 * t), s * (1 - t), s * (1 + 2 * t), 0.0});
    ce.closed_form_gap = len2 * case_b_gap(t);
    ce.outside_row = 0;
    fill_quadratic(ce);
    ce.outside_distance = row_outside(ce.wm, 0).distance;
    if (!(ce.c_q <= ce.r_q) || ce.outside_distance <= kHullTolerance) {
      throw Error(ErrorKind::CollinearityMisclassified, "case B weights failed to separate");
    }
    return ce;
  }

  ce.which = CounterexampleCase::A;
  ce.outside_row = 1;
  for (double eps = 0.5; eps > 1e-15; eps /= 2) {
    ce.parameter = eps;
    ce.wm = two_by_two(a, b, d, {(1 - eps) / 2, (1 - eps) / 2, eps, 0.0});
    fill_quadratic(ce);
    ce.outside_distance = row_outside(ce.wm, 1).distance;
    if (ce.c_q <= ce.r_q && ce.outside_distance > kHullTolerance) return ce;
  }
  throw Error(ErrorKind::CollinearityMisclassified, "case A weights never separated; d may lie between a and b");
}

std::vector<ConcaveFunctional<double>> concave_battery(const WeightedMatrix<double>& wm) {
  std::vector<ConcaveFunctional<double>> out{quadratic_functional<double>(), soft_norm_functional(),
                                             log_cosh_functional()};
  std::vector<Point> cols;
  for (const auto& c : wm.col_averages()) {
    if (c) cols.push_back(*c);
  }
  const auto rows = wm.row_averages();
  const auto rw = wm.row_weights();
  const auto q = functionals(wm, quadratic_functional<double>());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) continue;
    const auto proj = project_onto_hull(*rows[i], cols);
    if (proj.distance <= kHullTolerance) continue;
    auto v = minus(*rows[i], proj.nearest);
    for (auto& x : v) x /= proj.distance;
    const double alpha = dot(v, proj.nearest);
    // C is unchanged by the cut while R drops by n w_i dist^2
    const double needed = (q.r - q.c) / (rw[i] * proj.distance * proj.distance);
    double n = 1;
    for (; n <= 1000 || n <= 10 * needed; n *= 10) {
      auto f = hinge_functional(v, alpha, n);
      f.name += ",row=" + std::to_string(i);
      out.push_back(std::move(f));
    }
  }
  return out;
}

UChecks u_checks(const WeightedMatrix<double>& wm, double tol) {
  UChecks u;
  const auto q = functionals(wm, quadratic_functional<double>());
  u.premise = q.c <= q.r + tol;
  u.u2 = std::abs(q.c - q.e) <= tol;
  for (const auto& f : concave_battery(wm)) {
    const auto v = functionals(wm, f);
    if (v.c > v.r + tol) u.u1 = false;
    if (std::abs(v.c - v.e) > tol || v.e > v.r + tol) u.u3 = false;
  }
  return u;
}

namespace {

WeightedMatrix<double> matrix_from(const std::vector<std::vector<Point>>& x, std::vector<double> w) {
  if (x.empty() || x.front().empty()) throw Error(ErrorKind::EmptyInput, "empty matrix");
  const std::size_t cols = x.front().size();
  std::vector<Point> pts;
  for (const auto& row : x) {
    if (row.size() != cols) throw Error(ErrorKind::LengthMismatch, "ragged matrix");
    pts.insert(pts.end(), row.begin(), row.end());
  }
  return WeightedMatrix<double>::make(x.size(), cols, std::move(pts), std::move(w));
}

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

// Mix of dense, sparse and near-degenerate weight draws.
std::vector<double> sample_weights(Rng& rng, std::size_t n) {
  auto w = rng.simplex_point(n);
  switch (rng.below(3)) {
    case 0: break;
    case 1: {
      for (auto& v : w) {
        if (rng.coin()) v = 0;
      }
      break;
    }
    default: {
      for (auto& v : w) v = std::pow(v, 4.0);
      break;
    }
  }
  double s = 0;
  for (double v : w) s += v;
  if (s <= 0) {
    w.assign(n, 0.0);
    w[rng.below(n)] = 1.0;
    return w;
  }
  for (auto& v : w) v /= s;
  return w;
}

}  // namespace

std::optional<std::pair<WeightedMatrix<double>, Counterexample>> directed_counterexample(
    const std::vector<std::vector<Point>>& x) {
  const std::size_t rows = x.size();
  const std::size_t cols = rows ? x.front().size() : 0;
  const auto distinct = [](const Point& p, const Point& q) { return !same_point(p, q); };
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t i2 = 0; i2 < rows; ++i2) {
      if (i2 == i) continue;
      for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t j2 = 0; j2 < cols; ++j2) {
          if (j2 == j) continue;
          const auto& a = x[i][j];
          const auto& b = x[i][j2];
          const auto& d = x[i2][j];
          if (!distinct(a, b) || !distinct(a, d) || !distinct(b, d)) continue;
          auto ce = counterexample_weights(a, b, d);
          std::vector<double> w(rows * cols, 0.0);
          w[i * cols + j] = ce.wm.w[0];
          w[i * cols + j2] = ce.wm.w[1];
          w[i2 * cols + j] = ce.wm.w[2];
          return std::make_pair(matrix_from(x, std::move(w)), std::move(ce));
        }
      }
    }
  }
  return std::nullopt;
}

Theorem15Verdict theorem15_check(const std::vector<std::vector<Point>>& x, std::size_t trials, std::uint64_t seed) {
  Theorem15Verdict v;
  const auto base = matrix_from(x, uniform_weights(x.size() * x.front().size()));
  v.shape = constancy(base);
  v.predicted_u = v.shape.column_constant || v.shape.row_constant;
  Rng rng(seed);
  for (std::size_t s = 0; s < trials; ++s) {
    const auto wm = matrix_from(x, sample_weights(rng, base.w.size()));
    ++v.trials;
    const auto u = u_checks(wm);
    if (!u.premise) continue;
    ++v.premise_hits;
    v.u1_failures += !u.u1;
    v.u2_failures += !u.u2;
    v.u3_failures += !u.u3;
    if (v.shape.row_constant && !(u.u1 == u.u2 && u.u2 == u.u3)) ++v.inconsistent;
  }
  bool witnessed = false;
  if (!v.shape.column_constant) {
    if (auto found = directed_counterexample(x)) {
      const auto u = u_checks(found->first);
      witnessed = u.premise && (!u.u1 || !u.u2 || !u.u3);
      v.witness = std::move(found->second);
    }
  }
  v.observed_u = !witnessed && v.u1_failures == 0 && v.u2_failures == 0 && v.u3_failures == 0;
  v.consistent = !v.shape.nondegenerate || v.observed_u == v.predicted_u;
  return v;
}

SnapshotFlags snapshot_flags(const WeightedMatrix<double>& wm, const ActionSetPtr& actions, double tol) {
  SnapshotFlags flags;
  const auto q = functionals(wm, quadratic_functional<double>());
  flags.calibeats = q.c <= q.r + tol;
  flags.calibeats_joint = std::abs(q.c - q.e) <= tol;

  std::vector<ConcaveFunctional<double>> battery;
  std::vector<std::string> ids{"quadratic", "spherical:2", "spherical:3", "power:3"};
  if (actions->size() == 2) ids.push_back("step");
  for (const auto& id : ids) {
    auto rule = std::make_shared<ScoringRule<double>>(make_rule<double>(id, actions));
    battery.push_back({id, [rule, actions](std::span<const double> z) {
                         return rule->entropy(Dist<double>(Dist<double>::Trusted{}, actions, {z.begin(), z.end()}));
                       },
                       false});
  }
  for (auto& f : concave_battery(wm)) {
    if (f.name.rfind("hinge", 0) == 0) battery.push_back(std::move(f));
  }
  flags.proper_calibeats = true;
  for (const auto& f : battery) {
    const auto v = functionals(wm, f);
    const bool ok = v.c <= v.r + tol;
    flags.per_rule.emplace_back(f.name, ok);
    flags.proper_calibeats = flags.proper_calibeats && ok;
  }
  return flags;
}

Theorem12Report theorem12_scenario(const std::vector<std::vector<Dist<double>>>& averages,
                                   const std::vector<std::vector<double>>& lambda, const Theorem12Options& options) {
  if (averages.empty() || averages.front().empty()) throw Error(ErrorKind::EmptyInput, "empty snapshot");
  if (lambda.size() != averages.size()) throw Error(ErrorKind::LengthMismatch, "frequency rows");
  const auto actions = averages.front().front().action_set();
  std::vector<std::vector<Point>> x;
  std::vector<double> w;
  for (std::size_t i = 0; i < averages.size(); ++i) {
    if (averages[i].size() != averages.front().size() || lambda[i].size() != averages[i].size()) {
      throw Error(ErrorKind::LengthMismatch, "ragged snapshot");
    }
    auto& row = x.emplace_back();
    for (const auto& d : averages[i]) {
      require_same(actions, d.action_set());
      row.emplace_back(d.weights().begin(), d.weights().end());
    }
    w.insert(w.end(), lambda[i].begin(), lambda[i].end());
  }
  const auto wm = matrix_from(x, std::move(w));

  Theorem12Report rep;
  rep.shape = constancy(wm);
  if (!rep.shape.nondegenerate && !options.allow_degenerate) {
    throw Error(ErrorKind::DegenerateMatrix,
                "action averages take " + std::to_string(rep.shape.distinct_entries) + " distinct values");
  }
  rep.flags = snapshot_flags(wm, actions, options.tol);
  rep.quadratic = functionals(wm, quadratic_functional<double>());
  for (const auto& c : wm.col_averages()) {
    if (c) rep.calibrated_c.push_back(*c);
  }

  Rng rng(options.seed);
  const auto visit = [&](const WeightedMatrix<double>& m) {
    const auto f = snapshot_flags(m, actions, options.tol);
    if (options.record) {
      const auto q = functionals(m, quadratic_functional<double>());
      rep.points.push_back({m.w, q.c, q.r, q.e, f.calibeats, f.calibeats_joint, f.proper_calibeats});
    }
    if (f.calibeats && !f.calibeats_joint && !rep.calibeat_without_joint) rep.calibeat_without_joint = m;
    if (f.calibeats && !f.proper_calibeats && !rep.calibeat_without_proper) rep.calibeat_without_proper = m;
    if (f.calibeats_joint && !f.proper_calibeats) ++rep.joint_without_proper;
  };
  for (std::size_t s = 0; s < options.sweep; ++s) {
    visit(matrix_from(x, sample_weights(rng, wm.w.size())));
    ++rep.sweep_samples;
  }
  if (!rep.calibeat_without_proper && !rep.shape.column_constant) {
    if (auto found = directed_counterexample(x)) visit(found->first);
  }
  const bool predicted_violation = rep.shape.nondegenerate && !rep.shape.column_constant && !rep.shape.row_constant;
  rep.equivalence_consistent = rep.joint_without_proper == 0;
  if (rep.shape.nondegenerate) {
    rep.equivalence_consistent =
        rep.equivalence_consistent && rep.calibeat_without_proper.has_value() == predicted_violation;
  }
  return rep;
}

}  // namespace calibeat
