#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calibeat/error.hpp"
#include "calibeat/numeric.hpp"
#include "calibeat/simplex.hpp"

namespace calibeat {

// I x J matrix of points of R^m with a weight matrix W >= 0 summing to one.
template <Scalar T>
struct WeightedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t dim = 0;
  std::vector<std::vector<T>> x;  // row-major, x[i*cols + j] in R^dim
  std::vector<T> w;               // row-major

  const std::vector<T>& at(std::size_t i, std::size_t j) const { return x[i * cols + j]; }
  const T& weight(std::size_t i, std::size_t j) const { return w[i * cols + j]; }

  static WeightedMatrix make(std::size_t rows, std::size_t cols, std::vector<std::vector<T>> points, std::vector<T> weights) {
    WeightedMatrix m{rows, cols, points.empty() ? 0 : points.front().size(), std::move(points), std::move(weights)};
    m.validate();
    return m;
  }

  void validate() const {
    if (rows == 0 || cols == 0) throw Error(ErrorKind::EmptyInput, "empty weighted matrix");
    if (x.size() != rows * cols || w.size() != rows * cols) throw Error(ErrorKind::LengthMismatch, "matrix shape");
    if (dim == 0) throw Error(ErrorKind::Validation, "points need at least one coordinate");
    for (const auto& p : x) {
      if (p.size() != dim) throw Error(ErrorKind::LengthMismatch, "point dimension");
    }
    Accumulator<T> total;
    for (const auto& v : w) {
      if (v < T(0)) throw Error(ErrorKind::NegativeWeight, "matrix weight");
      total.add(v);
    }
    if (!approx_equal(total.value(), T(1), kMassTolerance)) throw Error(ErrorKind::MassNotOne, "matrix weights");
  }

  std::vector<T> row_weights() const {
    std::vector<T> out(rows, T(0));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) out[i] += weight(i, j);
    }
    return out;
  }
  std::vector<T> col_weights() const {
    std::vector<T> out(cols, T(0));
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) out[j] += weight(i, j);
    }
    return out;
  }
  // r_i (nullopt for zero-weight rows)
  std::vector<std::optional<std::vector<T>>> row_averages() const { return averages(true); }
  std::vector<std::optional<std::vector<T>>> col_averages() const { return averages(false); }

 private:
  std::vector<std::optional<std::vector<T>>> averages(bool by_row) const {
    const std::size_t outer = by_row ? rows : cols;
    const std::size_t inner = by_row ? cols : rows;
    std::vector<std::optional<std::vector<T>>> out(outer);
    for (std::size_t o = 0; o < outer; ++o) {
      T mass(0);
      std::vector<T> sum(dim, T(0));
      for (std::size_t k = 0; k < inner; ++k) {
        const std::size_t i = by_row ? o : k;
        const std::size_t j = by_row ? k : o;
        const T& wij = weight(i, j);
        if (wij == T(0)) continue;
        mass += wij;
        for (std::size_t d = 0; d < dim; ++d) sum[d] += wij * at(i, j)[d];
      }
      if (!(mass > T(0))) continue;
      for (auto& v : sum) v /= mass;
      out[o] = std::move(sum);
    }
    return out;
  }
};

template <Scalar T>
struct ConcaveFunctional {
  std::string name;
  std::function<T(std::span<const T>)> eval;
  bool strictly_concave = false;
};

// Q(z) = -||z||^2
template <Scalar T>
ConcaveFunctional<T> quadratic_functional() {
  return {"Q",
          [](std::span<const T> z) {
            T s(0);
            for (const auto& v : z) s -= v * v;
            return s;
          },
          true};
}

// Q(z) - n max(v.z - alpha, 0)^2
ConcaveFunctional<double> hinge_functional(std::vector<double> v, double alpha, double n);
// Smooth concave functions with bounded gradients.
ConcaveFunctional<double> soft_norm_functional();   // -sqrt(1 + ||z||^2)
ConcaveFunctional<double> log_cosh_functional();    // -sum log cosh z_k

template <Scalar T>
struct Functionals {
  T e;  // sum_ij w_ij F(x_ij)
  T r;  // sum_i w_i. F(r_i)
  T c;  // sum_j w_.j F(c_j)
};

template <Scalar T>
Functionals<T> functionals(const WeightedMatrix<T>& wm, const ConcaveFunctional<T>& f) {
  Functionals<T> out{T(0), T(0), T(0)};
  for (std::size_t i = 0; i < wm.rows; ++i) {
    for (std::size_t j = 0; j < wm.cols; ++j) {
      if (wm.weight(i, j) != T(0)) out.e += wm.weight(i, j) * f.eval(wm.at(i, j));
    }
  }
  const auto rw = wm.row_weights();
  const auto ra = wm.row_averages();
  for (std::size_t i = 0; i < wm.rows; ++i) {
    if (ra[i]) out.r += rw[i] * f.eval(*ra[i]);
  }
  const auto cw = wm.col_weights();
  const auto ca = wm.col_averages();
  for (std::size_t j = 0; j < wm.cols; ++j) {
    if (ca[j]) out.c += cw[j] * f.eval(*ca[j]);
  }
  return out;
}

struct Constancy {
  bool w_column_constant = false;
  bool w_row_constant = false;
  bool column_constant = false;
  bool row_constant = false;
  bool nondegenerate = false;  // more than two distinct entries
  std::size_t distinct_entries = 0;
};

template <Scalar T>
bool same_point(const std::vector<T>& a, const std::vector<T>& b, double tol = kBinTolerance) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!approx_equal(a[k], b[k], tol)) return false;
  }
  return true;
}

template <Scalar T>
std::size_t distinct_entries(std::span<const std::vector<T>> points, double tol = kBinTolerance) {
  std::vector<const std::vector<T>*> reps;
  for (const auto& p : points) {
    bool seen = false;
    for (auto* r : reps) {
      if (same_point(*r, p, tol)) {
        seen = true;
        break;
      }
    }
    if (!seen) reps.push_back(&p);
  }
  return reps.size();
}

template <Scalar T>
Constancy constancy(const WeightedMatrix<T>& wm, double tol = kBinTolerance) {
  Constancy c;
  c.w_column_constant = c.column_constant = true;
  c.w_row_constant = c.row_constant = true;
  for (std::size_t i = 0; i < wm.rows; ++i) {
    for (std::size_t j = 0; j < wm.cols; ++j) {
      for (std::size_t i2 = i + 1; i2 < wm.rows; ++i2) {
        if (!same_point(wm.at(i, j), wm.at(i2, j), tol)) {
          c.column_constant = false;
          if (wm.weight(i, j) > T(0) && wm.weight(i2, j) > T(0)) c.w_column_constant = false;
        }
      }
      for (std::size_t j2 = j + 1; j2 < wm.cols; ++j2) {
        if (!same_point(wm.at(i, j), wm.at(i, j2), tol)) {
          c.row_constant = false;
          if (wm.weight(i, j) > T(0) && wm.weight(i, j2) > T(0)) c.w_row_constant = false;
        }
      }
    }
  }
  c.distinct_entries = distinct_entries<T>(wm.x, tol);
  c.nondegenerate = c.distinct_entries > 2;
  return c;
}

template <Scalar T>
struct Prop14Report {
  Functionals<T> values;
  Constancy constancy;
  bool a_holds = true;   // C >= E and R >= E
  bool b1_holds = true;  // W-column-constant => C = E
  bool b2_holds = true;  // W-row-constant => R = E
  bool c1_holds = true;  // (C = E) <=> W-column-constant, with F strictly concave
  bool c2_holds = true;  // (R = E) <=> W-row-constant
  bool all() const { return a_holds && b1_holds && b2_holds && c1_holds && c2_holds; }
};

// Checks each part on one instance. Equalities are exact for Rational and
// within `tol` for double; (c1)/(c2) are only checked for strictly concave F.
template <Scalar T>
Prop14Report<T> prop14_check(const WeightedMatrix<T>& wm, const ConcaveFunctional<T>& f, double tol = 1e-9) {
  Prop14Report<T> r;
  r.values = functionals(wm, f);
  r.constancy = constancy(wm);
  const auto& v = r.values;
  if constexpr (is_exact_v<T>) {
    r.a_holds = v.c >= v.e && v.r >= v.e;
  } else {
    r.a_holds = v.c >= v.e - tol && v.r >= v.e - tol;
  }
  const bool ce = approx_equal(v.c, v.e, tol);
  const bool re = approx_equal(v.r, v.e, tol);
  if (r.constancy.w_column_constant) r.b1_holds = ce;
  if (r.constancy.w_row_constant) r.b2_holds = re;
  if (f.strictly_concave) {
    r.c1_holds = ce == r.constancy.w_column_constant;
    r.c2_holds = re == r.constancy.w_row_constant;
  }
  return r;
}

// Points of a double matrix as plain vectors (helper for the numerical parts).
using Point = std::vector<double>;

// Euclidean projection onto conv(points).
struct HullProjection {
  Point nearest;
  double distance = 0;
};
HullProjection project_onto_hull(const Point& z, std::span<const Point> points);
inline constexpr double kHullTolerance = 1e-9;

enum class CounterexampleCase { A, B };

struct Counterexample {
  CounterexampleCase which = CounterexampleCase::A;
  WeightedMatrix<double> wm;  // 2x2, the fourth entry has weight zero
  double parameter = 0;       // epsilon (case A) or delta (case B)
  double c_q = 0;             // C_W(Q)
  double r_q = 0;             // R_W(Q)
  double e_q = 0;             // E_W(Q)
  std::size_t outside_row = 0;  // a positive-weight row average outside conv{c_j}
  double outside_distance = 0;
  std::optional<double> closed_form_gap;  // case B: ||a-b||^2 delta(1-delta)(1+2delta)/(6(2+delta))
};

// X = [[a, b], [d, .]] with a, b, d distinct. Case B when d lies strictly
// between a and b on their line, case A otherwise.
Counterexample counterexample_weights(const Point& a, const Point& b, const Point& d);

// Case B weights in line coordinates a -> 1, b -> 0, d -> delta.
WeightedMatrix<double> case_b_weights(double delta);
double case_b_gap(double delta);  // delta(1-delta)(1+2delta)/(6(2+delta))

// Concave battery used for (U1)/(U3): Q, the hinge cuts separating any row
// average from conv{c_j} (n in {1,10,100,1000}), and the smooth functions.
std::vector<ConcaveFunctional<double>> concave_battery(const WeightedMatrix<double>& wm);

struct UChecks {
  bool premise = false;  // C(Q) <= R(Q)
  bool u1 = true;        // C(F) <= R(F) over the battery
  bool u2 = true;        // C(Q) = E(Q)
  bool u3 = true;        // C(F) = E(F) <= R(F) over the battery
};
UChecks u_checks(const WeightedMatrix<double>& wm, double tol = 1e-9);

struct Theorem15Verdict {
  Constancy shape;
  std::size_t trials = 0;
  std::size_t premise_hits = 0;       // sampled W with C(Q) <= R(Q)
  std::size_t u1_failures = 0;
  std::size_t u2_failures = 0;
  std::size_t u3_failures = 0;
  std::size_t inconsistent = 0;       // sampled W where (U1)-(U3) disagree (row-constant case)
  std::optional<Counterexample> witness;  // directed (U3)-violating W
  bool observed_u = true;             // no violation found at all
  bool predicted_u = true;            // column-constant (or row-constant case)
  bool consistent = true;
};

// Randomized falsification harness on a fixed X (rows x cols points).
Theorem15Verdict theorem15_check(const std::vector<std::vector<Point>>& x, std::size_t trials, std::uint64_t seed);

// Embeds the 2x2 counterexample at (i,j),(i,j2),(i2,j) of X if one exists.
std::optional<std::pair<WeightedMatrix<double>, Counterexample>> directed_counterexample(
    const std::vector<std::vector<Point>>& x);

struct SnapshotFlags {
  bool calibeats = false;         // C(Q) <= R(Q)
  bool calibeats_joint = false;   // C(Q) = E(Q)
  bool proper_calibeats = false;  // C(H) <= R(H) for the whole battery
  std::vector<std::pair<std::string, bool>> per_rule;  // rule entropy -> C(H) <= R(H)
};

struct SweepPoint {
  std::vector<double> lambda;  // row-major frequencies
  double c_q = 0, r_q = 0, e_q = 0;
  bool calibeats = false, joint = false, proper = false;
};

struct Theorem12Report {
  Constancy shape;
  SnapshotFlags flags;               // at the given frequencies
  std::vector<Point> calibrated_c;   // c = abar(., d) per column
  Functionals<double> quadratic{};   // E/R/C of Q
  // frequency sweep
  std::size_t sweep_samples = 0;
  std::optional<WeightedMatrix<double>> calibeat_without_joint;
  std::optional<WeightedMatrix<double>> calibeat_without_proper;
  std::size_t joint_without_proper = 0;  // must stay zero
  bool equivalence_consistent = true;    // (ii) fails => (i) fails as realized
  std::vector<SweepPoint> points;        // filled when Theorem12Options::record is set
};

struct Theorem12Options {
  bool allow_degenerate = false;
  std::size_t sweep = 1000;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  bool record = false;
};

// Snapshot of Example 1 style data: action averages abar(b,d) (points of the
// simplex) and bin frequencies lambda. The battery is the quadratic,
// spherical and power rule entropies plus the hinge cuts for the matrix.
Theorem12Report theorem12_scenario(const std::vector<std::vector<Dist<double>>>& averages,
                                   const std::vector<std::vector<double>>& lambda, const Theorem12Options& options);

SnapshotFlags snapshot_flags(const WeightedMatrix<double>& wm, const ActionSetPtr& actions, double tol = 1e-9);

}  // namespace calibeat
