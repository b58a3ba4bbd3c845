#include <algorithm>
#include <cmath>
#include <limits>

#include "calibeat/error.hpp"
#include "calibeat/procedures.hpp"

namespace calibeat {

// With payoffs shifted to be positive, the minimizing row strategy is x/|x|
// for the LP  max 1.x  s.t.  M^T x <= 1, x >= 0, and the value is 1/|x|.
// Dense tableau simplex with Bland's rule.
MatrixGameSolution solve_matrix_game_min(const std::vector<std::vector<double>>& m) {
  const std::size_t rows = m.size();
  if (rows == 0) throw Error(ErrorKind::OptimizerFailure, "matrix game without rows");
  const std::size_t cols = m.front().size();
  if (cols == 0) throw Error(ErrorKind::OptimizerFailure, "matrix game without columns");
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& row : m) {
    if (row.size() != cols) throw Error(ErrorKind::OptimizerFailure, "ragged matrix game");
    for (double x : row) {
      if (!std::isfinite(x)) throw Error(ErrorKind::OptimizerFailure, "non-finite payoff");
      lo = std::min(lo, x);
    }
  }
  const double shift = 1.0 - lo;

  const std::size_t vars = rows + cols;
  std::vector<std::vector<double>> tab(cols, std::vector<double>(vars + 1, 0.0));
  std::vector<std::size_t> basis(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) tab[c][r] = m[r][c] + shift;
    tab[c][rows + c] = 1.0;
    tab[c][vars] = 1.0;
    basis[c] = rows + c;
  }
  std::vector<double> z(vars + 1, 0.0);
  for (std::size_t r = 0; r < rows; ++r) z[r] = -1.0;

  constexpr double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    std::size_t enter = vars;
    for (std::size_t j = 0; j < vars; ++j) {
      if (z[j] < -eps) {
        enter = j;
        break;
      }
    }
    if (enter == vars) break;
    std::size_t leave = cols;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cols; ++i) {
      if (tab[i][enter] > eps) {
        const double ratio = tab[i][vars] / tab[i][enter];
        if (ratio < best - eps || (std::fabs(ratio - best) <= eps && leave < cols && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave == cols) throw Error(ErrorKind::OptimizerFailure, "unbounded matrix game LP");
    const double piv = tab[leave][enter];
    for (auto& x : tab[leave]) x /= piv;
    for (std::size_t i = 0; i < cols; ++i) {
      if (i == leave) continue;
      const double f = tab[i][enter];
      if (f != 0.0) {
        for (std::size_t j = 0; j <= vars; ++j) tab[i][j] -= f * tab[leave][j];
      }
    }
    const double f = z[enter];
    for (std::size_t j = 0; j <= vars; ++j) z[j] -= f * tab[leave][j];
    basis[leave] = enter;
  }

  std::vector<double> x(rows, 0.0);
  for (std::size_t i = 0; i < cols; ++i) {
    if (basis[i] < rows) x[basis[i]] = std::max(0.0, tab[i][vars]);
  }
  double total = 0;
  for (double v : x) total += v;
  if (!(total > 0)) throw Error(ErrorKind::OptimizerFailure, "degenerate matrix game solution");
  MatrixGameSolution sol;
  sol.row_strategy.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) sol.row_strategy[r] = x[r] / total;
  sol.value = 1.0 / total - shift;
  return sol;
}

}  // namespace calibeat
