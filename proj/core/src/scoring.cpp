#include "calibeat/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <mutex>

namespace calibeat {

namespace detail {

std::string alpha_str(double alpha) { return scalar_str(alpha); }

}  // namespace detail

namespace {

// All points of the simplex lattice {k/res} in `arity` coordinates.
std::vector<std::vector<double>> lattice(std::size_t arity, std::size_t res) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> k(arity, 0);
  const auto recurse = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == arity) {
      k[pos] = left;
      std::vector<double> p(arity);
      for (std::size_t i = 0; i < arity; ++i) p[i] = static_cast<double>(k[i]) / static_cast<double>(res);
      out.push_back(std::move(p));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      k[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  recurse(recurse, 0, res);
  return out;
}

// Orthonormal basis of the sum-zero subspace.
std::vector<std::vector<double>> tangent_basis(std::size_t n) {
  std::vector<std::vector<double>> basis;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::vector<double> v(n, 0.0);
    v[i] = 1.0;
    v[n - 1] = -1.0;
    for (const auto& b : basis) {
      double p = 0;
      for (std::size_t k = 0; k < n; ++k) p += v[k] * b[k];
      for (std::size_t k = 0; k < n; ++k) v[k] -= p * b[k];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

bool feasible(const std::vector<double>& p) {
  return std::all_of(p.begin(), p.end(), [](double x) { return x >= 0.0; });
}

double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

std::vector<double> eval(const LossFn<double>& fn, const std::vector<double>& p) {
  return fn(std::span<const double>(p));
}

// Largest singular value of a column list (n x m), by power iteration on J^T J.
double spectral_norm(const std::vector<std::vector<double>>& cols) {
  const std::size_t m = cols.size();
  if (m == 0) return 0.0;
  if (m == 1) {
    double s = 0;
    for (double x : cols[0]) s += x * x;
    return std::sqrt(s);
  }
  std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < cols[i].size(); ++k) g[i][j] += cols[i][k] * cols[j][k];
    }
  }
  std::vector<double> v(m, 1.0);
  double lambda = 0;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> w(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) w[i] += g[i][j] * v[j];
    }
    double norm = 0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0) return 0.0;
    for (auto& x : w) x /= norm;
    lambda = norm;
    v = std::move(w);
  }
  return std::sqrt(lambda);
}

double sweep_bound(const LossFn<double>& fn, std::size_t arity) {
  const std::size_t res = arity == 2 ? 2000 : arity == 3 ? 40 : arity == 4 ? 16 : arity == 5 ? 8 : 4;
  const auto pts = lattice(arity, res);
  std::vector<std::vector<double>> vals;
  vals.reserve(pts.size());
  for (const auto& p : pts) vals.push_back(eval(fn, p));
  double best = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t j = i + 1; j < vals.size(); ++j) best = std::max(best, norm_diff(vals[i], vals[j]));
  }
  return best;
}

double sweep_lipschitz(const LossFn<double>& fn, std::size_t arity) {
  const std::size_t res = arity == 2 ? 20000 : arity == 3 ? 200 : arity == 4 ? 40 : arity == 5 ? 16 : 8;
  const double h = 1e-6;
  const auto basis = tangent_basis(arity);
  double best = 0;
  for (const auto& p : lattice(arity, res)) {
    std::vector<std::vector<double>> cols;
    for (const auto& v : basis) {
      std::vector<double> up(arity), down(arity);
      for (std::size_t k = 0; k < arity; ++k) {
        up[k] = p[k] + h * v[k];
        down[k] = p[k] - h * v[k];
      }
      const bool fu = feasible(up), fd = feasible(down);
      std::vector<double> a, b;
      double step;
      if (fu && fd) {
        a = eval(fn, up), b = eval(fn, down), step = 2 * h;
      } else if (fu) {
        a = eval(fn, up), b = eval(fn, p), step = h;
      } else if (fd) {
        a = eval(fn, p), b = eval(fn, down), step = h;
      } else {
        continue;
      }
      std::vector<double> col(arity);
      for (std::size_t k = 0; k < arity; ++k) col[k] = (a[k] - b[k]) / step;
      cols.push_back(std::move(col));
    }
    best = std::max(best, spectral_norm(cols));
  }
  return best;
}

}  // namespace

RuleConstants sweep_constants(const std::string& key, const LossFn<double>& fn, std::size_t arity, bool want_bound,
                              bool want_lipschitz) {
  static std::mutex mu;
  static std::map<std::pair<std::string, std::size_t>, RuleConstants> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find({key, arity}); it != cache.end()) {
      RuleConstants k = it->second;
      if (!want_bound) k.bound.reset();
      if (!want_lipschitz) k.lipschitz.reset();
      if ((!want_bound || k.bound) && (!want_lipschitz || k.lipschitz)) return k;
    }
  }
  const double margin = arity == 2 ? 1.001 : 1.05;
  RuleConstants k;
  if (want_bound) k.bound = sweep_bound(fn, arity) * margin;
  if (want_lipschitz) k.lipschitz = sweep_lipschitz(fn, arity) * margin;
  std::lock_guard lock(mu);
  auto& slot = cache[{key, arity}];
  if (k.bound) slot.bound = k.bound;
  if (k.lipschitz) slot.lipschitz = k.lipschitz;
  return k;
}

RuleConstants quadratic_constants(std::size_t arity) {
  // ||L(c)-L(c')||^2 = 4||c-c'||^2 + n((c-c').(c+c'))^2 on the simplex,
  // and the second term is at most (4 - 4/n) n ||c-c'||^2.
  const double n = static_cast<double>(arity);
  RuleConstants k;
  k.lipschitz = 2.0 * std::sqrt(n);
  if (arity <= 2) {
    k.bound = 2.0 * std::sqrt(2.0);
  } else {
    k.bound = std::min(*k.lipschitz * std::sqrt(2.0), std::sqrt(8.0 + (n - 1) * (n - 1) / n));
  }
  return k;
}

ScoringRule<double> make_spherical(ActionSetPtr actions, double alpha) {
  if (!std::isfinite(alpha) || alpha <= 1.0) throw Error(ErrorKind::BadAlpha, "spherical rule needs alpha > 1");
  LossFn<double> fn = [alpha](std::span<const double> c) {
    double sum = 0;
    for (double x : c) sum += std::pow(x, alpha);
    const double norm = std::pow(sum, (alpha - 1.0) / alpha);
    std::vector<double> v(c.size());
    for (std::size_t a = 0; a < c.size(); ++a) v[a] = -std::pow(c[a], alpha - 1.0) / norm;
    return v;
  };
  const std::string id = "spherical:" + detail::alpha_str(alpha);
  const auto k = sweep_constants(id, fn, actions->size(), true, alpha >= 2.0);
  return ScoringRule<double>(id, std::move(actions), std::move(fn), k);
}

ScoringRule<double> make_entropy_rule(std::string id, ActionSetPtr actions,
                                      std::function<double(std::span<const double>)> entropy,
                                      std::function<std::vector<double>(std::span<const double>)> supergradient,
                                      RuleConstants constants) {
  LossFn<double> fn = [entropy = std::move(entropy), g = std::move(supergradient)](std::span<const double> c) {
    auto v = g(c);
    double cg = 0;
    for (std::size_t k = 0; k < c.size(); ++k) cg += c[k] * v[k];
    const double shift = entropy(c) - cg;
    for (auto& x : v) x += shift;
    return v;
  };
  return ScoringRule<double>(std::move(id), std::move(actions), std::move(fn), constants);
}

namespace {

double parse_alpha(const std::string& id, std::string_view text) {
  double alpha = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), alpha);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Config, "bad alpha in rule id '" + id + "'");
  }
  return alpha;
}

}  // namespace

template <Scalar T>
ScoringRule<T> make_rule(const std::string& id, ActionSetPtr actions) {
  if (id == "quadratic") return make_quadratic<T>(std::move(actions));
  if (id == "step") return make_step<T>(std::move(actions));
  if (id == "step:tie-low") return make_step<T>(std::move(actions), StepTie::LowAtHalf);
  const auto colon = id.find(':');
  const std::string family = id.substr(0, colon);
  if (colon != std::string::npos && family == "power") {
    return make_power<T>(std::move(actions), parse_alpha(id, std::string_view(id).substr(colon + 1)));
  }
  if (colon != std::string::npos && family == "spherical") {
    if constexpr (is_exact_v<T>) {
      throw Error(ErrorKind::Config, "spherical rules are irrational; use float mode for '" + id + "'");
    } else {
      return make_spherical(std::move(actions), parse_alpha(id, std::string_view(id).substr(colon + 1)));
    }
  }
  throw Error(ErrorKind::Config, "unknown rule id '" + id + "'");
}

template ScoringRule<double> make_rule<double>(const std::string&, ActionSetPtr);
template ScoringRule<Rational> make_rule<Rational>(const std::string&, ActionSetPtr);

}  // namespace calibeat
