#include "calibeat/binning.hpp"

#include <algorithm>
#include <limits>

namespace calibeat {

PureBinning PureBinning::from_labels(std::span<const std::string> names) {
  PureBinning out;
  std::map<std::string, std::size_t> index;
  for (const auto& name : names) {
    auto [it, fresh] = index.try_emplace(name, out.labels.size());
    if (fresh) out.labels.push_back(name);
    out.ids.push_back(it->second);
  }
  return out;
}

PureBinning PureBinning::constant(std::size_t periods, std::string label) {
  PureBinning out;
  out.labels.push_back(std::move(label));
  out.ids.assign(periods, 0);
  return out;
}

PureBinning PureBinning::singletons(std::size_t periods) {
  PureBinning out;
  for (std::size_t s = 0; s < periods; ++s) {
    out.labels.push_back("s" + std::to_string(s + 1));
    out.ids.push_back(s);
  }
  return out;
}

PureBinning joint_many(std::span<const PureBinning> binnings) {
  if (binnings.empty()) throw Error(ErrorKind::EmptyInput, "joint of no binnings");
  const std::size_t t = binnings.front().size();
  for (const auto& b : binnings) {
    if (b.size() != t) throw Error(ErrorKind::LengthMismatch, "joint binning of different horizons");
  }
  PureBinning out;
  std::map<std::vector<std::size_t>, std::size_t> index;
  std::vector<std::size_t> key(binnings.size());
  out.ids.reserve(t);
  for (std::size_t s = 0; s < t; ++s) {
    for (std::size_t k = 0; k < binnings.size(); ++k) key[k] = binnings[k].ids[s];
    auto [it, fresh] = index.try_emplace(key, out.labels.size());
    if (fresh) {
      std::string label;
      if (binnings.size() == 1) {
        label = binnings[0].labels[key[0]];
      } else {
        label = "(";
        for (std::size_t k = 0; k < key.size(); ++k) {
          if (k) label += "|";
          label += binnings[k].labels[key[k]];
        }
        label += ")";
      }
      out.labels.push_back(std::move(label));
      out.parts.push_back(key);
    }
    out.ids.push_back(it->second);
  }
  return out;
}

PureBinning joint(const PureBinning& b, const PureBinning& c) {
  const PureBinning pair[] = {b, c};
  return joint_many(pair);
}

RefinementWitness projection_witness(const PureBinning& joint_binning, std::size_t component) {
  RefinementWitness w;
  for (const auto& part : joint_binning.parts) w.fine_to_coarse.push_back(part.at(component));
  return w;
}

RefinementWitness single_bin_witness(std::size_t fine_bins) {
  return RefinementWitness{std::vector<std::size_t>(fine_bins, 0)};
}

std::vector<Dist<double>> simplex_lattice(const ActionSetPtr& actions, std::size_t res) {
  if (res == 0) throw Error(ErrorKind::Validation, "lattice resolution must be positive");
  const std::size_t n = actions->size();
  std::vector<Dist<double>> out;
  std::vector<std::size_t> k(n, 0);
  const auto recurse = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == n) {
      k[pos] = left;
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<double>(k[i]) / static_cast<double>(res);
      out.emplace_back(Dist<double>::Trusted{}, actions, std::move(p));
      return;
    }
    for (std::size_t v = left + 1; v-- > 0;) {
      k[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  if (n == 1) {
    out.emplace_back(Dist<double>::Trusted{}, actions, std::vector<double>{1.0});
    return out;
  }
  recurse(recurse, 0, res);
  return out;
}

double lattice_covering_radius(std::size_t arity, std::size_t res) {
  // Covering radius of the A_{n-1} root lattice, scaled to spacing sqrt(2)/res.
  const double n = static_cast<double>(arity);
  const double a = std::floor(n / 2.0);
  return std::sqrt(a * (n - a) / n) / static_cast<double>(res);
}

std::size_t lattice_resolution_for(std::size_t arity, double radius) {
  if (!(radius > 0)) throw Error(ErrorKind::Validation, "radius must be positive");
  const double n = static_cast<double>(arity);
  const double a = std::floor(n / 2.0);
  auto res = static_cast<std::size_t>(std::ceil(std::sqrt(a * (n - a) / n) / radius));
  res = std::max<std::size_t>(res, 1);
  while (lattice_covering_radius(arity, res) > radius) ++res;
  return res;
}

namespace {

double distance(const Dist<double>& x, const Dist<double>& y) {
  double s = 0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

}  // namespace

GridBinning smoothed_grid_binning(std::span<const Dist<double>> forecasts, double delta) {
  if (!(delta > 0)) throw Error(ErrorKind::Validation, "delta must be positive");
  GridBinning out;
  if (forecasts.empty()) return out;
  const auto& actions = forecasts.front().action_set();
  out.radius = delta * (1.0 - 1e-9);
  const std::size_t res = lattice_resolution_for(actions->size(), out.radius / 2.0);
  out.centers = simplex_lattice(actions, res);
  for (const auto& y : out.centers) out.binning.labels.push_back(dist_str(y));
  out.binning.periods.reserve(forecasts.size());
  for (const auto& c : forecasts) {
    std::vector<std::pair<std::size_t, double>> row;
    double total = 0;
    for (std::size_t i = 0; i < out.centers.size(); ++i) {
      const double w = out.radius - distance(c, out.centers[i]);
      if (w > 0) {
        row.emplace_back(i, w);
        total += w;
      }
    }
    if (row.empty()) throw Error(ErrorKind::Validation, "lattice fails to cover a forecast");
    for (auto& e : row) e.second /= total;
    out.binning.periods.push_back(std::move(row));
  }
  return out;
}

GridBinning nearest_grid_binning(std::span<const Dist<double>> forecasts, double delta) {
  if (!(delta > 0)) throw Error(ErrorKind::Validation, "delta must be positive");
  GridBinning out;
  if (forecasts.empty()) return out;
  const auto& actions = forecasts.front().action_set();
  const std::size_t res = lattice_resolution_for(actions->size(), delta);
  out.radius = lattice_covering_radius(actions->size(), res);
  out.centers = simplex_lattice(actions, res);
  for (const auto& y : out.centers) out.binning.labels.push_back(dist_str(y));
  for (const auto& c : forecasts) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.centers.size(); ++i) {
      const double d = distance(c, out.centers[i]);
      if (d < best_d) best = i, best_d = d;
    }
    out.binning.periods.push_back({{best, 1.0}});
  }
  return out;
}

}  // namespace calibeat
