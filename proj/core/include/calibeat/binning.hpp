#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "calibeat/error.hpp"
#include "calibeat/numeric.hpp"
#include "calibeat/simplex.hpp"

namespace calibeat {

// One bin per period. `ids[s]` indexes `labels`. Joint binnings also record
// the component bin ids of every joint bin in `parts`.
struct PureBinning {
  std::vector<std::size_t> ids;
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> parts;

  std::size_t size() const { return ids.size(); }
  std::size_t bin_count() const { return labels.size(); }

  static PureBinning from_labels(std::span<const std::string> names);
  static PureBinning constant(std::size_t periods, std::string label = "*");
  static PureBinning singletons(std::size_t periods);
};

// Per-period weights over bins; each period's weights sum to one.
template <Scalar T>
struct GeneralBinning {
  using Entry = std::pair<std::size_t, T>;
  std::vector<std::vector<Entry>> periods;
  std::vector<std::string> labels;

  std::size_t size() const { return periods.size(); }
  std::size_t bin_count() const { return labels.size(); }

  static GeneralBinning from_pure(const PureBinning& p) {
    GeneralBinning g;
    g.labels = p.labels;
    g.periods.reserve(p.size());
    for (auto id : p.ids) g.periods.push_back({{id, T(1)}});
    return g;
  }

  void validate() const {
    for (std::size_t s = 0; s < periods.size(); ++s) {
      Accumulator<T> total;
      for (const auto& [bin, w] : periods[s]) {
        if (bin >= labels.size()) throw Error(ErrorKind::Validation, "bin id out of range");
        if (w < T(0)) throw Error(ErrorKind::NegativeWeight, "bin weight in period " + std::to_string(s + 1));
        total.add(w);
      }
      if (!approx_equal(total.value(), T(1), kMassTolerance)) {
        throw Error(ErrorKind::MassNotOne, "bin weights of period " + std::to_string(s + 1));
      }
    }
  }

  // n_t(i) for every bin.
  std::vector<T> counts() const {
    std::vector<Accumulator<T>> acc(labels.size());
    for (const auto& row : periods) {
      for (const auto& [bin, w] : row) acc[bin].add(w);
    }
    std::vector<T> out;
    out.reserve(acc.size());
    for (const auto& a : acc) out.push_back(a.value());
    return out;
  }
};

struct RefinementWitness {
  std::vector<std::size_t> fine_to_coarse;
};

template <Scalar T>
std::string forecast_key(const Dist<T>& c, double tol = kBinTolerance) {
  std::string key;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (k) key += ',';
    if constexpr (is_exact_v<T>) {
      key += c[k].str();
    } else {
      key += std::to_string(std::llround(c[k] / tol));
    }
  }
  return key;
}

// Bins are the classes of equal forecast values (exact for Rational,
// rounded to `tol` for double).
template <Scalar T>
PureBinning from_forecasts(std::span<const Dist<T>> forecasts, double tol = kBinTolerance) {
  PureBinning out;
  std::map<std::string, std::size_t> index;
  out.ids.reserve(forecasts.size());
  for (const auto& c : forecasts) {
    auto [it, fresh] = index.try_emplace(forecast_key(c, tol), out.labels.size());
    if (fresh) out.labels.push_back(dist_str(c));
    out.ids.push_back(it->second);
  }
  return out;
}

PureBinning joint(const PureBinning& b, const PureBinning& c);
PureBinning joint_many(std::span<const PureBinning> binnings);

// Maps each joint bin to its `component`-th coordinate bin.
RefinementWitness projection_witness(const PureBinning& joint_binning, std::size_t component);
RefinementWitness single_bin_witness(std::size_t fine_bins);

template <Scalar T>
bool check_refines(const GeneralBinning<T>& fine, const GeneralBinning<T>& coarse, const RefinementWitness& witness,
                   double tol = kMassTolerance) {
  if (fine.size() != coarse.size()) throw Error(ErrorKind::LengthMismatch, "refinement check on different horizons");
  if (witness.fine_to_coarse.size() != fine.bin_count()) return false;
  for (auto j : witness.fine_to_coarse) {
    if (j >= coarse.bin_count()) return false;
  }
  std::vector<T> pushed(coarse.bin_count());
  std::vector<T> direct(coarse.bin_count());
  for (std::size_t s = 0; s < fine.size(); ++s) {
    std::fill(pushed.begin(), pushed.end(), T(0));
    std::fill(direct.begin(), direct.end(), T(0));
    for (const auto& [i, w] : fine.periods[s]) pushed[witness.fine_to_coarse[i]] += w;
    for (const auto& [j, w] : coarse.periods[s]) direct[j] += w;
    for (std::size_t j = 0; j < pushed.size(); ++j) {
      if (!approx_equal(pushed[j], direct[j], tol)) return false;
    }
  }
  return true;
}

inline bool check_refines(const PureBinning& fine, const PureBinning& coarse, const RefinementWitness& witness) {
  return check_refines(GeneralBinning<double>::from_pure(fine), GeneralBinning<double>::from_pure(coarse), witness);
}

// Coarsening of `fine` induced by a witness.
template <Scalar T>
GeneralBinning<T> coarsen(const GeneralBinning<T>& fine, const RefinementWitness& witness, std::size_t coarse_bins) {
  GeneralBinning<T> out;
  for (std::size_t j = 0; j < coarse_bins; ++j) out.labels.push_back("g" + std::to_string(j));
  out.periods.reserve(fine.size());
  for (const auto& row : fine.periods) {
    std::map<std::size_t, T> acc;
    for (const auto& [i, w] : row) acc[witness.fine_to_coarse.at(i)] += w;
    out.periods.emplace_back(acc.begin(), acc.end());
  }
  return out;
}

// Same bin implies same forecast.
template <Scalar T>
bool refines_forecasts(const PureBinning& binning, std::span<const Dist<T>> forecasts, double tol = kBinTolerance) {
  if (binning.size() != forecasts.size()) throw Error(ErrorKind::LengthMismatch, "binning vs forecasts");
  std::vector<const Dist<T>*> first(binning.bin_count(), nullptr);
  for (std::size_t s = 0; s < forecasts.size(); ++s) {
    auto& f = first[binning.ids[s]];
    if (!f) {
      f = &forecasts[s];
      continue;
    }
    for (std::size_t k = 0; k < forecasts[s].size(); ++k) {
      if (!approx_equal((*f)[k], forecasts[s][k], tol)) return false;
    }
  }
  return true;
}

// Every bin's supported forecasts within `delta` of a common center: the
// supplied center, or else the bin's weighted average forecast.
template <Scalar T>
bool check_delta_local(const GeneralBinning<T>& f, std::span<const Dist<T>> forecasts, double delta,
                       std::optional<std::span<const Dist<double>>> centers = std::nullopt) {
  if (!(delta > 0)) throw Error(ErrorKind::Validation, "delta must be positive");
  if (f.size() != forecasts.size()) throw Error(ErrorKind::LengthMismatch, "binning vs forecasts");
  if (forecasts.empty()) return true;
  const std::size_t n = forecasts.front().size();
  std::vector<std::vector<double>> center(f.bin_count(), std::vector<double>(n, 0.0));
  if (centers) {
    if (centers->size() != f.bin_count()) throw Error(ErrorKind::LengthMismatch, "one center per bin required");
    for (std::size_t i = 0; i < f.bin_count(); ++i) {
      for (std::size_t k = 0; k < n; ++k) center[i][k] = (*centers)[i][k];
    }
  } else {
    std::vector<double> mass(f.bin_count(), 0.0);
    for (std::size_t s = 0; s < f.size(); ++s) {
      for (const auto& [i, w] : f.periods[s]) {
        const double wd = to_double(w);
        mass[i] += wd;
        for (std::size_t k = 0; k < n; ++k) center[i][k] += wd * to_double(forecasts[s][k]);
      }
    }
    for (std::size_t i = 0; i < f.bin_count(); ++i) {
      if (mass[i] > 0) {
        for (auto& x : center[i]) x /= mass[i];
      }
    }
  }
  for (std::size_t s = 0; s < f.size(); ++s) {
    for (const auto& [i, w] : f.periods[s]) {
      if (!(w > T(0))) continue;
      double d2 = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = to_double(forecasts[s][k]) - center[i][k];
        d2 += d * d;
      }
      if (std::sqrt(d2) > delta + 1e-12) return false;
    }
  }
  return true;
}

// Simplex lattice {k/res} and its covering radius.
std::vector<Dist<double>> simplex_lattice(const ActionSetPtr& actions, std::size_t res);
double lattice_covering_radius(std::size_t arity, std::size_t res);
// Smallest resolution whose covering radius is at most `radius`.
std::size_t lattice_resolution_for(std::size_t arity, double radius);

struct GridBinning {
  GeneralBinning<double> binning;
  std::vector<Dist<double>> centers;  // one per bin
  double radius = 0;                  // every supported forecast is within this of its center
};

// Fractional binning: period s puts weight proportional to max(0, r - ||c_s - y||)
// on each lattice node y, with r just under `delta` and a lattice fine enough
// that several nodes usually share the mass.
GridBinning smoothed_grid_binning(std::span<const Dist<double>> forecasts, double delta);
// Pure binning by nearest lattice node (lowest index on ties).
GridBinning nearest_grid_binning(std::span<const Dist<double>> forecasts, double delta);

}  // namespace calibeat
