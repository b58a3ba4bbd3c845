#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calibeat/scores.hpp"

namespace calibeat {

// A score as a double, plus its exact text in rational mode.
struct ReportValue {
  double value = 0;
  std::optional<std::string> exact;
};

template <Scalar T>
ReportValue report_value(const T& x) {
  if constexpr (is_exact_v<T>) {
    return {x.to_double(), x.str()};
  } else {
    return {x, std::nullopt};
  }
}

struct ScoreReport {
  std::string rule;
  std::string binning;
  std::size_t t = 0;
  ReportValue brier;
  ReportValue calibration;
  ReportValue refinement;
  ReportValue avg_entropy;
  std::optional<ReportValue> residual;  // only for binnings that refine the forecasts
};

template <Scalar T>
ScoreReport score_report(const ScoringRule<T>& rule, std::span<const std::size_t> actions,
                         std::span<const Dist<T>> forecasts, std::string binning_name, const PureBinning& binning) {
  ScoreReport r;
  r.rule = rule.id();
  r.binning = std::move(binning_name);
  r.t = actions.size();
  const auto g = GeneralBinning<T>::from_pure(binning);
  const T b = brier(rule, actions, forecasts);
  const T k = calibration(rule, actions, forecasts, g);
  const T ref = refinement(rule, actions, g);
  r.brier = report_value(b);
  r.calibration = report_value(k);
  r.refinement = report_value(ref);
  r.avg_entropy = report_value(avg_entropy(rule, actions));
  if (refines_forecasts(binning, forecasts)) r.residual = report_value(T(b - k - ref));
  return r;
}

// What produced a report: embedded so every output names its inputs.
struct RunMeta {
  std::string command;
  std::string config;  // canonical config text
  std::uint64_t seed = 0;
  bool exact = false;
};

std::uint64_t config_hash(std::string_view canonical);  // FNV-1a, 64 bit
std::string hash_hex(std::uint64_t h);

std::string score_reports_json(std::span<const ScoreReport> reports, const RunMeta& meta);
std::string score_reports_csv(std::span<const ScoreReport> reports);

}  // namespace calibeat
