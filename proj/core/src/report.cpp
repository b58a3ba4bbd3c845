#include "calibeat/report.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace calibeat {

namespace {

using nlohmann::ordered_json;

ordered_json value_json(const ReportValue& v) { return v.value; }

std::string csv_value(const ReportValue& v) { return v.exact ? *v.exact : scalar_str(v.value); }

}  // namespace

std::uint64_t config_hash(std::string_view canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string score_reports_json(std::span<const ScoreReport> reports, const RunMeta& meta) {
  ordered_json doc;
  doc["command"] = meta.command;
  doc["config_hash"] = hash_hex(config_hash(meta.config));
  doc["seed"] = meta.seed;
  doc["exact"] = meta.exact;
  ordered_json rows = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json row;
    row["rule"] = r.rule;
    row["binning"] = r.binning;
    row["t"] = r.t;
    row["brier"] = value_json(r.brier);
    row["calibration"] = value_json(r.calibration);
    row["refinement"] = value_json(r.refinement);
    row["avg_entropy"] = value_json(r.avg_entropy);
    if (r.residual) row["decomposition_residual"] = value_json(*r.residual);
    if (r.brier.exact) {
      ordered_json exact;
      exact["brier"] = *r.brier.exact;
      exact["calibration"] = *r.calibration.exact;
      exact["refinement"] = *r.refinement.exact;
      exact["avg_entropy"] = *r.avg_entropy.exact;
      if (r.residual) exact["decomposition_residual"] = *r.residual->exact;
      row["exact"] = std::move(exact);
    }
    rows.push_back(std::move(row));
  }
  doc["reports"] = std::move(rows);
  return doc.dump(2) + "\n";
}

std::string score_reports_csv(std::span<const ScoreReport> reports) {
  std::ostringstream out;
  out << "rule,binning,t,brier,calibration,refinement,avg_entropy,decomposition_residual\n";
  for (const auto& r : reports) {
    out << r.rule << ',' << r.binning << ',' << r.t << ',' << csv_value(r.brier) << ',' << csv_value(r.calibration) << ','
        << csv_value(r.refinement) << ',' << csv_value(r.avg_entropy) << ',' << (r.residual ? csv_value(*r.residual) : "")
        << '\n';
  }
  return out.str();
}

}  // namespace calibeat
