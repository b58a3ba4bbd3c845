#include "calibeat/scenario.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"

namespace calibeat {

namespace {

using nlohmann::json;

double number(const json& v) {
  if (!v.is_number()) throw Error(ErrorKind::Parse, "scenario: expected a number");
  return v.get<double>();
}

}  // namespace

AppendixScenario read_scenario(std::istream& in) {
  json doc;
  try {
    doc = json::parse(std::string(std::istreambuf_iterator<char>(in), {}));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("scenario: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "scenario must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "name" && key != "actions" && key != "averages" && key != "lambda" && key != "allow_degenerate" &&
        key != "sweep" && key != "seed") {
      throw Error(ErrorKind::Config, "scenario: unknown key '" + key + "'");
    }
  }
  AppendixScenario sc;
  try {
    sc.name = doc.value("name", std::string("scenario"));
    sc.actions = doc.contains("actions")
                     ? std::make_shared<const ActionSet>(doc["actions"].get<std::vector<std::string>>())
                     : ActionSet::binary();
    sc.allow_degenerate = doc.value("allow_degenerate", false);
    if (doc.contains("sweep")) sc.sweep = doc["sweep"].get<std::size_t>();
    if (doc.contains("seed")) sc.seed = doc["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("scenario: ") + e.what());
  }
  if (!doc.contains("averages") || !doc["averages"].is_array() || doc["averages"].empty()) {
    throw Error(ErrorKind::Parse, "scenario needs a non-empty 'averages' matrix");
  }
  for (const auto& row : doc["averages"]) {
    if (!row.is_array()) throw Error(ErrorKind::Parse, "scenario: averages rows must be arrays");
    auto& out = sc.averages.emplace_back();
    for (const auto& cell : row) {
      if (cell.is_array()) {
        std::vector<double> w;
        for (const auto& x : cell) w.push_back(number(x));
        out.emplace_back(sc.actions, std::move(w));
      } else {
        out.push_back(binary_dist<double>(sc.actions, number(cell)));
      }
    }
    if (out.size() != sc.averages.front().size()) throw Error(ErrorKind::LengthMismatch, "scenario: ragged averages");
  }
  const std::size_t rows = sc.averages.size(), cols = sc.averages.front().size();
  if (doc.contains("lambda")) {
    for (const auto& row : doc["lambda"]) {
      auto& out = sc.lambda.emplace_back();
      for (const auto& cell : row) out.push_back(number(cell));
      if (out.size() != cols) throw Error(ErrorKind::LengthMismatch, "scenario: lambda shape");
    }
    if (sc.lambda.size() != rows) throw Error(ErrorKind::LengthMismatch, "scenario: lambda shape");
  } else {
    sc.lambda.assign(rows, std::vector<double>(cols, 1.0 / static_cast<double>(rows * cols)));
  }
  return sc;
}

AppendixScenario read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  return read_scenario(in);
}

}  // namespace calibeat
