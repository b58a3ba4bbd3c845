#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "calibeat/simplex.hpp"

namespace calibeat {

// Snapshot file for the row/column machinery:
// {"name": "...", "actions": ["0","1"], "averages": [[0.2, 0.9], [0.5, 0.6]],
//  "lambda": [[...]], "allow_degenerate": false, "sweep": 1000, "seed": 1}
// An average is a distribution or, for two actions, the probability of "1".
// "lambda" defaults to uniform frequencies.
struct AppendixScenario {
  std::string name;
  ActionSetPtr actions;
  std::vector<std::vector<Dist<double>>> averages;
  std::vector<std::vector<double>> lambda;
  bool allow_degenerate = false;
  std::optional<std::size_t> sweep;
  std::optional<std::uint64_t> seed;
};

AppendixScenario read_scenario(std::istream& in);
AppendixScenario read_scenario_file(const std::string& path);

}  // namespace calibeat
