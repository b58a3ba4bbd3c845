#include "calibeat/simplex.hpp"

#include <algorithm>
#include <set>

namespace calibeat {

ActionSet::ActionSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error(ErrorKind::EmptyInput, "action set needs at least one label");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw Error(ErrorKind::Validation, "duplicate action label");
}

std::shared_ptr<const ActionSet> ActionSet::binary() {
  static const auto set = std::make_shared<const ActionSet>(std::vector<std::string>{"0", "1"});
  return set;
}

std::shared_ptr<const ActionSet> ActionSet::indexed(std::size_t n) {
  if (n == 2) return binary();
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return std::make_shared<const ActionSet>(std::move(labels));
}

std::optional<std::size_t> ActionSet::find(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t ActionSet::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorKind::Validation, "unknown action label '" + std::string(label) + "'");
}

}  // namespace calibeat
