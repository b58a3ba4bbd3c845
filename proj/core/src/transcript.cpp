#include "calibeat/transcript.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "calibeat/rational.hpp"

namespace calibeat {

namespace {

using nlohmann::json;

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

template <Scalar T>
T read_number(const json& v, std::size_t line) {
  if (v.is_string()) {
    const auto text = v.get<std::string>();
    if constexpr (is_exact_v<T>) {
      return Rational::parse(text);
    } else {
      return Rational::parse(text).to_double();
    }
  }
  if (!v.is_number()) parse_error(line, "expected a number");
  if constexpr (is_exact_v<T>) {
    if (v.is_number_integer()) return Rational(v.get<long long>());
    // shortest decimal text, so 0.2 reads as 1/5
    return Rational::parse(scalar_str(v.get<double>()));
  } else {
    return v.get<double>();
  }
}

template <Scalar T>
Dist<T> read_dist(const json& v, const ActionSetPtr& actions, std::size_t line) {
  if (v.is_array()) {
    std::vector<T> w;
    for (const auto& x : v) w.push_back(read_number<T>(x, line));
    return Dist<T>(actions, std::move(w));
  }
  if (v.is_number() || v.is_string()) {
    if (actions->size() != 2) parse_error(line, "scalar forecast needs two actions");
    return binary_dist<T>(actions, read_number<T>(v, line));
  }
  parse_error(line, "expected a distribution");
}

std::size_t read_action(const json& v, const ActionSet& actions) {
  std::string label;
  if (v.is_string()) {
    label = v.get<std::string>();
  } else if (v.is_number_integer()) {
    label = std::to_string(v.get<long long>());
  } else {
    throw Error(ErrorKind::Parse, "action must be a label");
  }
  const auto idx = actions.find(label);
  if (!idx) throw Error(ErrorKind::ActionSetMismatch, "unknown action label '" + label + "'");
  return *idx;
}

template <Scalar T>
json write_number(const T& x) {
  if constexpr (is_exact_v<T>) {
    return x.str();
  } else {
    return x;
  }
}

template <Scalar T>
json write_dist(const Dist<T>& d) {
  json arr = json::array();
  for (const auto& w : d.weights()) arr.push_back(write_number(w));
  return arr;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

template <Scalar T>
void Transcript<T>::validate() const {
  if (!actions) throw Error(ErrorKind::Validation, "transcript has no action set");
  if (a.empty()) throw Error(ErrorKind::EmptySequence, "transcript has no periods");
  for (auto x : a) {
    if (x >= actions->size()) throw Error(ErrorKind::Validation, "action index out of range");
  }
  if (!b.empty() && !b_labels.empty()) throw Error(ErrorKind::Validation, "reference is both labels and distributions");
  if (!b.empty() && b.size() != a.size()) throw Error(ErrorKind::LengthMismatch, "reference length");
  if (!b_labels.empty() && b_labels.size() != a.size()) throw Error(ErrorKind::LengthMismatch, "reference length");
  if (!c.empty() && c.size() != a.size()) throw Error(ErrorKind::LengthMismatch, "forecast length");
  for (const auto& d : b) require_same(actions, d.action_set());
  for (const auto& d : c) require_same(actions, d.action_set());
  for (const auto& [name, labels] : bins) {
    if (labels.size() != a.size()) throw Error(ErrorKind::LengthMismatch, "binning '" + name + "' length");
  }
}

template <Scalar T>
Transcript<T> read_transcript_jsonl(std::istream& in) {
  Transcript<T> tr;
  tr.actions = ActionSet::binary();
  std::string text;
  std::size_t line = 0;
  bool seen_period = false;
  bool b_is_label = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::exception& e) {
      parse_error(line, e.what());
    }
    if (!obj.is_object()) parse_error(line, "expected an object");
    if (obj.contains("actions") && !obj.contains("a")) {
      if (seen_period) parse_error(line, "header after the first period");
      std::vector<std::string> labels;
      try {
        labels = obj.at("actions").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        parse_error(line, e.what());
      }
      tr.actions = std::make_shared<const ActionSet>(std::move(labels));
      continue;
    }
    for (const auto& [key, _] : obj.items()) {
      if (key != "t" && key != "a" && key != "b" && key != "c" && key != "bins") parse_error(line, "unknown key '" + key + "'");
    }
    if (!obj.contains("a")) parse_error(line, "period without an action");
    const std::size_t index = tr.a.size();
    if (obj.contains("t")) {
      if (!obj["t"].is_number_integer() || obj["t"].get<long long>() != static_cast<long long>(index + 1)) {
        throw Error(ErrorKind::Validation, "line " + std::to_string(line) + ": periods must count from t=1");
      }
    }
    tr.a.push_back(read_action(obj["a"], *tr.actions));

    const bool has_b = obj.contains("b");
    if (index == 0) b_is_label = has_b && obj["b"].is_string() && tr.actions->size() != 2;
    if (index == 0 && has_b && obj["b"].is_string() && tr.actions->size() == 2) {
      // a string b is a label unless it parses as a number
      try {
        (void)Rational::parse(obj["b"].get<std::string>());
      } catch (const Error&) {
        b_is_label = true;
      }
    }
    const bool expect_b = index == 0 ? has_b : (!tr.b.empty() || !tr.b_labels.empty());
    if (has_b != expect_b) throw Error(ErrorKind::Validation, "line " + std::to_string(line) + ": b present in some periods only");
    if (has_b) {
      if (b_is_label) {
        if (!obj["b"].is_string()) parse_error(line, "b must be a label");
        tr.b_labels.push_back(obj["b"].get<std::string>());
      } else {
        tr.b.push_back(read_dist<T>(obj["b"], tr.actions, line));
      }
    }

    const bool has_c = obj.contains("c");
    if (index > 0 && has_c != !tr.c.empty()) {
      throw Error(ErrorKind::Validation, "line " + std::to_string(line) + ": c present in some periods only");
    }
    if (has_c) tr.c.push_back(read_dist<T>(obj["c"], tr.actions, line));

    if (obj.contains("bins")) {
      if (!obj["bins"].is_object()) parse_error(line, "bins must be an object");
      for (const auto& [name, label] : obj["bins"].items()) {
        auto& seq = tr.bins[name];
        if (seq.size() != index) throw Error(ErrorKind::Validation, "binning '" + name + "' skips periods");
        seq.push_back(label.is_string() ? label.template get<std::string>() : label.dump());
      }
    }
    for (const auto& [name, seq] : tr.bins) {
      if (seq.size() != index + 1) throw Error(ErrorKind::Validation, "binning '" + name + "' skips periods");
    }
    seen_period = true;
  }
  tr.validate();
  return tr;
}

template <Scalar T>
Transcript<T> read_transcript_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_transcript_csv<T>(in);
  return read_transcript_jsonl<T>(in);
}

template <Scalar T>
Transcript<T> read_transcript_csv(std::istream& in) {
  Transcript<T> tr;
  tr.actions = ActionSet::binary();
  std::string text;
  if (!std::getline(in, text)) throw Error(ErrorKind::EmptySequence, "empty csv");
  const auto header = split_csv(text);
  std::optional<std::size_t> col_t, col_a, col_b, col_c;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == "t") col_t = k;
    else if (header[k] == "a") col_a = k;
    else if (header[k] == "b") col_b = k;
    else if (header[k] == "c") col_c = k;
    else throw Error(ErrorKind::Parse, "unknown csv column '" + header[k] + "'");
  }
  if (!col_a) throw Error(ErrorKind::Parse, "csv needs an 'a' column");
  std::size_t line = 1;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(text);
    if (cells.size() != header.size()) parse_error(line, "wrong number of cells");
    if (col_t && cells[*col_t] != std::to_string(tr.a.size() + 1)) {
      throw Error(ErrorKind::Validation, "line " + std::to_string(line) + ": periods must count from t=1");
    }
    tr.a.push_back(read_action(json(cells[*col_a]), *tr.actions));
    const auto prob = [&](std::size_t col) {
      T p;
      try {
        if constexpr (is_exact_v<T>) {
          p = Rational::parse(cells[col]);
        } else {
          p = Rational::parse(cells[col]).to_double();
        }
      } catch (const Error& e) {
        parse_error(line, e.what());
      }
      return binary_dist<T>(tr.actions, p);
    };
    if (col_b) tr.b.push_back(prob(*col_b));
    if (col_c) tr.c.push_back(prob(*col_c));
  }
  tr.validate();
  return tr;
}

template <Scalar T>
void write_transcript_jsonl(const Transcript<T>& tr, std::ostream& out) {
  tr.validate();
  out << json{{"actions", tr.actions->labels()}}.dump() << '\n';
  for (std::size_t s = 0; s < tr.size(); ++s) {
    json obj;
    obj["t"] = s + 1;
    obj["a"] = tr.actions->label(tr.a[s]);
    if (!tr.b.empty()) obj["b"] = write_dist(tr.b[s]);
    if (!tr.b_labels.empty()) obj["b"] = tr.b_labels[s];
    if (!tr.c.empty()) obj["c"] = write_dist(tr.c[s]);
    if (!tr.bins.empty()) {
      json bins = json::object();
      for (const auto& [name, labels] : tr.bins) bins[name] = labels[s];
      obj["bins"] = std::move(bins);
    }
    out << obj.dump() << '\n';
  }
}

#define CALIBEAT_INSTANTIATE(T)                                            \
  template void Transcript<T>::validate() const;                           \
  template Transcript<T> read_transcript_jsonl<T>(std::istream&);          \
  template Transcript<T> read_transcript_file<T>(const std::string&);      \
  template Transcript<T> read_transcript_csv<T>(std::istream&);            \
  template void write_transcript_jsonl<T>(const Transcript<T>&, std::ostream&);

CALIBEAT_INSTANTIATE(double)
CALIBEAT_INSTANTIATE(Rational)

#undef CALIBEAT_INSTANTIATE

}  // namespace calibeat
