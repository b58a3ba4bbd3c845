#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "calibeat/binning.hpp"
#include "calibeat/simplex.hpp"

namespace calibeat {

// Aligned per-period records: realized action a_t, reference b_t (either a
// distribution or an opaque bin label), forecast c_t, and named binnings.
template <Scalar T>
struct Transcript {
  ActionSetPtr actions;
  std::vector<std::size_t> a;
  std::vector<Dist<T>> b;                // empty when b is label-only or absent
  std::vector<std::string> b_labels;     // empty when b holds distributions or is absent
  std::vector<Dist<T>> c;                // empty when absent
  std::map<std::string, std::vector<std::string>> bins;  // named per-period bin labels

  std::size_t size() const { return a.size(); }
  bool has_reference() const { return !b.empty() || !b_labels.empty(); }

  PureBinning reference_binning() const {
    if (!b.empty()) return from_forecasts<T>(b);
    if (!b_labels.empty()) return PureBinning::from_labels(b_labels);
    throw Error(ErrorKind::Validation, "transcript has no reference sequence");
  }
  PureBinning forecast_binning() const {
    if (c.empty()) throw Error(ErrorKind::Validation, "transcript has no forecasts");
    return from_forecasts<T>(c);
  }
  PureBinning named_binning(const std::string& name) const {
    auto it = bins.find(name);
    if (it == bins.end()) throw Error(ErrorKind::Validation, "no binning named '" + name + "'");
    return PureBinning::from_labels(it->second);
  }

  // Checks alignment and the contiguity of stored fields.
  void validate() const;
};

// JSON-lines: optional header {"actions":[...]} then one object per period,
// {"t":1,"a":"1","b":[0.2,0.8],"c":[1.0,0.0],"bins":{"name":"label"}}.
// A binary forecast may be a single probability of action "1"; b may be a string
// label; numbers may be JSON numbers or strings such as "1/5". In exact mode
// JSON numbers are read through their shortest decimal text.
template <Scalar T>
Transcript<T> read_transcript_jsonl(std::istream& in);
template <Scalar T>
Transcript<T> read_transcript_file(const std::string& path);
// CSV for two actions: header t,a,b,c with b and c the probability of "1".
template <Scalar T>
Transcript<T> read_transcript_csv(std::istream& in);

// Rational values are written as strings ("1/5") so they survive exactly.
template <Scalar T>
void write_transcript_jsonl(const Transcript<T>& tr, std::ostream& out);

}  // namespace calibeat
