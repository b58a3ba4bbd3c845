#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace calibeat {

enum class ErrorKind {
  NegativeWeight,
  MassNotOne,
  ActionSetMismatch,
  EmptyInput,
  ZeroTotalWeight,
  LengthMismatch,
  EmptySequence,
  NotARefinement,
  NotDeltaLocal,
  MissingConstant,
  BadAlpha,
  WrongArity,
  OptimizerFailure,
  GridMissing,
  UnknownStrategy,
  CollinearityMisclassified,
  DegenerateMatrix,
  Parse,
  Config,
  Validation,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::MassNotOne: return "MassNotOne";
    case ErrorKind::ActionSetMismatch: return "ActionSetMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::ZeroTotalWeight: return "ZeroTotalWeight";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::NotARefinement: return "NotARefinement";
    case ErrorKind::NotDeltaLocal: return "NotDeltaLocal";
    case ErrorKind::MissingConstant: return "MissingConstant";
    case ErrorKind::BadAlpha: return "BadAlpha";
    case ErrorKind::WrongArity: return "WrongArity";
    case ErrorKind::OptimizerFailure: return "OptimizerFailure";
    case ErrorKind::GridMissing: return "GridMissing";
    case ErrorKind::UnknownStrategy: return "UnknownStrategy";
    case ErrorKind::CollinearityMisclassified: return "CollinearityMisclassified";
    case ErrorKind::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Validation: return "Validation";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace calibeat
