#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthctl {

enum class ErrorKind {
  // panel
  FileNotFound,
  MalformedHeader,
  DuplicateCell,
  UnparsableValue,
  InvalidSpec,
  TreatedMissing,
  TreatedIncomplete,
  NoPostPeriods,
  TooFewPrePeriods,
  EmptyDonorPool,
  // solver
  DimensionMismatch,
  PoolTooLarge,
  BadGridStep,
  // estimator / inference
  EmptyRange,
  UnknownDonor,
  UnknownUnit,
  // robustness
  PlaceboTooLate,
  // fixtures
  BadDimensions,
  InfeasibleWeights,
  // svg
  EmptySeries,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::DuplicateCell: return "DuplicateCell";
    case ErrorKind::UnparsableValue: return "UnparsableValue";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::TreatedMissing: return "TreatedMissing";
    case ErrorKind::TreatedIncomplete: return "TreatedIncomplete";
    case ErrorKind::NoPostPeriods: return "NoPostPeriods";
    case ErrorKind::TooFewPrePeriods: return "TooFewPrePeriods";
    case ErrorKind::EmptyDonorPool: return "EmptyDonorPool";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::PoolTooLarge: return "PoolTooLarge";
    case ErrorKind::BadGridStep: return "BadGridStep";
    case ErrorKind::EmptyRange: return "EmptyRange";
    case ErrorKind::UnknownDonor: return "UnknownDonor";
    case ErrorKind::UnknownUnit: return "UnknownUnit";
    case ErrorKind::PlaceboTooLate: return "PlaceboTooLate";
    case ErrorKind::BadDimensions: return "BadDimensions";
    case ErrorKind::InfeasibleWeights: return "InfeasibleWeights";
    case ErrorKind::EmptySeries: return "EmptySeries";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind; the
/// message is prefixed with the kind name so CLI output names the rule.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(detail) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace synthctl
