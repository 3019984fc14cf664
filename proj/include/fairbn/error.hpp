#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairbn {

enum class ErrorKind {
  // network construction
  CycleDetected,
  DanglingEdge,
  MalformedCpt,
  DuplicateName,
  UnknownVariable,
  UnknownState,
  InvalidDocument,
  // roles
  RoleOverlap,
  ControlIsSensitive,
  TargetMissing,
  UnknownFreeEntry,
  RoleDependsOnControl,
  IgnoredNotRemovable,
  // inference
  IncompleteAssignment,
  ZeroEvidenceProbability,
  // learning
  MissingColumn,
  UnparseableValue,
  NonNumericColumn,
  StateMismatch,
  EmptyDataset,
  // solver
  OverfullRow,
  InfeasibleConstraints,
  ZeroCoefficientConstraint,
  ValidationFailed,
  Timeout,
  // io
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable kind; the message names the offending element.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::vector<std::string> details = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Structured items behind the message, e.g. the labels of conflicting constraints.
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorKind kind_;
  std::vector<std::string> details_;
};

}  // namespace fairbn
