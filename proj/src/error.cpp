#include "fairbn/error.hpp"

namespace fairbn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::DanglingEdge: return "DanglingEdge";
    case ErrorKind::MalformedCpt: return "MalformedCpt";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::UnknownState: return "UnknownState";
    case ErrorKind::InvalidDocument: return "InvalidDocument";
    case ErrorKind::RoleOverlap: return "RoleOverlap";
    case ErrorKind::ControlIsSensitive: return "ControlIsSensitive";
    case ErrorKind::TargetMissing: return "TargetMissing";
    case ErrorKind::UnknownFreeEntry: return "UnknownFreeEntry";
    case ErrorKind::RoleDependsOnControl: return "RoleDependsOnControl";
    case ErrorKind::IgnoredNotRemovable: return "IgnoredNotRemovable";
    case ErrorKind::IncompleteAssignment: return "IncompleteAssignment";
    case ErrorKind::ZeroEvidenceProbability: return "ZeroEvidenceProbability";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::UnparseableValue: return "UnparseableValue";
    case ErrorKind::NonNumericColumn: return "NonNumericColumn";
    case ErrorKind::StateMismatch: return "StateMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::OverfullRow: return "OverfullRow";
    case ErrorKind::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorKind::ZeroCoefficientConstraint: return "ZeroCoefficientConstraint";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fairbn
