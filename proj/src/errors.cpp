#include "massimpute/errors.hpp"

namespace massimpute {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::NonNumericValue: return "NonNumericValue";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::UnknownCovariate: return "UnknownCovariate";
    case ErrorKind::UnknownLevel: return "UnknownLevel";
    case ErrorKind::ColumnMismatch: return "ColumnMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SampleTooLarge: return "SampleTooLarge";
    case ErrorKind::StratumExhausted: return "StratumExhausted";
    case ErrorKind::IOFailure: return "IOFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingJointProbabilities: return "MissingJointProbabilities";
    case ErrorKind::UnsupportedDesign: return "UnsupportedDesign";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Separation: return "Separation";
    case ErrorKind::ZeroPropensity: return "ZeroPropensity";
    case ErrorKind::BootstrapFailure: return "BootstrapFailure";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingJointProbabilities:
    case ErrorKind::UnsupportedDesign:
      return ErrorCategory::Usage;
    case ErrorKind::RankDeficient:
    case ErrorKind::SingularSystem:
    case ErrorKind::NoConvergence:
    case ErrorKind::Separation:
    case ErrorKind::ZeroPropensity:
    case ErrorKind::BootstrapFailure:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace massimpute
