#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace massimpute {

enum class ErrorKind {
  // input validation
  MissingColumn,
  NonNumericValue,
  NonPositiveWeight,
  EmptyFile,
  UnknownCovariate,
  UnknownLevel,
  ColumnMismatch,
  DimensionMismatch,
  SampleTooLarge,
  StratumExhausted,
  IOFailure,
  InvalidArgument,
  // design / configuration
  MissingJointProbabilities,
  UnsupportedDesign,
  // numerical
  RankDeficient,
  SingularSystem,
  NoConvergence,
  Separation,
  ZeroPropensity,
  BootstrapFailure,
};

enum class ErrorCategory { Usage, Data, Numerical };

std::string_view to_string(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace massimpute
