#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpvar {

enum class ErrorKind {
  // data contract
  LengthMismatch,
  NonFinite,
  SampleTooSmall,
  DegenerateSample,
  DegenerateCorrelation,
  InvalidArgument,
  InvalidDf,
  InvalidNesting,
  NegativeImprovement,
  InvalidCorrelation,
  NonPositiveTarget,
  UnknownColumn,
  DimensionMismatch,
  EmptyFeatureSet,
  // numerical / model failures
  SingularDesign,
  LeverageOne,
  SingularBasis,
  NonFiniteLoss,
  DegenerateGenerator,
  EmptyOutOfBag,
  ModelFitFailed,
  // environment
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mpvar
