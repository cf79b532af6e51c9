#include "mpvar/error.hpp"

namespace mpvar {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SampleTooSmall: return "SampleTooSmall";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidDf: return "InvalidDf";
    case ErrorKind::InvalidNesting: return "InvalidNesting";
    case ErrorKind::NegativeImprovement: return "NegativeImprovement";
    case ErrorKind::InvalidCorrelation: return "InvalidCorrelation";
    case ErrorKind::NonPositiveTarget: return "NonPositiveTarget";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::LeverageOne: return "LeverageOne";
    case ErrorKind::SingularBasis: return "SingularBasis";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::DegenerateGenerator: return "DegenerateGenerator";
    case ErrorKind::EmptyOutOfBag: return "EmptyOutOfBag";
    case ErrorKind::ModelFitFailed: return "ModelFitFailed";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace mpvar
