#include "mvdwls/error.hpp"

namespace mvdwls {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::ZeroDegreesOfFreedom: return "ZeroDegreesOfFreedom";
    case ErrorCode::SplitTooSmall: return "SplitTooSmall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroRankVariance: return "ZeroRankVariance";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
    case ErrorCode::WeightOverflow: return "WeightOverflow";
    case ErrorCode::AllWeightsEqual: return "AllWeightsEqual";
    case ErrorCode::AssumptionOneViolated: return "AssumptionOneViolated";
    case ErrorCode::ZeroResiduals: return "ZeroResiduals";
    case ErrorCode::NoFeasibleDirection: return "NoFeasibleDirection";
    case ErrorCode::NoRootInInterval: return "NoRootInInterval";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::NonPositiveRegressor: return "NonPositiveRegressor";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorFamily family_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return ErrorFamily::Usage;
    case ErrorCode::FileNotFound:
    case ErrorCode::ParseError:
    case ErrorCode::MissingColumn:
    case ErrorCode::NonNumericCell:
    case ErrorCode::IoError:
      return ErrorFamily::Input;
    case ErrorCode::SingularDesign:
    case ErrorCode::DegenerateSample:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::TooFewObservations:
    case ErrorCode::ZeroDegreesOfFreedom:
    case ErrorCode::SplitTooSmall:
    case ErrorCode::ZeroRankVariance:
      return ErrorFamily::Data;
    default:
      return ErrorFamily::Estimation;
  }
}

}  // namespace mvdwls
