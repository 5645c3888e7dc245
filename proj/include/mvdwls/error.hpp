#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mvdwls {

enum class ErrorCode : std::uint8_t {
  // data shape and linear algebra
  SingularDesign,
  DegenerateSample,
  DimensionMismatch,
  NonFiniteInput,
  TooFewObservations,
  ZeroDegreesOfFreedom,
  SplitTooSmall,
  InvalidArgument,
  // rank correlation
  ZeroRankVariance,
  // variance model estimation
  NonPositiveWeight,
  NonPositiveVariance,
  WeightOverflow,
  AllWeightsEqual,
  AssumptionOneViolated,
  ZeroResiduals,
  NoFeasibleDirection,
  NoRootInInterval,
  MaxIterationsExceeded,
  NonPositiveRegressor,
  // input/output
  FileNotFound,
  ParseError,
  MissingColumn,
  NonNumericCell,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

enum class ErrorFamily : std::uint8_t { Usage, Input, Data, Estimation };

ErrorFamily family_of(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above. `index`
/// points at the offending observation/row/column where one exists.
class Error : public std::runtime_error {
 public:
  static constexpr long kNoIndex = -1;

  Error(ErrorCode code, const std::string& what, long index = kNoIndex)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  long index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  long index_;
};

}  // namespace mvdwls
