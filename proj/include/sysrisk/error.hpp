#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sysrisk {

enum class ErrorCode {
  EmptySpace,
  DuplicateId,
  ZBelowOne,
  DimensionMismatch,
  NotAProbability,
  InvalidArgument,
  InnerLPFailed,
  NonMeasurablePrices,
  InvalidFiltration,
  NumericalBreakdown,
  MissingGamma,
  DualExtractionFailed,
  NotASpan,
  BudgetExceeded,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; the code drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sysrisk
