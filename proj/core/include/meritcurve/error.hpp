#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace meritcurve {

enum class Errc {
  Io,
  InvalidArgument,
  InvalidConfig,
  MalformedRow,
  MonotonicityViolation,
  EmptyHour,
  NonHourlySeries,
  NegativeInput,
  TooFewPoints,
  EmptyPlateau,
  ZeroNormalizer,
  ZeroDenominator,
  MisalignedSeries,
  ConstantSeries,
  MissingFeature,
  MissingHour,
  DuplicateHour,
  OutOfRange,
  NoArrivals,
  ZeroIntensityOnArrival,
  InvalidRange,
  DimMismatch,
  NonFiniteLoss,
  NotDecreasing,
  MissingObservation,
  FitFailure,
  AllFailed,
  ZeroSlopeSum,
  BudgetExceeded,
  DegenerateVariance,
  ZeroDenominatorAtPrice,
  Format,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

}  // namespace meritcurve
