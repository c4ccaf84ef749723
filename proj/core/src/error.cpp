#include "meritcurve/error.hpp"

namespace meritcurve {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::Io: return "Io";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::MonotonicityViolation: return "MonotonicityViolation";
    case Errc::EmptyHour: return "EmptyHour";
    case Errc::NonHourlySeries: return "NonHourlySeries";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::EmptyPlateau: return "EmptyPlateau";
    case Errc::ZeroNormalizer: return "ZeroNormalizer";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::MisalignedSeries: return "MisalignedSeries";
    case Errc::ConstantSeries: return "ConstantSeries";
    case Errc::MissingFeature: return "MissingFeature";
    case Errc::MissingHour: return "MissingHour";
    case Errc::DuplicateHour: return "DuplicateHour";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NoArrivals: return "NoArrivals";
    case Errc::ZeroIntensityOnArrival: return "ZeroIntensityOnArrival";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NotDecreasing: return "NotDecreasing";
    case Errc::MissingObservation: return "MissingObservation";
    case Errc::FitFailure: return "FitFailure";
    case Errc::AllFailed: return "AllFailed";
    case Errc::ZeroSlopeSum: return "ZeroSlopeSum";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::ZeroDenominatorAtPrice: return "ZeroDenominatorAtPrice";
    case Errc::Format: return "Format";
  }
  return "Unknown";
}

}  // namespace meritcurve
