#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "meritcurve/market_data.hpp"
#include "meritcurve/parametric_curve.hpp"

namespace meritcurve {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double lerp(double u) const noexcept { return lo + (hi - lo) * u; }
};

/// Synthetic market generator. Every hourly curve is U on the low-price side,
/// L on the high-price side and a monotone cubic in between; the daily
/// parameters follow a persistent latent state that also drives the features.
struct SynthConfig {
  Side side = Side::Demand;
  int days = 30;
  Date start{std::chrono::year(2020), std::chrono::January, std::chrono::day(1)};
  std::optional<PriceBounds> bounds;  // side default when empty

  Range U{20000.0, 40000.0};
  Range L{2000.0, 10000.0};
  Range window_start{-50.0, 150.0};  // EUR, snapped to the price step
  Range window_width{60.0, 250.0};
  double price_step = kDefaultGridStep;
  /// Upper limit of the smooth-step weight in the cubic (0 gives a straight ramp).
  double max_shape_weight = 0.8;
  /// Plateau points are emitted every `plateau_stride` price steps.
  int plateau_stride = 40;
  /// Step-noise standard deviation as a fraction of |U - L|.
  double noise = 0.0;
  /// AR(1) coefficient of the daily latent state.
  double persistence = 0.8;
  /// Weight of the idiosyncratic per-hour component in each parameter score.
  double idiosyncratic = 0.6;
  std::uint64_t seed = 1;

  static SynthConfig defaults(Side side);
  PriceBounds price_bounds() const { return bounds.value_or(PriceBounds::defaults(side)); }
  /// Throws InvalidConfig.
  void validate() const;
};

struct SynthData {
  std::vector<AggregatedCurve> curves;   // day-major, 24 per day
  std::vector<ParametricCurve> truth;    // aligned with curves
  std::vector<DailyFeatures> features;   // one per day
};

SynthData synth_dataset(const SynthConfig& cfg);
std::vector<AggregatedCurve> synth_curves(const SynthConfig& cfg);

/// Member of the generator family: the cubic U + (L - U) * shape(s) on
/// s in [0, 1], with shape(s) = (1 - w) s + w (3 s^2 - 2 s^3) + z s (1 - s)(1 - 2 s),
/// expressed as Chebyshev coefficients on [p_start, p_end]. Strictly monotone
/// for w in [0, 1) and |z| <= (1 - w) / 2.
ParametricCurve family_curve(Side side, double U, double L, double p_start, double p_end, double w,
                             double z);

}  // namespace meritcurve
