#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "meritcurve/features.hpp"
#include "meritcurve/quantile_gbt.hpp"

namespace meritcurve {

struct ForecastConfig {
  Side side = Side::Demand;
  /// Trailing days held out for evaluation.
  int test_days = 30;
  int max_lag = 14;
  double screen_threshold = 0.05;
  FitOptions fit;
  /// Per-target hyperparameters, in ParametricCurve::param_names() order.
  std::array<GbtHyperparams, ParametricCurve::kParams> hp;
  std::uint64_t seed = 0;

  /// Tabulated presets for the side.
  static ForecastConfig defaults(Side side);
};

struct ForecastResult {
  CurveModels models;
  std::vector<std::string> feature_names;
  /// Screened columns per target (indices into feature_names).
  std::array<std::vector<std::size_t>, ParametricCurve::kParams> selected;
  std::vector<ParametricRecord> predicted;
  std::vector<ParametricRecord> naive;
  std::vector<ParametricRecord> actual;
  /// Per test row MAE (MWh) of the reconstructed curve against the observed
  /// curve on the fit grid.
  std::vector<double> model_mae;
  std::vector<double> naive_mae;
  double mase = 0.0;
  std::array<double, 24> mase_by_hour{};
};

/// Fits every curve, builds lagged features, screens them on the training
/// part, trains one model per parameter and scores the held-out tail against
/// the previous-day benchmark.
ForecastResult run_forecast(const std::vector<AggregatedCurve>& curves, const std::vector<DailyFeatures>& daily,
                            const CalendarConfig& calendar, const ForecastConfig& cfg);

}  // namespace meritcurve
