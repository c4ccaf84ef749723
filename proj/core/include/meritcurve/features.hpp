#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "meritcurve/data_matrix.hpp"
#include "meritcurve/market_data.hpp"
#include "meritcurve/parametric_curve.hpp"

namespace meritcurve {

/// Order-level summary of one hour's curve (the "point cloud").
struct CurveStats {
  double skewness = 0.0;
  double kurtosis = 0.0;
  double largest_order = 0.0;
  double count_before_start = 0.0;
  double count_after_end = 0.0;
  double count = 0.0;
};

/// Orders are the volume increments between consecutive points; moments use
/// the standard estimators and collapse to 0 for fewer than two orders or
/// zero spread.
CurveStats curve_stats(const AggregatedCurve& curve, const ParametricCurve& fit);

struct CalendarConfig {
  std::vector<Date> holidays;
  std::vector<Date> school_holidays;
  std::vector<Date> special_events;
};

/// One hour of optional external inputs (e.g. demand forecast, previous-day price).
struct ExternalRecord {
  Date day;
  int hour = 1;
  std::vector<double> values;
};

struct FeatureInputs {
  /// Fitted parameters, day-major with all 24 hours per day, consecutive days.
  std::vector<ParametricRecord> params;
  /// Order statistics aligned with `params` (may be empty).
  std::vector<CurveStats> stats;
  /// Daily fuel/weather features; must cover every target day when non-empty.
  std::vector<DailyFeatures> daily;
  /// Hourly external columns; must cover every target hour when non-empty.
  std::vector<std::string> external_names;
  std::vector<ExternalRecord> external;
  CalendarConfig calendar;
  int max_lag = 14;
};

struct FeatureTable {
  DataMatrix X;
  /// The eight parameters of each row's own hour (forecast targets).
  std::vector<std::array<double, ParametricCurve::kParams>> targets;
  /// Same-hour parameters one day earlier (naive benchmark).
  std::vector<std::array<double, ParametricCurve::kParams>> naive;
  std::vector<Date> days;
  std::vector<int> hours;
};

/// One row per (day, hour) once `max_lag` days of history exist. Everything
/// derived from curves is lagged by at least one day; daily weather and fuel
/// values enter for the target day itself (as forecasts would).
FeatureTable build_features(const FeatureInputs& in);

/// x[i+1] - x[i].
std::vector<double> first_difference(std::span<const double> x);

/// Spearman rank correlation; throws ConstantSeries if either input is constant.
double spearman(std::span<const double> a, std::span<const double> b);

struct ScreenResult {
  std::vector<std::size_t> selected;
  std::vector<double> rho;              // per input column; 0 for constant ones
  std::vector<std::size_t> constant;    // dropped because ranks were undefined
};

/// Keeps columns whose Spearman correlation with the target has |rho| >= threshold.
/// Inputs are expected to be already differenced.
ScreenResult spearman_screen(const std::vector<std::vector<double>>& columns, std::span<const double> target,
                             double threshold = 0.05);

}  // namespace meritcurve
