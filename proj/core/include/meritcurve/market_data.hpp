#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace meritcurve {

enum class Side { Supply, Demand };

std::string_view to_string(Side side) noexcept;
Side parse_side(std::string_view s);

/// Admissible price range of one market side, EUR/MWh.
struct PriceBounds {
  double lo = -500.0;
  double hi = 3000.0;

  /// Demand [-300, 3000]; supply [-500, 3000].
  static PriceBounds defaults(Side side) noexcept;
  bool contains(double p) const noexcept { return p >= lo && p <= hi; }
  friend bool operator==(const PriceBounds&, const PriceBounds&) = default;
};

using Date = std::chrono::year_month_day;

std::string format_date(Date d);
/// Parses YYYY-MM-DD; throws Error(MalformedRow) on anything else.
Date parse_date(std::string_view s);

struct CurvePoint {
  double price = 0.0;   // EUR/MWh
  double volume = 0.0;  // MWh, cumulative
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// One delivery hour's aggregated step curve. Construction validates every
/// invariant; a curve that exists is well formed.
class AggregatedCurve {
public:
  AggregatedCurve(Side side, Date day, int hour, std::vector<CurvePoint> points);
  AggregatedCurve(Side side, Date day, int hour, std::vector<CurvePoint> points, PriceBounds bounds);

  Side side() const noexcept { return side_; }
  Date day() const noexcept { return day_; }
  int hour() const noexcept { return hour_; }
  const PriceBounds& bounds() const noexcept { return bounds_; }
  const std::vector<CurvePoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }

  std::vector<double> prices() const;
  std::vector<double> volumes() const;

  /// Step-function value: volume of the last point with price <= p, or the
  /// first point's volume to the left of the curve.
  double step_value(double p) const;
  /// Piecewise-linear value with constant extrapolation beyond both ends.
  double linear_value(double p) const;

  friend bool operator==(const AggregatedCurve&, const AggregatedCurve&) = default;

private:
  Side side_;
  Date day_;
  int hour_;
  PriceBounds bounds_;
  std::vector<CurvePoint> points_;
};

/// Reads headerless `day,hour,price,volume` rows. One curve per (day, hour),
/// ordered by day then hour; points sorted by price.
std::vector<AggregatedCurve> load_curves(const std::filesystem::path& path, Side side);
std::vector<AggregatedCurve> load_curves(const std::filesystem::path& path, Side side, PriceBounds bounds);
std::vector<AggregatedCurve> read_curves(std::istream& in, Side side, PriceBounds bounds);

void save_curves(const std::filesystem::path& path, const std::vector<AggregatedCurve>& curves);
void write_curves(std::ostream& out, const std::vector<AggregatedCurve>& curves);

/// Daily exogenous features: fuel marginal costs and weather summaries.
struct FeatureVector {
  double coal = 0, oil = 0, gas = 0;              // EUR/MWh
  double at_mean = 0, at_min = 0, at_max = 0;     // K
  double ghi_mean = 0, ghi_max = 0, ghi_min = 0;  // W/m^2
  double ws_mean = 0, ws_min = 0, ws_max = 0;     // km/h

  static constexpr std::size_t kSize = 12;
  static const std::array<std::string_view, kSize>& names();

  std::array<double, kSize> values() const;
  static FeatureVector from_values(const std::array<double, kSize>& v);
  /// Throws InvalidArgument when a value is non-finite or ghi_min < 0.
  void validate() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct DailyFeatures {
  Date day;
  FeatureVector features;
};

/// `day,coal,oil,gas,at_mean,at_min,at_max,ghi_mean,ghi_max,ghi_min,ws_mean,ws_min,ws_max`.
/// An optional header line is accepted on read and always written.
std::vector<DailyFeatures> load_features(const std::filesystem::path& path);
void save_features(const std::filesystem::path& path, const std::vector<DailyFeatures>& rows);

/// One local-clock hourly observation (hour in 0..23).
struct HourlyRecord {
  Date day;
  int hour = 0;
  double value = 0.0;
  friend bool operator==(const HourlyRecord&, const HourlyRecord&) = default;
};

/// Normalises CET/CEST local series to 24 entries per day: the hour skipped on
/// the spring-forward Sunday takes the value of the following hour, and the
/// repeated hour of the fall-back Sunday keeps only its first occurrence.
/// Throws NonHourlySeries for any other irregularity.
std::vector<HourlyRecord> dst_fix(const std::vector<HourlyRecord>& series);

/// True for the last Sunday of March / October respectively.
bool is_spring_forward(Date d);
bool is_fall_back(Date d);

/// Short-run marginal cost P_F * h_F + e_F * tau, EUR/MWh.
double fuel_cost(double fuel_price, double heat_rate, double emission_factor, double co2_price);

namespace fuel {
inline constexpr double kCoalHeatRate = 0.42;
inline constexpr double kOilHeatRate = 1.5;
inline constexpr double kGasHeatRate = 2.4;
inline constexpr double kCoalEmission = 0.986;  // tCO2/MWh
}  // namespace fuel

}  // namespace meritcurve
