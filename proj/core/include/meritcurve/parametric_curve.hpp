#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "meritcurve/market_data.hpp"

namespace meritcurve {

/// Eight-parameter codec output: two plateaus plus a cubic Chebyshev segment
/// on the elastic window [p_start, p_end].
struct ParametricCurve {
  Side side = Side::Demand;
  double U = 0.0;  // low-price plateau
  double L = 0.0;  // high-price plateau
  double p_start = 0.0;
  double p_end = 1.0;
  std::array<double, 4> coef{};
  /// Set when the window held fewer than five grid points and a line was fitted.
  bool linear_fallback = false;

  static constexpr std::size_t kParams = 8;
  /// Parameter order used for forecasting targets and serialisation.
  static const std::array<std::string_view, kParams>& param_names();
  std::array<double, kParams> params() const;
  static ParametricCurve from_params(Side side, const std::array<double, kParams>& v);

  /// Throws InvalidArgument if the side/plateau/window invariants fail.
  void validate() const;

  friend bool operator==(const ParametricCurve&, const ParametricCurve&) = default;
};

/// Uniform price grid with `values` sampled on it.
struct DenseCurve {
  std::vector<double> grid;
  std::vector<double> values;
};

inline constexpr std::size_t kMinDenseSize = 200;
inline constexpr double kDefaultGridStep = 5.0;

/// n equally spaced prices from bounds.lo to bounds.hi inclusive.
std::vector<double> uniform_grid(PriceBounds bounds, std::size_t n);
/// Grid size giving `step` EUR spacing over the bounds (at least kMinDenseSize).
std::size_t grid_size_for_step(PriceBounds bounds, double step);

/// Linear interpolation of the curve's points on `n` uniform prices spanning its
/// side bounds, constant beyond the first/last point.
DenseCurve interpolate_uniform(const AggregatedCurve& curve, std::size_t n);

struct ElasticWindow {
  double p_start = 0.0;
  double p_end = 0.0;
};

/// Elastic window: first and last x whose |dy/dx| exceeds the pct-percentile
/// of all |dy/dx|; (min x, max x) when no slope qualifies.
ElasticWindow detect_elastic(std::span<const double> x, std::span<const double> y, double pct = 90.0);

struct Plateaus {
  double U = 0.0;
  double L = 0.0;
};

/// U = mean of values at prices <= p_start, L = mean at prices >= p_end.
Plateaus extract_plateaus(const DenseCurve& dense, double p_start, double p_end);

struct FitOptions {
  double pct = 90.0;
  /// Dense grid size; 0 selects kDefaultGridStep spacing over the side bounds.
  std::size_t grid_size = 0;
};

ParametricCurve fit_parametric(const AggregatedCurve& curve, const FitOptions& opts = {});
/// Same as above on an already densified curve.
ParametricCurve fit_parametric(const DenseCurve& dense, Side side, const FitOptions& opts = {});

/// Chebyshev series c0 T0 + ... + c3 T3 at t in [-1, 1].
double chebyshev_value(const std::array<double, 4>& coef, double t) noexcept;

/// Plateaus outside the window, cubic inside, then a running minimum (demand)
/// or maximum (supply) over the assembled vector.
std::vector<double> reconstruct(const ParametricCurve& pc, std::span<const double> grid);

/// Mean absolute error normalised by (U + L) / 2.
double nmae(std::span<const double> real, std::span<const double> approx, double U, double L);
double mase(double model_mae, double naive_mae);

/// Codec error of `pc` against the curve densified on the same grid.
double fit_nmae(const ParametricCurve& pc, const DenseCurve& dense);

struct ParametricRecord {
  Date day;
  int hour = 1;
  ParametricCurve curve;
};

/// Rows `day,hour,side,U,L,p_start,p_end,coef_0,coef_1,coef_2,coef_3`.
std::vector<ParametricRecord> load_parametric(const std::filesystem::path& path);
void save_parametric(const std::filesystem::path& path, const std::vector<ParametricRecord>& rows);

}  // namespace meritcurve
