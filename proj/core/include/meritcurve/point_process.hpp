#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "meritcurve/market_data.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

using HourVector = std::array<double, 24>;

/// A day's 24 hourly curves as a marked point process: arrival prices on the
/// union grid, each carrying the 24 hourly volume increments at that price.
struct DailyOrderBook {
  Side side = Side::Supply;
  Date day{};
  PriceBounds bounds;
  std::vector<double> prices;  // strictly increasing, all > bounds.lo
  std::vector<HourVector> marks;
  HourVector anchor{};         // hourly volumes at bounds.lo

  /// Throws InvalidArgument if ordering, sign or non-empty-row invariants fail.
  void validate() const;
  friend bool operator==(const DailyOrderBook&, const DailyOrderBook&) = default;
};

/// Encodes 24 curves (hours 1..24, same day and side). Each hour is read as a
/// step function; an hour's anchor is its volume at bounds.lo (the first
/// point's volume when the curve starts later). Rows with no non-zero
/// increment are dropped. Increments are chosen so that the decoder's
/// running sum reproduces each volume bit for bit. Plain differences already
/// do so whenever consecutive volumes are within a factor of two; otherwise
/// the increment is nudged by a few ulps.
DailyOrderBook encode_orderbook(const std::vector<AggregatedCurve>& curves);

/// Per hour: the anchor at bounds.lo followed by the running sum at every
/// price where that hour's increment is non-zero.
std::vector<AggregatedCurve> decode_orderbook(const DailyOrderBook& book);

/// Drops points that repeat the previous volume and prepends the bounds.lo
/// anchor, i.e. the form decode_orderbook(encode_orderbook(.)) produces.
AggregatedCurve canonical_curve(const AggregatedCurve& curve);

inline constexpr double kNormLo = -500.0;
inline constexpr double kNormHi = 3000.0;
/// (p + 500) / 3500 for p in (-500, 3000]; throws OutOfRange otherwise.
double normalize_price(double p);
double denormalize_price(double u);
std::vector<double> normalized_arrivals(const DailyOrderBook& book);

/// Non-negative piecewise-linear intensity on (0, 1], constant between 0 and
/// the first node.
class PiecewiseLinearIntensity {
public:
  PiecewiseLinearIntensity();  // default node layout, zero values
  PiecewiseLinearIntensity(std::vector<double> nodes, std::vector<double> values);

  /// 5 nodes in (0, 0.1), 20 on [0.1, 0.3], 5 in (0.3, 1] ending at 1.
  static std::vector<double> default_nodes();

  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator()(double u) const;
  /// Integral of the intensity over [0, u].
  double compensator(double u) const;
  double total() const { return compensator(1.0); }
  double max_value() const;
  /// Integral of node j's basis function over (0, 1].
  double basis_integral(std::size_t j) const;
  /// Basis weights at u: at most two non-zero entries (index, weight).
  std::array<std::pair<std::size_t, double>, 2> basis(double u) const;

private:
  std::vector<double> nodes_, values_;
};

struct IntensityFit {
  PiecewiseLinearIntensity lambda;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Log-likelihood sum log lambda(u_m) - integral of lambda.
double intensity_log_likelihood(const PiecewiseLinearIntensity& lambda, std::span<const double> arrivals);

/// Maximum-likelihood node values (log-parametrised, quasi-Newton), started
/// from the constant intensity equal to the arrival count. The returned fit
/// is never worse than that constant.
IntensityFit fit_intensity(std::span<const double> arrivals,
                           const std::vector<double>& nodes = PiecewiseLinearIntensity::default_nodes(),
                           int max_iter = 500);

struct RescalingDiagnostic {
  std::vector<double> scores;  // 1 - exp(-compensator gap), one per arrival
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
};

RescalingDiagnostic rescaling_diag(std::span<const double> arrivals, const PiecewiseLinearIntensity& lambda);

/// One-sample Kolmogorov-Smirnov statistic against U[0, 1] and its asymptotic
/// p-value with the usual finite-n correction.
std::pair<double, double> ks_uniform(std::vector<double> sample);

/// Lewis-Shedler thinning under the dominating rate max_value(). Sorted output in (0, 1].
std::vector<double> thin_sample(const PiecewiseLinearIntensity& lambda, Rng& rng);

/// Rows `day,side,m,price,ds_1..ds_24`; m = 0 carries the anchor at bounds.lo.
void save_orderbooks(const std::filesystem::path& path, const std::vector<DailyOrderBook>& books);
std::vector<DailyOrderBook> load_orderbooks(const std::filesystem::path& path);

/// Rows `node_u,value`.
void save_intensity(const std::filesystem::path& path, const PiecewiseLinearIntensity& lambda);
PiecewiseLinearIntensity load_intensity(const std::filesystem::path& path);

}  // namespace meritcurve
