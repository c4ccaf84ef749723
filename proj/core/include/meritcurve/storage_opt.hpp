#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meritcurve/market_data.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

// ---- forecast-error distributions ---------------------------------------------

enum class ErrorFamily { Gaussian, StudentT, Laplace, GenNormal, SkewNormal, Cauchy };

inline constexpr std::array<ErrorFamily, 6> kAllErrorFamilies{ErrorFamily::Gaussian,   ErrorFamily::StudentT,
                                                              ErrorFamily::Laplace,    ErrorFamily::GenNormal,
                                                              ErrorFamily::SkewNormal, ErrorFamily::Cauchy};

std::string_view to_string(ErrorFamily f) noexcept;
ErrorFamily parse_error_family(std::string_view s);

/// Parameters by family:
///   Gaussian (mu, sigma), StudentT (mu, sigma, nu), Laplace (mu, b),
///   GenNormal (mu, alpha, beta), SkewNormal (loc, scale, shape), Cauchy (x0, gamma).
struct ErrorModel {
  int hour = 0;
  ErrorFamily family = ErrorFamily::Gaussian;
  std::vector<double> params;
  double log_likelihood = 0.0;
  double bic = 0.0;

  static ErrorModel make(ErrorFamily family, std::vector<double> params, int hour = 0);

  /// Throws InvalidArgument on a wrong parameter count or non-positive scale/shape.
  void validate() const;
  double log_pdf(double x) const;
  double sample(Rng& rng) const;
  static int parameter_count(ErrorFamily f) noexcept;
};

/// Maximum-likelihood fit of one family. Throws FitFailure.
ErrorModel fit_family(std::span<const double> samples, ErrorFamily family);

struct ErrorFit {
  ErrorModel best;
  std::vector<ErrorModel> candidates;  // every family that fitted, BIC ascending
  std::vector<std::string> failures;   // "family: reason"
};

/// Fits every family and keeps the smallest BIC = k ln n - 2 log L. Needs at
/// least 30 samples; throws AllFailed when no family fits.
ErrorFit fit_error_model(std::span<const double> samples,
                         std::span<const ErrorFamily> families = kAllErrorFamilies, int hour = 0);

// ---- residual demand -----------------------------------------------------------

/// Strictly decreasing C1 map P -> D(P) - S(P) with derivative and inverse.
class GammaFunction {
public:
  /// Gamma(P) = a - b P on the whole real line; b > 0.
  static GammaFunction linear(double a, double b);
  /// Monotone cubic through non-increasing (price, gamma) data, minus
  /// eps (P - p_0) so that the result is strictly decreasing.
  static GammaFunction from_points(std::vector<double> prices, std::vector<double> values, double eps = 1e-6);
  /// D - S evaluated as step functions on the merged price grid.
  static GammaFunction from_curves(const AggregatedCurve& demand, const AggregatedCurve& supply, double eps = 1e-6);

  double operator()(double p) const;
  double derivative(double p) const;
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  struct Inverse {
    double price = 0.0;
    bool clamped = false;  // y outside the attained range; price is the range end
  };
  Inverse inverse(double y) const;

private:
  bool linear_ = false;
  double a_ = 0.0, b_ = 0.0, eps_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
  Pchip pchip_;
};

struct PriceObservation {
  Date day{};
  int hour = 0;
  double price = 0.0;
};

struct XSample {
  Date day{};
  int hour = 0;
  double x = 0.0;
};

/// X = D_pred(P_obs) - S_pred(P_obs), curves read piecewise-linearly. One
/// sample per observation; throws MissingObservation when a prediction for
/// an observed (day, hour) is absent.
std::vector<XSample> calibrate_x(const std::vector<AggregatedCurve>& pred_demand,
                                 const std::vector<AggregatedCurve>& pred_supply,
                                 const std::vector<PriceObservation>& observed);

// ---- two-hour block policy -------------------------------------------------------

struct Clearing {
  double p1 = 0.0, p2 = 0.0;
  bool clamped = false;
};

/// P1 = Gamma1^-1(x1 - q), P2 = Gamma2^-1(x2 + q): withdrawal at hour 1,
/// injection at hour 2.
Clearing clear_market(const GammaFunction& g1, const GammaFunction& g2, double x1, double x2, double q);

/// q (P2(q) - P1(q)).
double block_revenue(const GammaFunction& g1, const GammaFunction& g2, double x1, double x2, double q);

enum class Regime { Lower, Interior, Upper };
std::string_view to_string(Regime r) noexcept;

struct OptimalQ {
  double q = 0.0;
  Regime regime = Regime::Lower;
  double revenue = 0.0;
  bool fallback = false;  // root bracketing failed; grid-scan argmax used
};

/// Maximises q (P2 - P1) - marginal_cost q. Lower corner when the zero-impact
/// spread is <= marginal_cost, upper corner when the derivative at q_M is
/// >= 0, otherwise the best interior stationary point (all sign changes of
/// the derivative are examined). `revenue` is the gross q (P2 - P1).
OptimalQ optimal_q(double x1, double x2, const GammaFunction& g1, const GammaFunction& g2, double q_max,
                   double marginal_cost = 0.0);

/// Full capacity whenever the zero-impact spread exceeds marginal_cost.
double naive_q(double x1, double x2, const GammaFunction& g1, const GammaFunction& g2, double q_max,
               double marginal_cost = 0.0);

/// (P1 - P2) / (1 / d2 + 1 / d1) clamped to [0, q_M]; d_i = Gamma_i'(P_i).
/// Throws ZeroSlopeSum when 1/d1 + 1/d2 is 0 or not finite.
double price_form_q(double p1, double p2, double d1, double d2, double q_max);

/// (P2(q) - P1(q)) - (P2(0) - P1(0)).
double spread_impact(double q, const GammaFunction& g1, const GammaFunction& g2, double x1, double x2);

enum class PolicyMode { PriceImpact, Naive };

struct StoragePolicy {
  double q_max = 1000.0;
  PolicyMode mode = PolicyMode::PriceImpact;
  /// Per-MWh cost the operator prices into its decision (e.g. degradation).
  double marginal_cost = 0.0;
};

struct RevenueReport {
  std::vector<double> x1, x2, q, revenue, delta_p1, delta_p2, delta_spread;
  std::vector<Regime> regime;
  double mean = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0;
  double mean_throughput = 0.0;  // mean q, MWh per day
  std::array<double, 3> shares{};  // lower, interior, upper
  int fallbacks = 0;

  /// FNV-1a over the per-draw results, for reproducibility checks.
  std::uint64_t hash() const;
};

/// Draw i uses Rng(derive_seed(seed, i)) for (x1, x2), so every policy and
/// capacity sees the same scenarios. Parallel across draws; the result does
/// not depend on the thread count.
RevenueReport revenue_mc(const StoragePolicy& policy, const ErrorModel& err1, const ErrorModel& err2,
                         const GammaFunction& g1, const GammaFunction& g2, int n, std::uint64_t seed);

struct CapacityRow {
  double q_max = 0.0;
  double mean_dp1 = 0.0, mean_dp2 = 0.0, mean_dspread = 0.0;
  double mean_revenue = 0.0, mean_throughput = 0.0;
  std::array<double, 3> shares{};
};

/// One price-impact Monte Carlo per capacity, with common random numbers.
/// Pass the degradation cost as marginal_cost to get a value function that
/// is concave in q_M (and hence a monotone payback curve).
std::vector<CapacityRow> capacity_sweep(const std::vector<double>& q_grid, const ErrorModel& err1,
                                        const ErrorModel& err2, const GammaFunction& g1, const GammaFunction& g2,
                                        int n, std::uint64_t seed, double marginal_cost = 0.0);

struct PaybackConfig {
  double delta_q = 100.0;          // MW added
  double capex_per_kwh = 150.0;    // EUR
  double c_deg = 30.0;             // EUR per MWh moved
  double hours_share = 2.0 / 24.0; // share of the daily cost carried by the two hours
};

struct PaybackResult {
  double years = 0.0;   // +inf when the marginal gain is not positive
  double capex = 0.0;   // EUR allocated to the two hours
  double daily_gain = 0.0;
  bool no_gain = false;
};

/// Net daily value is revenue - c_deg * throughput. The added q_M is
/// converted to energy over one hour.
PaybackResult payback(double net_at_q, double net_at_q_plus, const PaybackConfig& cfg = {});
PaybackResult payback(double q_max, const std::function<double(double)>& net_daily_value,
                      const PaybackConfig& cfg = {});
/// Payback for each consecutive pair of a sweep (grid spacing must equal delta_q).
std::vector<PaybackResult> payback_curve(const std::vector<CapacityRow>& rows, const PaybackConfig& cfg = {});

/// q*(x1, x2) on a grid; rows follow x1, columns x2.
std::vector<std::vector<double>> policy_surface(const std::vector<double>& x1_grid, const std::vector<double>& x2_grid,
                                                const GammaFunction& g1, const GammaFunction& g2,
                                                const StoragePolicy& policy);

void save_revenue_report(const std::filesystem::path& csv, const RevenueReport& r);
void save_capacity_sweep(const std::filesystem::path& csv, const std::vector<CapacityRow>& rows,
                         const std::vector<PaybackResult>& payback);
void save_policy_surface(const std::filesystem::path& csv, const std::vector<double>& x1_grid,
                         const std::vector<double>& x2_grid, const std::vector<std::vector<double>>& q);

}  // namespace meritcurve
