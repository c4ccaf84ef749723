#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meritcurve {

using Rng = std::mt19937_64;

/// SplitMix64 step; used to derive independent child seeds from a root seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) noexcept;

// ---- text <-> double ---------------------------------------------------------

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) noexcept;
std::string hex64(std::uint64_t v);

// ---- descriptive statistics --------------------------------------------------

double mean(std::span<const double> v);
/// Population variance (divides by n).
double variance(std::span<const double> v);
/// Moment estimators: m3 / m2^{3/2} and m4 / m2^2 - 3 (excess).
double skewness(std::span<const double> v);
double excess_kurtosis(std::span<const double> v);

/// Linear-interpolation percentile on a copy of `v` (NumPy's default rule).
/// `pct` is in [0, 100].
double percentile(std::span<const double> v, double pct);

/// Empirical quantile at level `q` in [0,1] using the same linear rule.
double quantile(std::span<const double> v, double q);

/// Finite-difference derivative matching numpy.gradient(y, x): second-order
/// accurate centred differences in the interior (non-uniform spacing aware),
/// first-order one-sided differences at the two ends.
std::vector<double> gradient(std::span<const double> y, std::span<const double> x);

/// Average ranks (ties share the mean rank), 1-based.
std::vector<double> average_ranks(std::span<const double> v);

// ---- 1-D root finding / optimisation ------------------------------------------

struct RootResult {
  double x = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Bracketed root of f on [lo, hi] (TOMS 748). Requires f(lo) and f(hi) of
/// opposite sign (or zero). Terminates when the bracket is narrower than `xtol`.
RootResult find_root(const std::function<double(double)>& f, double lo, double hi,
                     double xtol, int max_iter = 200);

// ---- multivariate minimisation (GSL backed) ------------------------------------

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex search.
MinimizeResult minimize_simplex(const std::function<double(std::span<const double>)>& f,
                                std::vector<double> x0, std::vector<double> step,
                                int max_iter = 2000, double size_tol = 1e-8);

/// Quasi-Newton (BFGS) minimisation with analytic gradient.
/// `fdf` writes the gradient into its second argument and returns f.
MinimizeResult minimize_bfgs(
    const std::function<double(std::span<const double>, std::span<double>)>& fdf,
    std::vector<double> x0, int max_iter = 500, double grad_tol = 1e-7);

// ---- monotone cubic interpolation -------------------------------------------

/// Fritsch–Carlson / PCHIP interpolant; monotone wherever the data are.
class Pchip {
public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);

  double value(double t) const;
  double derivative(double t) const;
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& slopes() const { return d_; }
  /// Index i with x[i] <= t < x[i+1], clamped to the valid segment range.
  std::size_t segment(double t) const;

private:
  std::vector<double> x_, y_, d_;
};

}  // namespace meritcurve
