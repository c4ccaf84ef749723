#pragma once

// Independent reference computations used as test oracles. Nothing here calls
// into the library's numerics so a shared bug cannot hide on both sides.

#include <utility>
#include <vector>

namespace oracle {

/// Second-order finite-difference slopes, one-sided at the ends.
std::vector<double> slopes(const std::vector<double>& x, const std::vector<double>& y);

/// Percentile by sorting and linear interpolation between order statistics.
double percentile(std::vector<double> v, double pct);

/// Brute-force elastic window: scans all slopes against the percentile threshold.
std::pair<double, double> elastic_window(const std::vector<double>& x, const std::vector<double>& y, double pct);

/// W2 between equal-size 1-D samples via the sorted (monotone) coupling.
double w2_sorted_1d(std::vector<double> a, std::vector<double> b);

/// Pinball loss mean of residuals y - q at level alpha.
double pinball(const std::vector<double>& y, const std::vector<double>& q, double alpha);

}  // namespace oracle
