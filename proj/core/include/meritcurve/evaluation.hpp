#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "meritcurve/market_data.hpp"

namespace meritcurve {

/// Uniformly weighted points, one per row.
struct PointCloud {
  Eigen::MatrixXd points;
  std::vector<std::string> labels;  // optional dimension names

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index dim() const noexcept { return points.cols(); }
  /// Throws InvalidArgument when empty or not finite.
  void validate() const;
};

struct TransportPlan {
  double cost = 0.0;  // sum of plan(i, j) * |a_i - b_j|^2
  long pivots = 0;
  std::vector<std::tuple<int, int, double>> plan;  // non-zero entries (i, j, mass)
};

/// Exact optimal transport between uniform measures on the rows of `a` and
/// `b` with squared Euclidean cost, by network simplex. Throws
/// BudgetExceeded when rows(a) * rows(b) > budget.
TransportPlan optimal_transport(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t budget);

struct W2Options {
  std::size_t budget = 250000;  // exact-solver limit on n * m
  bool standardize = false;     // scale each dimension to unit pooled variance first
};

double wasserstein2(const PointCloud& a, const PointCloud& b, const W2Options& opts = {});

/// Per-price summary of squared relative errors of J sampled curves against
/// one reference on a price grid.
struct NormalizedMse {
  std::vector<double> grid;       // prices kept
  std::vector<double> value;      // mean over samples of ((S - S_j) / S)^2
  std::vector<double> excluded;   // grid prices where the reference is zero
  double mean = 0.0, max = 0.0;
};

/// Integer grid from lo to hi with the given step.
std::vector<double> price_grid(double lo = -500.0, double hi = 3000.0, double step = 1.0);

/// Step-function evaluation of all curves on the grid. Throws
/// ZeroDenominatorAtPrice only when every grid price is excluded.
NormalizedMse normalized_mse(const AggregatedCurve& real, const std::vector<AggregatedCurve>& samples,
                             const std::vector<double>& grid = price_grid());

/// Scott's-rule bandwidth per dimension: sd * n^(-1 / (d + 4)).
Eigen::VectorXd scott_bandwidth(const PointCloud& pts);
/// Product-Gaussian KDE at each row of `at`. Throws DegenerateVariance when
/// a dimension has zero variance or n < 2.
std::vector<double> gaussian_kde(const PointCloud& pts, const Eigen::MatrixXd& at);

/// Splits a (price, volume, ...) cloud by the fast model's elastic window:
/// rows with price below p_start, inside [p_start, p_end], and above p_end.
struct PartitionedCloud {
  PointCloud below, elastic, above;
  double p_start = 0.0, p_end = 0.0;
};
PartitionedCloud partition_by_window(const PointCloud& cloud, double p_start, double p_end, int price_column = 0);

struct PartitionedW2 {
  double p_start = 0.0, p_end = 0.0;
  double below = 0.0, elastic = 0.0, above = 0.0;  // NaN when a part is empty in either cloud
};
PartitionedW2 wasserstein2_partitioned(const PointCloud& a, const PointCloud& b, double p_start, double p_end,
                                       const W2Options& opts = {}, int price_column = 0);

void save_normalized_mse(const std::filesystem::path& path, const NormalizedMse& m);

}  // namespace meritcurve
