#pragma once

#include <array>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meritcurve/data_matrix.hpp"
#include "meritcurve/market_data.hpp"
#include "meritcurve/parametric_curve.hpp"

namespace meritcurve {

enum class GbtObjective { Quantile, Absolute };

struct GbtHyperparams {
  double quantile_alpha = 0.5;
  double learning_rate = 0.03;
  int max_depth = 5;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  double reg_lambda = 1.0;
  double reg_alpha = 0.0;
  double gamma = 0.0;
  int n_rounds = 500;
  /// Rounds without validation improvement before stopping; 0 disables the
  /// validation tail and trains all n_rounds.
  int early_stopping_rounds = 50;
  double validation_fraction = 0.1;
  int max_bins = 256;
  std::uint64_t seed = 0;
  GbtObjective objective = GbtObjective::Quantile;

  /// Tabulated per-target settings for each side; target is one of
  /// ParametricCurve::param_names().
  static GbtHyperparams preset(Side side, std::string_view target);
  /// Throws InvalidConfig.
  void validate() const;

  /// Keys mirror the column names of the tuning tables plus the extras above.
  nlohmann::json to_json() const;
  /// Starts from `base` and overrides present keys; unknown keys are rejected.
  static GbtHyperparams from_json(const nlohmann::json& j, const GbtHyperparams& base);
  static GbtHyperparams from_json(const nlohmann::json& j);
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  /// Rows with x[feature] < threshold go left.
  double predict(std::span<const double> row) const;
  int depth() const;
};

struct GbtModel {
  double base_score = 0.0;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;
  /// Mean training loss after each kept round (index 0 = base score only).
  std::vector<double> train_loss;
  std::vector<double> valid_loss;

  /// Throws MissingFeature if the row is too short or a split feature is NaN.
  double predict(std::span<const double> row) const;
  std::vector<double> predict(const DataMatrix& X) const;

  nlohmann::json to_json() const;
  static GbtModel from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON dump.
  std::uint64_t hash() const;
};

/// Pinball loss max(alpha r, (alpha - 1) r) with r = y - prediction.
double pinball_loss(double y, double pred, double alpha) noexcept;
double mean_pinball(std::span<const double> y, std::span<const double> pred, double alpha);

GbtModel train_gbt(const DataMatrix& X, std::span<const double> y, const GbtHyperparams& hp);

using CurveModels = std::array<GbtModel, ParametricCurve::kParams>;

/// Assembles the eight predictions into a valid curve: swaps an inverted
/// window and widens it by 1 EUR, orders the plateaus for the side and clips
/// negative plateaus at 0.
ParametricCurve forecast_curve(const CurveModels& models, std::span<const double> row, Side side);
ParametricCurve repair_curve(const std::array<double, ParametricCurve::kParams>& raw, Side side);

}  // namespace meritcurve
