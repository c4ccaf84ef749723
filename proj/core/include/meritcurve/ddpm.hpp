#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <vector>

#include "meritcurve/market_data.hpp"
#include "meritcurve/numerics.hpp"
#include "meritcurve/point_process.hpp"

namespace meritcurve {

/// Linear variance schedule over K diffusion steps. Step k (1-based) has
/// diffusion time t = k / K, variance beta[k-1] and b[k-1] = prod (1 - beta).
struct NoiseSchedule {
  int K = 0;
  std::vector<double> beta, b;
  double alpha = 1.0 / 3.0;  // sampler noise scale

  /// Step index for a diffusion time t in (0, 1].
  int step(double t) const;
};

/// Throws InvalidRange unless 0 < beta1 < beta2 < 1 and K >= 2; alpha must be >= 0.
NoiseSchedule make_schedule(int K = 501, double beta1 = 1e-4, double beta2 = 0.02, double alpha = 1.0 / 3.0);

/// sqrt(b(t)) x + sqrt(1 - b(t)) z.
std::vector<double> forward_noise(std::span<const double> x, double t, std::span<const double> z,
                                  const NoiseSchedule& sched);
/// Inverts forward_noise given the noise that was used.
std::vector<double> denoise_with(std::span<const double> xt, double t, std::span<const double> z,
                                 const NoiseSchedule& sched);

/// Per-dimension affine standardisation. Constant columns get unit scale.
struct Standardizer {
  Eigen::VectorXd mean, scale;

  static Standardizer fit(const Eigen::MatrixXd& cols);  // one sample per column
  Eigen::MatrixXd apply(const Eigen::MatrixXd& cols) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& cols) const;
};

struct DenseLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd bias;
};

/// Fully connected noise predictor: input (x', label, t), SiLU hidden layers,
/// linear output of the data dimension. Inputs and outputs are in
/// standardised units; the standardisers travel with the weights.
class DenoiserNet {
public:
  DenoiserNet() = default;
  DenoiserNet(int data_dim, int label_dim, const std::vector<int>& hidden, std::uint64_t seed);

  int data_dim() const noexcept { return data_dim_; }
  int label_dim() const noexcept { return label_dim_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  Standardizer& x_scaler() noexcept { return x_scaler_; }
  const Standardizer& x_scaler() const noexcept { return x_scaler_; }
  Standardizer& label_scaler() noexcept { return label_scaler_; }
  const Standardizer& label_scaler() const noexcept { return label_scaler_; }

  /// Predicted noise, one column per sample; all arguments standardised.
  Eigen::MatrixXd predict(const Eigen::MatrixXd& xt, const Eigen::MatrixXd& labels, const Eigen::VectorXd& t) const;

  friend bool operator==(const DenoiserNet& a, const DenoiserNet& b);

private:
  int data_dim_ = 0, label_dim_ = 0;
  std::vector<DenseLayer> layers_;
  Standardizer x_scaler_, label_scaler_;
};

struct DdpmTrainConfig {
  int epochs = 500;
  int batch = 256;
  std::vector<int> hidden{128, 128, 128};
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

struct DdpmTrainResult {
  DenoiserNet net;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

/// x: data, one sample per row; labels: one row per sample (may have zero
/// columns). Throws NonFiniteLoss when a batch loss is not finite.
DdpmTrainResult train_denoiser(const Eigen::MatrixXd& x, const Eigen::MatrixXd& labels, const NoiseSchedule& sched,
                               const DdpmTrainConfig& cfg);

/// Reverse-time sampling: starts from N(0, I) at step K and walks down to
/// step 1, adding sqrt(alpha beta) noise after every update. Returns one
/// de-standardised sample per label row.
Eigen::MatrixXd sample_ddpm(const DenoiserNet& net, const Eigen::MatrixXd& labels, const NoiseSchedule& sched, Rng& rng);
std::vector<double> sample_ddpm(const DenoiserNet& net, std::span<const double> label, const NoiseSchedule& sched,
                                Rng& rng);

/// Versioned little-endian binary format; throws Format on a bad header.
void save_denoiser(const std::filesystem::path& path, const DenoiserNet& net);
DenoiserNet load_denoiser(const std::filesystem::path& path);

enum class SizeClass { Low, High };

/// Row classification threshold: 200 MWh supply, 450 MWh demand.
double size_threshold(Side side) noexcept;
/// High when any |mark| in the row exceeds the side's threshold.
SizeClass size_class(std::span<const double> row, Side side) noexcept;

struct ZeroMaskConfig {
  Side side = Side::Supply;
  SizeClass size_class = SizeClass::Low;

  /// Fake-zero mean and standard deviation: (-50, 5) / (-250, 25) for supply
  /// low / high, sign flipped for demand.
  double mean() const noexcept;
  double sd() const noexcept;
};

/// Replaces exact zeros with fake-zero draws; other entries are untouched.
std::vector<double> randomize_zeros(std::span<const double> row, const ZeroMaskConfig& cfg, Rng& rng);
/// Supply: negatives become 0. Demand: positives become 0.
std::vector<double> truncate_marks(std::span<const double> row, Side side);

/// Empirical P(high class) per normalised-price bin.
struct SizeClassModel {
  std::vector<double> p_high;  // one per bin over (0, 1]

  static SizeClassModel fit(const std::vector<DailyOrderBook>& books, int bins = 20);
  double probability(double u) const;
};

struct GeneratorNets {
  DenoiserNet intensity;   // data: node values; label: daily features
  DenoiserNet marks_low;   // data: 24 marks; label: (features, normalised price)
  DenoiserNet marks_high;
};

struct GeneratedDay {
  std::vector<AggregatedCurve> curves;
  PiecewiseLinearIntensity lambda;
  std::vector<double> arrivals;  // normalised
  bool empty = false;
};

/// Stage 1 intensity surrogate (clipped at 0), thinning, per-arrival size
/// class, stage 2 marks, truncation and cumulation from the anchor.
GeneratedDay generate_day(Side side, Date day, std::span<const double> intensity_label,
                          std::span<const double> marks_label, const HourVector& anchor, const GeneratorNets& nets,
                          const SizeClassModel& classes, const NoiseSchedule& sched, Rng& rng,
                          const std::vector<double>& nodes = PiecewiseLinearIntensity::default_nodes());

struct GeneratorTrainConfig {
  DdpmTrainConfig intensity{.epochs = 2000, .batch = 64, .hidden = {128, 128, 128}, .lr = 1e-3, .seed = 1};
  DdpmTrainConfig marks{};
  int size_bins = 20;
  std::vector<double> nodes = PiecewiseLinearIntensity::default_nodes();
};

struct GeneratorTraining {
  GeneratorNets nets;
  SizeClassModel classes;
  std::vector<IntensityFit> intensities;  // one per book
  std::vector<double> intensity_loss, low_loss, high_loss;
  std::size_t low_rows = 0, high_rows = 0;
};

/// Fits one intensity per book, then trains the intensity net on (node
/// values | day label) and one marks net per size class on
/// (fake-zero marks | day label, normalised price). `labels` holds one row per
/// book. A size class without rows keeps an untrained net; the class model
/// then never selects it.
GeneratorTraining train_generator(const std::vector<DailyOrderBook>& books,
                                  const std::vector<std::vector<double>>& labels, const NoiseSchedule& sched,
                                  const GeneratorTrainConfig& cfg);

/// Cumulates a marks sequence from the anchor into 24 curves (sorted prices).
/// Demand volumes are floored at zero.
std::vector<AggregatedCurve> cumulate_marks(Side side, Date day, const HourVector& anchor,
                                            const std::vector<double>& prices, const std::vector<HourVector>& marks);

}  // namespace meritcurve
