#include "meritcurve/ddpm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "meritcurve/error.hpp"

namespace meritcurve {

static_assert(std::endian::native == std::endian::little, "binary weight format assumes little-endian hosts");

int NoiseSchedule::step(double t) const {
  if (!(t > 0.0 && t <= 1.0)) throw Error(Errc::InvalidRange, "diffusion time outside (0, 1]");
  const int k = static_cast<int>(std::ceil(t * K - 1e-9));
  return std::clamp(k, 1, K);
}

NoiseSchedule make_schedule(int K, double beta1, double beta2, double alpha) {
  if (K < 2) throw Error(Errc::InvalidRange, "schedule needs K >= 2");
  if (!(beta1 > 0.0 && beta1 < beta2 && beta2 < 1.0)) throw Error(Errc::InvalidRange, "need 0 < beta1 < beta2 < 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(Errc::InvalidRange, "alpha must be finite and >= 0");
  NoiseSchedule s;
  s.K = K;
  s.alpha = alpha;
  s.beta.resize(K);
  s.b.resize(K);
  double prod = 1.0;
  for (int k = 0; k < K; ++k) {
    s.beta[k] = beta1 + (beta2 - beta1) * k / (K - 1);
    prod *= 1.0 - s.beta[k];
    s.b[k] = prod;
  }
  return s;
}

std::vector<double> forward_noise(std::span<const double> x, double t, std::span<const double> z,
                                  const NoiseSchedule& sched) {
  if (x.size() != z.size()) throw Error(Errc::DimMismatch, "data and noise differ in length");
  const double b = sched.b[sched.step(t) - 1];
  const double sa = std::sqrt(b), sn = std::sqrt(1.0 - b);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sa * x[i] + sn * z[i];
  return out;
}

std::vector<double> denoise_with(std::span<const double> xt, double t, std::span<const double> z,
                                 const NoiseSchedule& sched) {
  if (xt.size() != z.size()) throw Error(Errc::DimMismatch, "data and noise differ in length");
  const double b = sched.b[sched.step(t) - 1];
  const double sa = std::sqrt(b), sn = std::sqrt(1.0 - b);
  std::vector<double> out(xt.size());
  for (std::size_t i = 0; i < xt.size(); ++i) out[i] = (xt[i] - sn * z[i]) / sa;
  return out;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& cols) {
  Standardizer s;
  const auto d = cols.rows();
  s.mean = Eigen::VectorXd::Zero(d);
  s.scale = Eigen::VectorXd::Ones(d);
  if (cols.cols() == 0) return s;
  s.mean = cols.rowwise().mean();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double var = (cols.row(i).array() - s.mean(i)).square().mean();
    if (var > 0.0 && std::isfinite(var)) s.scale(i) = std::sqrt(var);
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& cols) const {
  return (cols.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd Standardizer::invert(const Eigen::MatrixXd& cols) const {
  return (cols.array().colwise() * scale.array()).matrix().colwise() + mean;
}

namespace {

Eigen::MatrixXd silu(const Eigen::MatrixXd& z) {
  return z.array() / (1.0 + (-z.array()).exp());
}

Eigen::MatrixXd stack_inputs(const Eigen::MatrixXd& xt, const Eigen::MatrixXd& labels, const Eigen::VectorXd& t) {
  Eigen::MatrixXd in(xt.rows() + labels.rows() + 1, xt.cols());
  in.topRows(xt.rows()) = xt;
  if (labels.rows() > 0) in.middleRows(xt.rows(), labels.rows()) = labels;
  in.bottomRows(1) = t.transpose();
  return in;
}

}  // namespace

DenoiserNet::DenoiserNet(int data_dim, int label_dim, const std::vector<int>& hidden, std::uint64_t seed)
    : data_dim_(data_dim), label_dim_(label_dim) {
  if (data_dim < 1 || label_dim < 0) throw Error(Errc::InvalidArgument, "denoiser dimensions must be positive");
  Rng rng(seed);
  std::vector<int> widths{data_dim + label_dim + 1};
  for (int w : hidden) {
    if (w < 1) throw Error(Errc::InvalidArgument, "hidden widths must be positive");
    widths.push_back(w);
  }
  widths.push_back(data_dim);
  for (std::size_t l = 1; l < widths.size(); ++l) {
    // Uniform Glorot-style bounds.
    const double bound = std::sqrt(6.0 / (widths[l - 1] + widths[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer;
    layer.W.resize(widths[l], widths[l - 1]);
    for (Eigen::Index j = 0; j < layer.W.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.W.rows(); ++i) layer.W(i, j) = u(rng);
    layer.bias = Eigen::VectorXd::Zero(widths[l]);
    layers_.push_back(std::move(layer));
  }
  x_scaler_.mean = Eigen::VectorXd::Zero(data_dim);
  x_scaler_.scale = Eigen::VectorXd::Ones(data_dim);
  label_scaler_.mean = Eigen::VectorXd::Zero(label_dim);
  label_scaler_.scale = Eigen::VectorXd::Ones(label_dim);
}

Eigen::MatrixXd DenoiserNet::predict(const Eigen::MatrixXd& xt, const Eigen::MatrixXd& labels,
                                     const Eigen::VectorXd& t) const {
  if (xt.rows() != data_dim_ || labels.rows() != label_dim_ || labels.cols() != xt.cols() || t.size() != xt.cols())
    throw Error(Errc::DimMismatch, "denoiser input shape mismatch");
  Eigen::MatrixXd a = stack_inputs(xt, labels, t);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].W * a).colwise() + layers_[l].bias;
    a = l + 1 < layers_.size() ? silu(z) : std::move(z);
  }
  return a;
}

bool operator==(const DenoiserNet& a, const DenoiserNet& b) {
  if (a.data_dim_ != b.data_dim_ || a.label_dim_ != b.label_dim_ || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l)
    if (a.layers_[l].W != b.layers_[l].W || a.layers_[l].bias != b.layers_[l].bias) return false;
  return a.x_scaler_.mean == b.x_scaler_.mean && a.x_scaler_.scale == b.x_scaler_.scale &&
         a.label_scaler_.mean == b.label_scaler_.mean && a.label_scaler_.scale == b.label_scaler_.scale;
}

namespace {

struct AdamSlot {
  Eigen::MatrixXd mW, vW;
  Eigen::VectorXd mb, vb;
};

}  // namespace

DdpmTrainResult train_denoiser(const Eigen::MatrixXd& x, const Eigen::MatrixXd& labels, const NoiseSchedule& sched,
                               const DdpmTrainConfig& cfg) {
  const Eigen::Index n = x.rows();
  if (n == 0 || x.cols() == 0) throw Error(Errc::InvalidArgument, "empty training set");
  if (labels.rows() != n) throw Error(Errc::DimMismatch, "labels need one row per sample");
  if (cfg.epochs < 0 || cfg.batch < 1 || !(cfg.lr > 0.0)) throw Error(Errc::InvalidConfig, "bad training config");

  DdpmTrainResult res;
  res.net = DenoiserNet(static_cast<int>(x.cols()), static_cast<int>(labels.cols()), cfg.hidden,
                        derive_seed(cfg.seed, 0));
  DenoiserNet& net = res.net;
  net.x_scaler() = Standardizer::fit(x.transpose());
  net.label_scaler() = Standardizer::fit(labels.transpose());
  if (cfg.epochs == 0) return res;

  const Eigen::MatrixXd xs = net.x_scaler().apply(x.transpose());
  const Eigen::MatrixXd ls = net.label_scaler().apply(labels.transpose());
  const int d = net.data_dim();
  auto& layers = net.layers();
  const std::size_t L = layers.size();

  std::vector<AdamSlot> adam(L);
  for (std::size_t l = 0; l < L; ++l) {
    adam[l].mW = adam[l].vW = Eigen::MatrixXd::Zero(layers[l].W.rows(), layers[l].W.cols());
    adam[l].mb = adam[l].vb = Eigen::VectorXd::Zero(layers[l].bias.size());
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;

  Rng rng(derive_seed(cfg.seed, 1));
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> step(1, sched.K);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  std::vector<Eigen::MatrixXd> acts(L + 1), pre(L);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch) {
      const Eigen::Index B = std::min<Eigen::Index>(cfg.batch, n - start);
      Eigen::MatrixXd xt(d, B), z(d, B), lab(ls.rows(), B);
      Eigen::VectorXd t(B);
      for (Eigen::Index j = 0; j < B; ++j) {
        const Eigen::Index i = order[start + j];
        const int k = step(rng);
        const double b = sched.b[k - 1];
        for (int r = 0; r < d; ++r) z(r, j) = normal(rng);
        xt.col(j) = std::sqrt(b) * xs.col(i) + std::sqrt(1.0 - b) * z.col(j);
        if (ls.rows() > 0) lab.col(j) = ls.col(i);
        t(j) = static_cast<double>(k) / sched.K;
      }
      acts[0] = stack_inputs(xt, lab, t);
      for (std::size_t l = 0; l < L; ++l) {
        pre[l] = (layers[l].W * acts[l]).colwise() + layers[l].bias;
        acts[l + 1] = l + 1 < L ? silu(pre[l]) : pre[l];
      }
      const Eigen::MatrixXd diff = acts[L] - z;
      const double loss = diff.squaredNorm() / static_cast<double>(d * B);
      if (!std::isfinite(loss))
        throw Error(Errc::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                                             std::to_string(batches));
      loss_sum += loss;
      ++batches;

      Eigen::MatrixXd delta = diff * (2.0 / static_cast<double>(d * B));
      b1t *= b1;
      b2t *= b2;
      for (std::size_t l = L; l-- > 0;) {
        const Eigen::MatrixXd gW = delta * acts[l].transpose();
        const Eigen::VectorXd gb = delta.rowwise().sum();
        if (l > 0) {
          const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-pre[l - 1].array()).exp());
          delta = ((layers[l].W.transpose() * delta).array() * sig * (1.0 + pre[l - 1].array() * (1.0 - sig))).matrix();
        }
        auto& s = adam[l];
        s.mW = b1 * s.mW + (1 - b1) * gW;
        s.vW = b2 * s.vW + (1 - b2) * gW.cwiseProduct(gW);
        s.mb = b1 * s.mb + (1 - b1) * gb;
        s.vb = b2 * s.vb + (1 - b2) * gb.cwiseProduct(gb);
        layers[l].W.array() -= cfg.lr * (s.mW.array() / (1 - b1t)) / ((s.vW.array() / (1 - b2t)).sqrt() + eps);
        layers[l].bias.array() -= cfg.lr * (s.mb.array() / (1 - b1t)) / ((s.vb.array() / (1 - b2t)).sqrt() + eps);
      }
    }
    res.loss_trace.push_back(loss_sum / batches);
  }
  return res;
}

Eigen::MatrixXd sample_ddpm(const DenoiserNet& net, const Eigen::MatrixXd& labels, const NoiseSchedule& sched,
                            Rng& rng) {
  if (labels.cols() != net.label_dim()) throw Error(Errc::DimMismatch, "label width does not match the net");
  const Eigen::Index n = labels.rows();
  const int d = net.data_dim();
  const Eigen::MatrixXd ls = net.label_scaler().apply(labels.transpose());
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(d, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int r = 0; r < d; ++r) x(r, j) = normal(rng);
  Eigen::VectorXd t(n);
  for (int k = sched.K; k >= 1; --k) {
    const double beta = sched.beta[k - 1], b = sched.b[k - 1];
    t.setConstant(static_cast<double>(k) / sched.K);
    const Eigen::MatrixXd zhat = net.predict(x, ls, t);
    x = (x - (beta / std::sqrt(1.0 - b)) * zhat) / std::sqrt(1.0 - beta);
    if (sched.alpha > 0.0) {
      const double s = std::sqrt(sched.alpha * beta);
      for (Eigen::Index j = 0; j < n; ++j)
        for (int r = 0; r < d; ++r) x(r, j) += s * normal(rng);
    }
  }
  return net.x_scaler().invert(x).transpose();
}

std::vector<double> sample_ddpm(const DenoiserNet& net, std::span<const double> label, const NoiseSchedule& sched,
                                Rng& rng) {
  Eigen::MatrixXd l(1, static_cast<Eigen::Index>(label.size()));
  for (std::size_t i = 0; i < label.size(); ++i) l(0, static_cast<Eigen::Index>(i)) = label[i];
  const Eigen::MatrixXd x = sample_ddpm(net, l, sched, rng);
  return {x.data(), x.data() + x.size()};
}

namespace {

constexpr char kMagic[8] = {'M', 'C', 'D', 'D', 'P', 'M', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw Error(Errc::Format, "truncated denoiser file");
  return v;
}

void put_doubles(std::ostream& os, const double* p, Eigen::Index n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void get_doubles(std::istream& is, double* p, Eigen::Index n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw Error(Errc::Format, "truncated denoiser file");
}

}  // namespace

void save_denoiser(const std::filesystem::path& path, const DenoiserNet& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::Io, "cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.data_dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.label_dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.W.cols()));
    put_doubles(os, l.W.data(), l.W.size());
    put_doubles(os, l.bias.data(), l.bias.size());
  }
  for (const Standardizer* s : {&net.x_scaler(), &net.label_scaler()}) {
    put_doubles(os, s->mean.data(), s->mean.size());
    put_doubles(os, s->scale.data(), s->scale.size());
  }
  if (!os) throw Error(Errc::Io, "failed writing " + path.string());
}

DenoiserNet load_denoiser(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::Io, "cannot read " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw Error(Errc::Format, "not a denoiser file");
  if (get<std::uint32_t>(is) != kVersion) throw Error(Errc::Format, "unsupported denoiser file version");
  const auto d = get<std::uint32_t>(is), l = get<std::uint32_t>(is), nl = get<std::uint32_t>(is);
  if (d == 0 || d > 100000 || l > 100000 || nl == 0 || nl > 1000) throw Error(Errc::Format, "implausible header");
  DenoiserNet net(static_cast<int>(d), static_cast<int>(l), {}, 0);
  auto& layers = net.layers();
  layers.assign(nl, DenseLayer{});
  Eigen::Index prev = d + l + 1;
  for (auto& layer : layers) {
    const auto rows = get<std::uint32_t>(is), cols = get<std::uint32_t>(is);
    if (cols != prev || rows == 0 || rows > 100000) throw Error(Errc::Format, "inconsistent layer shapes");
    layer.W.resize(rows, cols);
    layer.bias.resize(rows);
    get_doubles(is, layer.W.data(), layer.W.size());
    get_doubles(is, layer.bias.data(), layer.bias.size());
    prev = rows;
  }
  if (prev != d) throw Error(Errc::Format, "output layer does not match the data dimension");
  for (Standardizer* s : {&net.x_scaler(), &net.label_scaler()}) {
    get_doubles(is, s->mean.data(), s->mean.size());
    get_doubles(is, s->scale.data(), s->scale.size());
  }
  if (is.peek() != std::char_traits<char>::eof()) throw Error(Errc::Format, "trailing bytes in denoiser file");
  return net;
}

double size_threshold(Side side) noexcept { return side == Side::Supply ? 200.0 : 450.0; }

SizeClass size_class(std::span<const double> row, Side side) noexcept {
  const double thr = size_threshold(side);
  for (double v : row)
    if (std::abs(v) > thr) return SizeClass::High;
  return SizeClass::Low;
}

double ZeroMaskConfig::mean() const noexcept {
  const double m = size_class == SizeClass::Low ? 50.0 : 250.0;
  return side == Side::Supply ? -m : m;
}

double ZeroMaskConfig::sd() const noexcept { return size_class == SizeClass::Low ? 5.0 : 25.0; }

std::vector<double> randomize_zeros(std::span<const double> row, const ZeroMaskConfig& cfg, Rng& rng) {
  std::normal_distribution<double> fake(cfg.mean(), cfg.sd());
  std::vector<double> out(row.begin(), row.end());
  for (auto& v : out)
    if (v == 0.0) v = fake(rng);
  return out;
}

std::vector<double> truncate_marks(std::span<const double> row, Side side) {
  std::vector<double> out(row.begin(), row.end());
  for (auto& v : out)
    if (side == Side::Supply ? v < 0.0 : v > 0.0) v = 0.0;
  return out;
}

}  // namespace meritcurve
