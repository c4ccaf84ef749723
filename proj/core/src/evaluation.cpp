#include "meritcurve/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "meritcurve/error.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

void PointCloud::validate() const {
  if (points.rows() == 0 || points.cols() == 0) throw Error(Errc::InvalidArgument, "empty point cloud");
  if (!points.allFinite()) throw Error(Errc::InvalidArgument, "point cloud has non-finite coordinates");
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(points.cols()))
    throw Error(Errc::DimMismatch, "one label per dimension expected");
}

double wasserstein2(const PointCloud& a, const PointCloud& b, const W2Options& opts) {
  a.validate();
  b.validate();
  if (a.dim() != b.dim()) throw Error(Errc::DimMismatch, "point clouds differ in dimension");
  if (!opts.standardize) return std::sqrt(std::max(0.0, optimal_transport(a.points, b.points, opts.budget).cost));

  Eigen::MatrixXd pooled(a.size() + b.size(), a.dim());
  pooled << a.points, b.points;
  const Eigen::RowVectorXd mu = pooled.colwise().mean();
  Eigen::RowVectorXd sd = ((pooled.rowwise() - mu).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j)
    if (!(sd(j) > 0.0)) sd(j) = 1.0;
  const Eigen::MatrixXd sa = (a.points.rowwise() - mu).array().rowwise() / sd.array();
  const Eigen::MatrixXd sb = (b.points.rowwise() - mu).array().rowwise() / sd.array();
  return std::sqrt(std::max(0.0, optimal_transport(sa, sb, opts.budget).cost));
}

std::vector<double> price_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw Error(Errc::InvalidRange, "price grid needs lo <= hi and step > 0");
  std::vector<double> g;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(lo + step * i);
  return g;
}

NormalizedMse normalized_mse(const AggregatedCurve& real, const std::vector<AggregatedCurve>& samples,
                             const std::vector<double>& grid) {
  if (samples.empty()) throw Error(Errc::InvalidArgument, "normalized MSE needs at least one sample");
  NormalizedMse out;
  for (double p : grid) {
    const double s = real.step_value(p);
    if (s == 0.0) {
      out.excluded.push_back(p);
      continue;
    }
    double acc = 0.0;
    for (const auto& c : samples) {
      const double r = (s - c.step_value(p)) / s;
      acc += r * r;
    }
    out.grid.push_back(p);
    out.value.push_back(acc / static_cast<double>(samples.size()));
  }
  if (out.grid.empty()) throw Error(Errc::ZeroDenominatorAtPrice, "reference curve is zero at every grid price");
  out.mean = mean(out.value);
  for (double v : out.value) out.max = std::max(out.max, v);
  return out;
}

Eigen::VectorXd scott_bandwidth(const PointCloud& pts) {
  pts.validate();
  const auto n = pts.size();
  const auto d = pts.dim();
  if (n < 2) throw Error(Errc::DegenerateVariance, "KDE needs at least two points");
  const Eigen::RowVectorXd mu = pts.points.colwise().mean();
  Eigen::VectorXd h(d);
  const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (pts.points.col(j).array() - mu(j)).square().sum() / static_cast<double>(n - 1);
    if (!(var > 0.0)) throw Error(Errc::DegenerateVariance, "zero variance in dimension " + std::to_string(j));
    h(j) = std::sqrt(var) * factor;
  }
  return h;
}

std::vector<double> gaussian_kde(const PointCloud& pts, const Eigen::MatrixXd& at) {
  const Eigen::VectorXd h = scott_bandwidth(pts);
  if (at.cols() != pts.dim()) throw Error(Errc::DimMismatch, "evaluation points differ in dimension");
  const auto n = pts.size();
  const auto d = pts.dim();
  double norm = static_cast<double>(n);
  for (Eigen::Index j = 0; j < d; ++j) norm *= h(j) * std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> out(at.rows());
  for (Eigen::Index r = 0; r < at.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double q = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double z = (at(r, j) - pts.points(i, j)) / h(j);
        q += z * z;
      }
      acc += std::exp(-0.5 * q);
    }
    out[r] = acc / norm;
  }
  return out;
}

PartitionedCloud partition_by_window(const PointCloud& cloud, double p_start, double p_end, int price_column) {
  if (price_column < 0 || price_column >= cloud.dim()) throw Error(Errc::InvalidArgument, "price column out of range");
  if (!(p_start <= p_end)) throw Error(Errc::InvalidRange, "window needs p_start <= p_end");
  PartitionedCloud out;
  out.p_start = p_start;
  out.p_end = p_end;
  std::vector<Eigen::Index> lo, mid, hi;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const double p = cloud.points(i, price_column);
    (p < p_start ? lo : p > p_end ? hi : mid).push_back(i);
  }
  auto take = [&](const std::vector<Eigen::Index>& idx) {
    PointCloud c;
    c.labels = cloud.labels;
    c.points.resize(static_cast<Eigen::Index>(idx.size()), cloud.dim());
    for (std::size_t k = 0; k < idx.size(); ++k) c.points.row(static_cast<Eigen::Index>(k)) = cloud.points.row(idx[k]);
    return c;
  };
  out.below = take(lo);
  out.elastic = take(mid);
  out.above = take(hi);
  return out;
}

PartitionedW2 wasserstein2_partitioned(const PointCloud& a, const PointCloud& b, double p_start, double p_end,
                                       const W2Options& opts, int price_column) {
  const auto pa = partition_by_window(a, p_start, p_end, price_column);
  const auto pb = partition_by_window(b, p_start, p_end, price_column);
  auto dist = [&](const PointCloud& x, const PointCloud& y) {
    if (x.size() == 0 || y.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    return wasserstein2(x, y, opts);
  };
  return {p_start, p_end, dist(pa.below, pb.below), dist(pa.elastic, pb.elastic), dist(pa.above, pb.above)};
}

void save_normalized_mse(const std::filesystem::path& path, const NormalizedMse& m) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::Io, "cannot write " + path.string());
  os << "price,normalized_mse\n";
  for (std::size_t i = 0; i < m.grid.size(); ++i) os << format_double(m.grid[i]) << ',' << format_double(m.value[i]) << '\n';
  if (!os) throw Error(Errc::Io, "failed writing " + path.string());
}

}  // namespace meritcurve
