#include "meritcurve/parametric_curve.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "meritcurve/csv.hpp"
#include "meritcurve/error.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

const std::array<std::string_view, ParametricCurve::kParams>& ParametricCurve::param_names() {
  static const std::array<std::string_view, kParams> n{"coef_0", "coef_1", "coef_2",  "coef_3",
                                                       "U",      "L",      "p_start", "p_end"};
  return n;
}

std::array<double, ParametricCurve::kParams> ParametricCurve::params() const {
  return {coef[0], coef[1], coef[2], coef[3], U, L, p_start, p_end};
}

ParametricCurve ParametricCurve::from_params(Side side, const std::array<double, kParams>& v) {
  ParametricCurve pc;
  pc.side = side;
  pc.coef = {v[0], v[1], v[2], v[3]};
  pc.U = v[4];
  pc.L = v[5];
  pc.p_start = v[6];
  pc.p_end = v[7];
  return pc;
}

void ParametricCurve::validate() const {
  for (double v : params())
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "non-finite curve parameter");
  if (!(p_start < p_end)) throw Error(Errc::InvalidArgument, "p_start must be below p_end");
  const bool ok = side == Side::Demand ? (U >= L && L >= 0.0) : (L >= U && U >= 0.0);
  if (!ok) throw Error(Errc::InvalidArgument, "plateau order violated for " + std::string(to_string(side)));
}

std::vector<double> uniform_grid(PriceBounds bounds, std::size_t n) {
  if (n < 2) throw Error(Errc::InvalidArgument, "grid needs at least 2 points");
  const double step = (bounds.hi - bounds.lo) / static_cast<double>(n - 1);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = bounds.lo + step * static_cast<double>(i);
  g.back() = bounds.hi;
  return g;
}

std::size_t grid_size_for_step(PriceBounds bounds, double step) {
  const auto n = static_cast<std::size_t>(std::llround((bounds.hi - bounds.lo) / step)) + 1;
  return std::max(n, kMinDenseSize);
}

DenseCurve interpolate_uniform(const AggregatedCurve& curve, std::size_t n) {
  if (curve.size() < 2) throw Error(Errc::TooFewPoints, "curve needs at least 2 points");
  if (n < kMinDenseSize) throw Error(Errc::InvalidArgument, "dense grid needs at least 200 points");
  DenseCurve d;
  d.grid = uniform_grid(curve.bounds(), n);
  d.values.reserve(n);
  for (double p : d.grid) d.values.push_back(curve.linear_value(p));
  return d;
}

ElasticWindow detect_elastic(std::span<const double> x, std::span<const double> y, double pct) {
  if (x.size() != y.size() || x.size() < 3)
    throw Error(Errc::InvalidArgument, "detect_elastic needs matching x, y with at least 3 points");
  const auto slope = gradient(y, x);
  std::vector<double> mag(slope.size());
  std::transform(slope.begin(), slope.end(), mag.begin(), [](double s) { return std::abs(s); });
  const double thr = percentile(mag, pct);
  std::size_t first = mag.size(), last = 0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] > thr) {
      if (first == mag.size()) first = i;
      last = i;
    }
  }
  if (first == mag.size()) return {x.front(), x.back()};
  return {x[first], x[last]};
}

Plateaus extract_plateaus(const DenseCurve& dense, double p_start, double p_end) {
  if (!(p_start < p_end)) throw Error(Errc::InvalidArgument, "p_start must be below p_end");
  double su = 0.0, sl = 0.0;
  std::size_t nu = 0, nl = 0;
  for (std::size_t i = 0; i < dense.grid.size(); ++i) {
    if (dense.grid[i] <= p_start) su += dense.values[i], ++nu;
    if (dense.grid[i] >= p_end) sl += dense.values[i], ++nl;
  }
  if (nu == 0 || nl == 0) throw Error(Errc::EmptyPlateau, "elastic window leaves an empty plateau");
  return {su / static_cast<double>(nu), sl / static_cast<double>(nl)};
}

namespace {

double to_unit(double p, double a, double b) { return 2.0 * (p - a) / (b - a) - 1.0; }

// Least squares on T_0..T_{deg} via normal equations with unit-norm columns.
std::array<double, 4> chebyshev_lsq(const std::vector<double>& t, const std::vector<double>& y, int deg) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd A(n, deg + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = t[static_cast<std::size_t>(i)];
    double tkm1 = 1.0, tk = ti;
    A(i, 0) = 1.0;
    if (deg >= 1) A(i, 1) = ti;
    for (int k = 2; k <= deg; ++k) {
      const double next = 2.0 * ti * tk - tkm1;
      A(i, k) = next;
      tkm1 = tk;
      tk = next;
    }
  }
  const Eigen::VectorXd scale = A.colwise().norm().transpose().cwiseMax(1e-300);
  const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::VectorXd c = (As.transpose() * As).ldlt().solve(As.transpose() * b).cwiseQuotient(scale);
  std::array<double, 4> out{};
  for (int k = 0; k <= deg; ++k) out[static_cast<std::size_t>(k)] = c(k);
  return out;
}

}  // namespace

ParametricCurve fit_parametric(const AggregatedCurve& curve, const FitOptions& opts) {
  const std::size_t n = opts.grid_size ? opts.grid_size : grid_size_for_step(curve.bounds(), kDefaultGridStep);
  return fit_parametric(interpolate_uniform(curve, n), curve.side(), opts);
}

ParametricCurve fit_parametric(const DenseCurve& dense, Side side, const FitOptions& opts) {
  const auto& g = dense.grid;
  auto [p_start, p_end] = detect_elastic(g, dense.values, opts.pct);
  if (p_start == p_end) {
    const auto it = std::lower_bound(g.begin(), g.end(), p_end);
    if (std::next(it) != g.end()) p_end = *std::next(it);
    else p_start = *std::prev(it);
  }
  ParametricCurve pc;
  pc.side = side;
  pc.p_start = p_start;
  pc.p_end = p_end;
  const auto pl = extract_plateaus(dense, p_start, p_end);
  pc.U = pl.U;
  pc.L = pl.L;

  std::vector<double> t, y;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] >= p_start && g[i] <= p_end) {
      t.push_back(to_unit(g[i], p_start, p_end));
      y.push_back(dense.values[i]);
    }
  }
  pc.linear_fallback = t.size() < 5;
  pc.coef = chebyshev_lsq(t, y, pc.linear_fallback ? 1 : 3);
  return pc;
}

double chebyshev_value(const std::array<double, 4>& c, double t) noexcept {
  // Clenshaw recurrence.
  double b1 = 0.0, b2 = 0.0;
  for (int k = 3; k >= 1; --k) {
    const double b0 = c[static_cast<std::size_t>(k)] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + t * b1 - b2;
}

std::vector<double> reconstruct(const ParametricCurve& pc, std::span<const double> grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double p = grid[i];
    if (p <= pc.p_start) out[i] = pc.U;
    else if (p >= pc.p_end) out[i] = pc.L;
    else out[i] = chebyshev_value(pc.coef, to_unit(p, pc.p_start, pc.p_end));
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i] = pc.side == Side::Demand ? std::min(out[i], out[i - 1]) : std::max(out[i], out[i - 1]);
  return out;
}

double nmae(std::span<const double> real, std::span<const double> approx, double U, double L) {
  if (real.size() != approx.size() || real.empty())
    throw Error(Errc::InvalidArgument, "nmae needs equal non-empty vectors");
  const double norm = 0.5 * (U + L);
  if (!(norm > 0.0)) throw Error(Errc::ZeroNormalizer, "U + L must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) s += std::abs(real[i] - approx[i]);
  return s / static_cast<double>(real.size()) / norm;
}

double mase(double model_mae, double naive_mae) {
  if (!(naive_mae > 0.0)) throw Error(Errc::ZeroDenominator, "naive MAE must be positive");
  return model_mae / naive_mae;
}

double fit_nmae(const ParametricCurve& pc, const DenseCurve& dense) {
  return nmae(dense.values, reconstruct(pc, dense.grid), pc.U, pc.L);
}

std::vector<ParametricRecord> load_parametric(const std::filesystem::path& path) {
  std::vector<ParametricRecord> out;
  for (const auto& row : csv::read_file(path, /*allow_header=*/true)) {
    const std::string at = "line " + std::to_string(row.line_no);
    if (row.fields.size() != 11) throw Error(Errc::MalformedRow, at + ": expected 11 columns");
    ParametricRecord r{parse_date(row.fields[0]), 0, {}};
    const auto hour = parse_int(row.fields[1]);
    if (!hour || *hour < 1 || *hour > 24) throw Error(Errc::MalformedRow, at + ": bad hour");
    r.hour = static_cast<int>(*hour);
    r.curve.side = parse_side(row.fields[2]);
    std::array<double, 8> v{};
    // File order: U, L, p_start, p_end, coef_0..coef_3.
    for (std::size_t i = 0; i < 8; ++i) {
      const auto x = parse_double(row.fields[3 + i]);
      if (!x) throw Error(Errc::MalformedRow, at + ": unparsable number");
      v[i] = *x;
    }
    r.curve.U = v[0];
    r.curve.L = v[1];
    r.curve.p_start = v[2];
    r.curve.p_end = v[3];
    r.curve.coef = {v[4], v[5], v[6], v[7]};
    out.push_back(r);
  }
  return out;
}

void save_parametric(const std::filesystem::path& path, const std::vector<ParametricRecord>& rows) {
  std::ostringstream os;
  os << "day,hour,side,U,L,p_start,p_end,coef_0,coef_1,coef_2,coef_3\n";
  for (const auto& r : rows) {
    const auto& c = r.curve;
    os << format_date(r.day) << ',' << r.hour << ',' << to_string(c.side);
    for (double v : {c.U, c.L, c.p_start, c.p_end, c.coef[0], c.coef[1], c.coef[2], c.coef[3]})
      os << ',' << format_double(v);
    os << '\n';
  }
  csv::write_file_atomic(path, os.str());
}

}  // namespace meritcurve
