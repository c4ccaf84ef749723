#include "meritcurve/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "meritcurve/csv.hpp"
#include "meritcurve/error.hpp"

namespace meritcurve {

void DailyOrderBook::validate() const {
  if (prices.size() != marks.size()) throw Error(Errc::InvalidArgument, "prices and marks differ in length");
  for (std::size_t m = 0; m < prices.size(); ++m) {
    if (!(prices[m] > bounds.lo) || prices[m] > bounds.hi)
      throw Error(Errc::InvalidArgument, "arrival price outside (lo, hi]");
    if (m > 0 && !(prices[m] > prices[m - 1])) throw Error(Errc::InvalidArgument, "arrival prices not increasing");
    bool any = false;
    for (double d : marks[m]) {
      if (side == Side::Supply ? d < 0.0 : d > 0.0) throw Error(Errc::InvalidArgument, "mark sign wrong for side");
      any = any || d != 0.0;
    }
    if (!any) throw Error(Errc::InvalidArgument, "all-zero mark row");
  }
  for (double a : anchor)
    if (!(a >= 0.0)) throw Error(Errc::InvalidArgument, "anchor volumes must be >= 0");
}

namespace {

// Increment d with fl(a + d) == b when such a d lies within a few ulps of b - a.
double exact_increment(double a, double b) {
  const double d = b - a;
  if (a + d == b) return d;
  double up = d, down = d;
  for (int k = 0; k < 8; ++k) {
    up = std::nextafter(up, HUGE_VAL);
    if (a + up == b) return up;
    down = std::nextafter(down, -HUGE_VAL);
    if (a + down == b) return down;
  }
  return d;
}

}  // namespace

DailyOrderBook encode_orderbook(const std::vector<AggregatedCurve>& curves) {
  if (curves.empty()) throw Error(Errc::MissingHour, "no curves given");
  std::array<const AggregatedCurve*, 24> by_hour{};
  for (const auto& c : curves) {
    if (c.day() != curves.front().day() || c.side() != curves.front().side() || c.bounds() != curves.front().bounds())
      throw Error(Errc::InvalidArgument, "curves must share day, side and bounds");
    auto& slot = by_hour[static_cast<std::size_t>(c.hour() - 1)];
    if (slot) throw Error(Errc::DuplicateHour, "hour " + std::to_string(c.hour()) + " given twice");
    slot = &c;
  }
  for (std::size_t h = 0; h < 24; ++h)
    if (!by_hour[h]) throw Error(Errc::MissingHour, "hour " + std::to_string(h + 1) + " missing");

  DailyOrderBook book;
  book.side = curves.front().side();
  book.day = curves.front().day();
  book.bounds = curves.front().bounds();
  const double lo = book.bounds.lo;

  std::vector<double> union_prices;
  for (std::size_t h = 0; h < 24; ++h) {
    book.anchor[h] = by_hour[h]->step_value(lo);
    for (const auto& p : by_hour[h]->points())
      if (p.price > lo) union_prices.push_back(p.price);
  }
  std::sort(union_prices.begin(), union_prices.end());
  union_prices.erase(std::unique(union_prices.begin(), union_prices.end()), union_prices.end());

  HourVector cum = book.anchor;
  std::array<std::size_t, 24> cursor{};
  for (std::size_t h = 0; h < 24; ++h) {
    const auto& pts = by_hour[h]->points();
    while (cursor[h] < pts.size() && pts[cursor[h]].price <= lo) ++cursor[h];
  }
  for (double p : union_prices) {
    HourVector row{};
    bool any = false;
    for (std::size_t h = 0; h < 24; ++h) {
      const auto& pts = by_hour[h]->points();
      if (cursor[h] < pts.size() && pts[cursor[h]].price == p) {
        const double target = pts[cursor[h]].volume;
        const double d = exact_increment(cum[h], target);
        cum[h] += d;
        row[h] = d;
        any = any || d != 0.0;
        ++cursor[h];
      }
    }
    if (!any) continue;
    book.prices.push_back(p);
    book.marks.push_back(row);
  }
  return book;
}

std::vector<AggregatedCurve> decode_orderbook(const DailyOrderBook& book) {
  std::vector<AggregatedCurve> out;
  out.reserve(24);
  for (std::size_t h = 0; h < 24; ++h) {
    std::vector<CurvePoint> pts{{book.bounds.lo, book.anchor[h]}};
    double cum = book.anchor[h];
    for (std::size_t m = 0; m < book.prices.size(); ++m) {
      if (book.marks[m][h] == 0.0) continue;
      cum += book.marks[m][h];
      pts.push_back({book.prices[m], cum});
    }
    out.emplace_back(book.side, book.day, static_cast<int>(h + 1), std::move(pts), book.bounds);
  }
  return out;
}

AggregatedCurve canonical_curve(const AggregatedCurve& c) {
  const double lo = c.bounds().lo;
  std::vector<CurvePoint> pts{{lo, c.step_value(lo)}};
  for (const auto& p : c.points())
    if (p.price > lo && p.volume != pts.back().volume) pts.push_back(p);
  return AggregatedCurve(c.side(), c.day(), c.hour(), std::move(pts), c.bounds());
}

double normalize_price(double p) {
  if (!(p > kNormLo && p <= kNormHi)) throw Error(Errc::OutOfRange, "price outside (-500, 3000]");
  return (p - kNormLo) / (kNormHi - kNormLo);
}

double denormalize_price(double u) {
  if (!(u > 0.0 && u <= 1.0)) throw Error(Errc::OutOfRange, "normalised price outside (0, 1]");
  return kNormLo + u * (kNormHi - kNormLo);
}

std::vector<double> normalized_arrivals(const DailyOrderBook& book) {
  std::vector<double> u;
  u.reserve(book.prices.size());
  for (double p : book.prices) u.push_back(normalize_price(p));
  return u;
}

// ---- intensity ---------------------------------------------------------------

std::vector<double> PiecewiseLinearIntensity::default_nodes() {
  std::vector<double> n;
  for (int k = 1; k <= 5; ++k) n.push_back(0.1 * k / 6.0);
  for (int k = 0; k < 20; ++k) n.push_back(0.1 + 0.2 * k / 19.0);
  for (int k = 1; k <= 5; ++k) n.push_back(0.3 + 0.7 * k / 5.0);
  n.back() = 1.0;
  return n;
}

PiecewiseLinearIntensity::PiecewiseLinearIntensity()
    : nodes_(default_nodes()), values_(nodes_.size(), 0.0) {}

PiecewiseLinearIntensity::PiecewiseLinearIntensity(std::vector<double> nodes, std::vector<double> values)
    : nodes_(std::move(nodes)), values_(std::move(values)) {
  if (nodes_.size() != values_.size() || nodes_.size() < 2)
    throw Error(Errc::DimMismatch, "intensity needs matching nodes and values (at least 2)");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > 0.0 && nodes_[i] <= 1.0)) throw Error(Errc::InvalidArgument, "nodes must lie in (0, 1]");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1])) throw Error(Errc::InvalidArgument, "nodes must increase");
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i]))
      throw Error(Errc::InvalidArgument, "intensity values must be finite and >= 0");
  }
}

std::array<std::pair<std::size_t, double>, 2> PiecewiseLinearIntensity::basis(double u) const {
  if (u <= nodes_.front()) return {{{0, 1.0}, {0, 0.0}}};
  if (u >= nodes_.back()) return {{{nodes_.size() - 1, 1.0}, {0, 0.0}}};
  const auto i = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), u) - nodes_.begin());
  const double w = (u - nodes_[i - 1]) / (nodes_[i] - nodes_[i - 1]);
  return {{{i - 1, 1.0 - w}, {i, w}}};
}

double PiecewiseLinearIntensity::operator()(double u) const {
  double s = 0.0;
  for (const auto& [j, w] : basis(u)) s += w * values_[j];
  return s;
}

double PiecewiseLinearIntensity::compensator(double u) const {
  if (u <= 0.0) return 0.0;
  u = std::min(u, 1.0);
  double s = values_[0] * std::min(u, nodes_[0]);
  for (std::size_t i = 1; i < nodes_.size() && nodes_[i - 1] < u; ++i) {
    const double b = std::min(u, nodes_[i]);
    const double vb = (*this)(b);
    s += 0.5 * (values_[i - 1] + vb) * (b - nodes_[i - 1]);
  }
  if (u > nodes_.back()) s += values_.back() * (u - nodes_.back());
  return s;
}

double PiecewiseLinearIntensity::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

double PiecewiseLinearIntensity::basis_integral(std::size_t j) const {
  const std::size_t n = nodes_.size();
  double s = 0.0;
  if (j == 0) s += nodes_[0];
  if (j > 0) s += 0.5 * (nodes_[j] - nodes_[j - 1]);
  if (j + 1 < n) s += 0.5 * (nodes_[j + 1] - nodes_[j]);
  if (j + 1 == n) s += 1.0 - nodes_[j];
  return s;
}

double intensity_log_likelihood(const PiecewiseLinearIntensity& lambda, std::span<const double> arrivals) {
  double s = -lambda.total();
  for (double u : arrivals) s += std::log(lambda(u));
  return s;
}

IntensityFit fit_intensity(std::span<const double> arrivals, const std::vector<double>& nodes, int max_iter) {
  if (arrivals.empty()) throw Error(Errc::NoArrivals, "fit_intensity needs at least one arrival");
  for (double u : arrivals)
    if (!(u > 0.0 && u <= 1.0)) throw Error(Errc::OutOfRange, "arrivals must lie in (0, 1]");
  const double M = static_cast<double>(arrivals.size());
  const std::size_t J = nodes.size();
  const PiecewiseLinearIntensity shape(nodes, std::vector<double>(J, 0.0));

  // Basis weights per arrival are fixed; cache them.
  std::vector<std::array<std::pair<std::size_t, double>, 2>> B;
  B.reserve(arrivals.size());
  for (double u : arrivals) B.push_back(shape.basis(u));
  std::vector<double> phi_int(J);
  for (std::size_t j = 0; j < J; ++j) phi_int[j] = shape.basis_integral(j);

  // Objective: -logL / M in theta = log(values).
  auto fdf = [&](std::span<const double> th, std::span<double> grad) {
    std::vector<double> v(J);
    for (std::size_t j = 0; j < J; ++j) v[j] = std::exp(th[j]);
    std::vector<double> g(J, 0.0);
    double ll = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      ll -= v[j] * phi_int[j];
      g[j] -= phi_int[j];
    }
    for (const auto& b : B) {
      double lam = 0.0;
      for (const auto& [j, w] : b) lam += w * v[j];
      ll += std::log(lam);
      for (const auto& [j, w] : b) g[j] += w / lam;
    }
    for (std::size_t j = 0; j < J; ++j) grad[j] = -g[j] * v[j] / M;
    return -ll / M;
  };

  const std::vector<double> x0(J, std::log(M));
  auto res = minimize_bfgs(fdf, x0, max_iter, 1e-7);
  std::vector<double> vals(J);
  for (std::size_t j = 0; j < J; ++j) vals[j] = std::exp(res.x[j]);
  IntensityFit fit{PiecewiseLinearIntensity(nodes, vals), 0.0, res.iterations, res.converged};
  fit.log_likelihood = intensity_log_likelihood(fit.lambda, arrivals);
  PiecewiseLinearIntensity constant(nodes, std::vector<double>(J, M));
  const double ll_const = intensity_log_likelihood(constant, arrivals);
  if (!(fit.log_likelihood >= ll_const)) {
    fit.lambda = std::move(constant);
    fit.log_likelihood = ll_const;
  }
  return fit;
}

std::pair<double, double> ks_uniform(std::vector<double> x) {
  if (x.empty()) return {0.0, 1.0};
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - c, c - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  if (t < 1e-3) return {d, 1.0};
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    p += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

RescalingDiagnostic rescaling_diag(std::span<const double> arrivals, const PiecewiseLinearIntensity& lambda) {
  RescalingDiagnostic r;
  double prev = 0.0;
  for (std::size_t m = 0; m < arrivals.size(); ++m) {
    const double u = arrivals[m];
    if (m > 0 && u < arrivals[m - 1]) throw Error(Errc::InvalidArgument, "arrivals must be sorted");
    if (!(lambda(u) > 0.0)) throw Error(Errc::ZeroIntensityOnArrival, "intensity is zero at an arrival");
    const double c = lambda.compensator(u);
    r.scores.push_back(1.0 - std::exp(-(c - prev)));
    prev = c;
  }
  std::tie(r.ks_statistic, r.ks_pvalue) = ks_uniform(r.scores);
  return r;
}

std::vector<double> thin_sample(const PiecewiseLinearIntensity& lambda, Rng& rng) {
  std::vector<double> out;
  const double lmax = lambda.max_value();
  if (!(lmax > 0.0)) return out;
  std::poisson_distribution<long> count(lmax);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const long n = count(rng);
  for (long i = 0; i < n; ++i) {
    const double u = 1.0 - unif(rng);  // (0, 1]
    if (unif(rng) * lmax < lambda(u)) out.push_back(u);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- files --------------------------------------------------------------------

void save_orderbooks(const std::filesystem::path& path, const std::vector<DailyOrderBook>& books) {
  std::ostringstream os;
  os << "day,side,m,price";
  for (int h = 1; h <= 24; ++h) os << ",ds_" << h;
  os << '\n';
  for (const auto& b : books) {
    const std::string prefix = format_date(b.day) + "," + std::string(to_string(b.side)) + ",";
    auto row = [&](std::size_t m, double price, const HourVector& v) {
      os << prefix << m << ',' << format_double(price);
      for (double d : v) os << ',' << format_double(d);
      os << '\n';
    };
    row(0, b.bounds.lo, b.anchor);
    for (std::size_t m = 0; m < b.prices.size(); ++m) row(m + 1, b.prices[m], b.marks[m]);
  }
  csv::write_file_atomic(path, os.str());
}

std::vector<DailyOrderBook> load_orderbooks(const std::filesystem::path& path) {
  std::vector<DailyOrderBook> out;
  for (const auto& row : csv::read_file(path, /*allow_header=*/true)) {
    const std::string at = "line " + std::to_string(row.line_no);
    if (row.fields.size() != 28) throw Error(Errc::MalformedRow, at + ": expected 28 columns");
    const Date day = parse_date(row.fields[0]);
    const Side side = parse_side(row.fields[1]);
    const auto m = parse_int(row.fields[2]);
    const auto price = parse_double(row.fields[3]);
    if (!m || !price) throw Error(Errc::MalformedRow, at + ": unparsable index or price");
    HourVector v{};
    for (std::size_t h = 0; h < 24; ++h) {
      const auto x = parse_double(row.fields[4 + h]);
      if (!x) throw Error(Errc::MalformedRow, at + ": unparsable mark");
      v[h] = *x;
    }
    if (*m == 0) {
      DailyOrderBook b;
      b.side = side;
      b.day = day;
      b.bounds = PriceBounds::defaults(side);
      b.bounds.lo = *price;
      b.anchor = v;
      out.push_back(b);
      continue;
    }
    if (out.empty() || out.back().day != day || out.back().side != side ||
        static_cast<std::size_t>(*m) != out.back().prices.size() + 1)
      throw Error(Errc::MalformedRow, at + ": mark row without its anchor row");
    out.back().prices.push_back(*price);
    out.back().marks.push_back(v);
  }
  for (const auto& b : out) b.validate();
  return out;
}

void save_intensity(const std::filesystem::path& path, const PiecewiseLinearIntensity& lambda) {
  std::ostringstream os;
  os << "node_u,value\n";
  for (std::size_t j = 0; j < lambda.nodes().size(); ++j)
    os << format_double(lambda.nodes()[j]) << ',' << format_double(lambda.values()[j]) << '\n';
  csv::write_file_atomic(path, os.str());
}

PiecewiseLinearIntensity load_intensity(const std::filesystem::path& path) {
  std::vector<double> nodes, values;
  for (const auto& row : csv::read_file(path, /*allow_header=*/true)) {
    if (row.fields.size() != 2) throw Error(Errc::MalformedRow, "line " + std::to_string(row.line_no));
    const auto u = parse_double(row.fields[0]), v = parse_double(row.fields[1]);
    if (!u || !v) throw Error(Errc::MalformedRow, "line " + std::to_string(row.line_no));
    nodes.push_back(*u);
    values.push_back(*v);
  }
  return PiecewiseLinearIntensity(std::move(nodes), std::move(values));
}

}  // namespace meritcurve
