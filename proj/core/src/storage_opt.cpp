#include "meritcurve/storage_opt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "meritcurve/error.hpp"
#include "meritcurve/parallel.hpp"

namespace meritcurve {

// ---- Gamma -------------------------------------------------------------------------

GammaFunction GammaFunction::linear(double a, double b) {
  if (!std::isfinite(a) || !(b > 0.0) || !std::isfinite(b)) throw Error(Errc::InvalidArgument, "linear gamma needs b > 0");
  GammaFunction g;
  g.linear_ = true;
  g.a_ = a;
  g.b_ = b;
  g.lo_ = -std::numeric_limits<double>::infinity();
  g.hi_ = std::numeric_limits<double>::infinity();
  return g;
}

GammaFunction GammaFunction::from_points(std::vector<double> prices, std::vector<double> values, double eps) {
  if (prices.size() != values.size() || prices.size() < 2)
    throw Error(Errc::InvalidArgument, "gamma needs at least two (price, value) pairs");
  if (!(eps > 0.0)) throw Error(Errc::InvalidArgument, "slope floor must be > 0");
  for (std::size_t i = 1; i < prices.size(); ++i) {
    if (!(prices[i] > prices[i - 1])) throw Error(Errc::InvalidArgument, "gamma prices must increase");
    if (values[i] > values[i - 1]) throw Error(Errc::NotDecreasing, "demand minus supply increases with price");
  }
  GammaFunction g;
  g.eps_ = eps;
  g.lo_ = prices.front();
  g.hi_ = prices.back();
  g.pchip_ = Pchip(std::move(prices), std::move(values));
  return g;
}

GammaFunction GammaFunction::from_curves(const AggregatedCurve& demand, const AggregatedCurve& supply, double eps) {
  if (demand.side() != Side::Demand || supply.side() != Side::Supply)
    throw Error(Errc::InvalidArgument, "gamma needs a demand and a supply curve");
  const double lo = std::max(demand.bounds().lo, supply.bounds().lo);
  const double hi = std::min(demand.bounds().hi, supply.bounds().hi);
  std::vector<double> grid{lo, hi};
  for (const auto* c : {&demand, &supply})
    for (const auto& pt : c->points())
      if (pt.price > lo && pt.price < hi) grid.push_back(pt.price);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<double> v;
  for (double p : grid) v.push_back(demand.step_value(p) - supply.step_value(p));
  const auto g = from_points(grid, v, eps);
  // With the floor the derivative is strictly negative by construction.
  if (!(g.derivative(0.5 * (lo + hi)) < 0.0)) throw Error(Errc::NotDecreasing, "gamma derivative not negative");
  return g;
}

double GammaFunction::operator()(double p) const {
  if (linear_) return a_ - b_ * p;
  // C1 linear extension outside the fitted range.
  if (p < lo_) return pchip_.value(lo_) + (p - lo_) * derivative(lo_);
  if (p > hi_) return pchip_.value(hi_) - eps_ * (hi_ - lo_) + (p - hi_) * derivative(hi_);
  return pchip_.value(p) - eps_ * (p - lo_);
}

double GammaFunction::derivative(double p) const {
  if (linear_) return -b_;
  return pchip_.derivative(std::clamp(p, lo_, hi_)) - eps_;
}

GammaFunction::Inverse GammaFunction::inverse(double y) const {
  if (linear_) return {(a_ - y) / b_, false};
  const double top = (*this)(lo_), bottom = (*this)(hi_);
  if (y >= top) return {lo_, y > top};
  if (y <= bottom) return {hi_, y < bottom};
  const auto r = find_root([&](double p) { return (*this)(p) - y; }, lo_, hi_, 1e-13 * std::max(1.0, hi_ - lo_));
  return {r.x, false};
}

// ---- calibration -----------------------------------------------------------------------

std::vector<XSample> calibrate_x(const std::vector<AggregatedCurve>& pred_demand,
                                 const std::vector<AggregatedCurve>& pred_supply,
                                 const std::vector<PriceObservation>& observed) {
  using Key = std::pair<Date, int>;
  std::map<Key, const AggregatedCurve*> d, s;
  for (const auto& c : pred_demand) d[{c.day(), c.hour()}] = &c;
  for (const auto& c : pred_supply) s[{c.day(), c.hour()}] = &c;
  std::vector<XSample> out;
  for (const auto& o : observed) {
    const auto di = d.find({o.day, o.hour});
    const auto si = s.find({o.day, o.hour});
    if (di == d.end() || si == s.end())
      throw Error(Errc::MissingObservation,
                  "no prediction for " + format_date(o.day) + " hour " + std::to_string(o.hour));
    if (!std::isfinite(o.price)) throw Error(Errc::MissingObservation, "observed price is not finite");
    out.push_back({o.day, o.hour, di->second->linear_value(o.price) - si->second->linear_value(o.price)});
  }
  return out;
}

// ---- policy ------------------------------------------------------------------------------

Clearing clear_market(const GammaFunction& g1, const GammaFunction& g2, double x1, double x2, double q) {
  const auto a = g1.inverse(x1 - q);
  const auto b = g2.inverse(x2 + q);
  return {a.price, b.price, a.clamped || b.clamped};
}

double block_revenue(const GammaFunction& g1, const GammaFunction& g2, double x1, double x2, double q) {
  const auto c = clear_market(g1, g2, x1, x2, q);
  return q * (c.p2 - c.p1);
}

std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Lower: return "lower";
    case Regime::Interior: return "interior";
    case Regime::Upper: return "upper";
  }
  return "?";
}

namespace {

double revenue_slope(const GammaFunction& g1, const GammaFunction& g2, double x1, double x2, double q) {
  const auto c = clear_market(g1, g2, x1, x2, q);
  return (c.p2 - c.p1) + q * (1.0 / g2.derivative(c.p2) + 1.0 / g1.derivative(c.p1));
}

}  // namespace

OptimalQ optimal_q(double x1, double x2, const GammaFunction& g1, const GammaFunction& g2, double q_max,
                   double marginal_cost) {
  if (!(q_max > 0.0)) throw Error(Errc::InvalidArgument, "q_max must be > 0");
  if (!(marginal_cost >= 0.0)) throw Error(Errc::InvalidArgument, "marginal cost must be >= 0");
  const double spread0 = g2.inverse(x2).price - g1.inverse(x1).price;
  if (spread0 <= marginal_cost) return {0.0, Regime::Lower, 0.0, false};

  auto f = [&](double q) { return block_revenue(g1, g2, x1, x2, q); };
  auto g = [&](double q) { return revenue_slope(g1, g2, x1, x2, q) - marginal_cost; };
  auto net = [&](const OptimalQ& o) { return o.revenue - marginal_cost * o.q; };

  OptimalQ best{q_max, Regime::Upper, f(q_max), false};
  const double delta = 1e-10 * q_max;
  constexpr int kScan = 32;
  double qa = delta, ga = g(qa);
  for (int k = 1; k <= kScan; ++k) {
    const double qb = k == kScan ? q_max - delta : delta + (q_max - 2 * delta) * k / kScan;
    const double gb = g(qb);
    // A + to - sign change brackets a local maximum of the revenue.
    if (ga > 0.0 && gb <= 0.0) {
      const auto r = find_root(g, qa, qb, 1e-12 * std::max(1.0, q_max));
      if (!r.converged) {
        OptimalQ scan{0.0, Regime::Lower, 0.0, true};
        for (int i = 0; i <= 512; ++i) {
          const double q = q_max * i / 512.0;
          const OptimalQ cand{q, Regime::Interior, f(q), true};
          if (net(cand) > net(scan)) scan = cand;
        }
        if (scan.q == q_max) scan.regime = Regime::Upper;
        return scan;
      }
      const OptimalQ cand{r.x, Regime::Interior, f(r.x), false};
      if (net(cand) > net(best)) best = cand;
    }
    qa = qb;
    ga = gb;
  }
  return best;
}

double naive_q(double x1, double x2, const GammaFunction& g1, const GammaFunction& g2, double q_max,
               double marginal_cost) {
  return g2.inverse(x2).price - g1.inverse(x1).price > marginal_cost ? q_max : 0.0;
}

double price_form_q(double p1, double p2, double d1, double d2, double q_max) {
  const double denom = 1.0 / d2 + 1.0 / d1;
  if (denom == 0.0 || !std::isfinite(denom)) throw Error(Errc::ZeroSlopeSum, "1/Gamma1' + 1/Gamma2' is zero or not finite");
  return std::min(std::max((p1 - p2) / denom, 0.0), q_max);
}

double spread_impact(double q, const GammaFunction& g1, const GammaFunction& g2, double x1, double x2) {
  const auto c = clear_market(g1, g2, x1, x2, q);
  const auto z = clear_market(g1, g2, x1, x2, 0.0);
  return (c.p2 - c.p1) - (z.p2 - z.p1);
}

// ---- Monte Carlo ------------------------------------------------------------------------

std::uint64_t RevenueReport::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::vector<double>& v) {
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)), h);
  };
  mix(x1);
  mix(x2);
  mix(q);
  mix(revenue);
  return h;
}

RevenueReport revenue_mc(const StoragePolicy& policy, const ErrorModel& err1, const ErrorModel& err2,
                         const GammaFunction& g1, const GammaFunction& g2, int n, std::uint64_t seed) {
  if (n < 1) throw Error(Errc::InvalidArgument, "Monte Carlo needs n >= 1");
  if (!(policy.q_max > 0.0)) throw Error(Errc::InvalidArgument, "q_max must be > 0");
  err1.validate();
  err2.validate();
  RevenueReport r;
  const auto N = static_cast<std::size_t>(n);
  for (auto* v : {&r.x1, &r.x2, &r.q, &r.revenue, &r.delta_p1, &r.delta_p2, &r.delta_spread}) v->assign(N, 0.0);
  r.regime.assign(N, Regime::Lower);
  std::vector<char> fell_back(N, 0);
  parallel_for(N, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    const double x1 = err1.sample(rng), x2 = err2.sample(rng);
    double q;
    Regime reg;
    if (policy.mode == PolicyMode::PriceImpact) {
      const auto o = optimal_q(x1, x2, g1, g2, policy.q_max, policy.marginal_cost);
      q = o.q;
      reg = o.regime;
      fell_back[i] = o.fallback;
    } else {
      q = naive_q(x1, x2, g1, g2, policy.q_max, policy.marginal_cost);
      reg = q == 0.0 ? Regime::Lower : Regime::Upper;
    }
    const auto c = clear_market(g1, g2, x1, x2, q);
    const auto z = clear_market(g1, g2, x1, x2, 0.0);
    r.x1[i] = x1;
    r.x2[i] = x2;
    r.q[i] = q;
    r.regime[i] = reg;
    r.revenue[i] = q * (c.p2 - c.p1) + 0.0;  // no -0 from the lower corner
    r.delta_p1[i] = c.p1 - z.p1;
    r.delta_p2[i] = c.p2 - z.p2;
    r.delta_spread[i] = (c.p2 - c.p1) - (z.p2 - z.p1);
  });
  r.mean = mean(r.revenue);
  r.q05 = quantile(r.revenue, 0.05);
  r.q50 = quantile(r.revenue, 0.50);
  r.q95 = quantile(r.revenue, 0.95);
  r.mean_throughput = mean(r.q);
  std::array<std::size_t, 3> counts{};
  for (std::size_t i = 0; i < N; ++i) {
    ++counts[static_cast<int>(r.regime[i])];
    r.fallbacks += fell_back[i];
  }
  for (int k = 0; k < 3; ++k) r.shares[k] = static_cast<double>(counts[k]) / static_cast<double>(N);
  return r;
}

std::vector<CapacityRow> capacity_sweep(const std::vector<double>& q_grid, const ErrorModel& err1,
                                        const ErrorModel& err2, const GammaFunction& g1, const GammaFunction& g2,
                                        int n, std::uint64_t seed, double marginal_cost) {
  if (!std::is_sorted(q_grid.begin(), q_grid.end())) throw Error(Errc::InvalidArgument, "capacity grid must be sorted");
  std::vector<CapacityRow> rows;
  for (double qm : q_grid) {
    const auto r = revenue_mc({qm, PolicyMode::PriceImpact, marginal_cost}, err1, err2, g1, g2, n, seed);
    rows.push_back({qm, mean(r.delta_p1), mean(r.delta_p2), mean(r.delta_spread), r.mean, r.mean_throughput, r.shares});
  }
  return rows;
}

PaybackResult payback(double net_at_q, double net_at_q_plus, const PaybackConfig& cfg) {
  PaybackResult p;
  p.capex = cfg.delta_q * 1000.0 * cfg.capex_per_kwh * cfg.hours_share;
  p.daily_gain = net_at_q_plus - net_at_q;
  if (!(p.daily_gain > 0.0)) {
    p.years = std::numeric_limits<double>::infinity();
    p.no_gain = true;
  } else {
    p.years = p.capex / (365.0 * p.daily_gain);
  }
  return p;
}

PaybackResult payback(double q_max, const std::function<double(double)>& net_daily_value, const PaybackConfig& cfg) {
  return payback(net_daily_value(q_max), net_daily_value(q_max + cfg.delta_q), cfg);
}

std::vector<PaybackResult> payback_curve(const std::vector<CapacityRow>& rows, const PaybackConfig& cfg) {
  std::vector<PaybackResult> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (std::abs(rows[i + 1].q_max - rows[i].q_max - cfg.delta_q) > 1e-9 * std::max(1.0, cfg.delta_q))
      throw Error(Errc::InvalidArgument, "capacity grid spacing must equal delta_q");
    auto net = [&](const CapacityRow& r) { return r.mean_revenue - cfg.c_deg * r.mean_throughput; };
    out.push_back(payback(net(rows[i]), net(rows[i + 1]), cfg));
  }
  return out;
}

std::vector<std::vector<double>> policy_surface(const std::vector<double>& x1_grid, const std::vector<double>& x2_grid,
                                                const GammaFunction& g1, const GammaFunction& g2,
                                                const StoragePolicy& policy) {
  std::vector<std::vector<double>> q(x1_grid.size(), std::vector<double>(x2_grid.size()));
  parallel_for(x1_grid.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < x2_grid.size(); ++j) {
      const double x1 = x1_grid[i], x2 = x2_grid[j];
      q[i][j] = policy.mode == PolicyMode::PriceImpact ? optimal_q(x1, x2, g1, g2, policy.q_max, policy.marginal_cost).q
                                                       : naive_q(x1, x2, g1, g2, policy.q_max, policy.marginal_cost);
    }
  });
  return q;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(Errc::Io, "cannot write " + p.string());
  return os;
}

}  // namespace

void save_revenue_report(const std::filesystem::path& csv, const RevenueReport& r) {
  auto os = open_out(csv);
  os << "draw,x1,x2,q,regime,revenue,delta_p1,delta_p2,delta_spread\n";
  for (std::size_t i = 0; i < r.q.size(); ++i)
    os << i << ',' << format_double(r.x1[i]) << ',' << format_double(r.x2[i]) << ',' << format_double(r.q[i]) << ','
       << to_string(r.regime[i]) << ',' << format_double(r.revenue[i]) << ',' << format_double(r.delta_p1[i]) << ','
       << format_double(r.delta_p2[i]) << ',' << format_double(r.delta_spread[i]) << '\n';
  if (!os) throw Error(Errc::Io, "failed writing " + csv.string());
}

void save_capacity_sweep(const std::filesystem::path& csv, const std::vector<CapacityRow>& rows,
                         const std::vector<PaybackResult>& payback) {
  auto os = open_out(csv);
  os << "q_max,mean_dp1,mean_dp2,mean_dspread,mean_revenue,mean_throughput,share_lower,share_interior,share_upper,"
        "payback_years\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << format_double(r.q_max) << ',' << format_double(r.mean_dp1) << ',' << format_double(r.mean_dp2) << ','
       << format_double(r.mean_dspread) << ',' << format_double(r.mean_revenue) << ','
       << format_double(r.mean_throughput) << ',' << format_double(r.shares[0]) << ',' << format_double(r.shares[1])
       << ',' << format_double(r.shares[2]) << ',';
    if (i < payback.size()) os << (std::isinf(payback[i].years) ? "inf" : format_double(payback[i].years));
    os << '\n';
  }
  if (!os) throw Error(Errc::Io, "failed writing " + csv.string());
}

void save_policy_surface(const std::filesystem::path& csv, const std::vector<double>& x1_grid,
                         const std::vector<double>& x2_grid, const std::vector<std::vector<double>>& q) {
  auto os = open_out(csv);
  os << "x1,x2,q\n";
  for (std::size_t i = 0; i < x1_grid.size(); ++i)
    for (std::size_t j = 0; j < x2_grid.size(); ++j)
      os << format_double(x1_grid[i]) << ',' << format_double(x2_grid[j]) << ',' << format_double(q[i][j]) << '\n';
  if (!os) throw Error(Errc::Io, "failed writing " + csv.string());
}

}  // namespace meritcurve
