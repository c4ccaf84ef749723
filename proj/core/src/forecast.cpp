#include "meritcurve/forecast.hpp"

#include <cmath>

#include "meritcurve/error.hpp"
#include "meritcurve/parallel.hpp"

namespace meritcurve {

ForecastConfig ForecastConfig::defaults(Side side) {
  ForecastConfig c;
  c.side = side;
  for (std::size_t i = 0; i < c.hp.size(); ++i) c.hp[i] = GbtHyperparams::preset(side, ParametricCurve::param_names()[i]);
  return c;
}

namespace {

// Day-over-day differences within each delivery hour, pooled over hours.
// Rows are day-major with 24 hours per day.
std::vector<double> hourly_difference(const std::vector<double>& x) {
  std::vector<double> d;
  if (x.size() < 48) return d;
  d.reserve(x.size() - 24);
  for (std::size_t h = 0; h < 24; ++h)
    for (std::size_t r = h + 24; r < x.size(); r += 24) d.push_back(x[r] - x[r - 24]);
  return d;
}

double curve_mae(const ParametricCurve& pc, const DenseCurve& d) {
  const auto r = reconstruct(pc, d.grid);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += std::abs(r[i] - d.values[i]);
  return s / static_cast<double>(r.size());
}

}  // namespace

ForecastResult run_forecast(const std::vector<AggregatedCurve>& curves, const std::vector<DailyFeatures>& daily,
                            const CalendarConfig& calendar, const ForecastConfig& cfg) {
  if (cfg.test_days < 1) throw Error(Errc::InvalidConfig, "test_days must be >= 1");
  for (const auto& c : curves)
    if (c.side() != cfg.side) throw Error(Errc::InvalidArgument, "curve side does not match the forecast side");

  // Per-hour codec fits (independent, parallel).
  FeatureInputs in;
  in.params.resize(curves.size());
  in.stats.resize(curves.size());
  std::vector<DenseCurve> dense(curves.size());
  parallel_for(curves.size(), [&](std::size_t i) {
    const auto& c = curves[i];
    const std::size_t n = cfg.fit.grid_size ? cfg.fit.grid_size : grid_size_for_step(c.bounds(), kDefaultGridStep);
    dense[i] = interpolate_uniform(c, n);
    const auto pc = fit_parametric(dense[i], c.side(), cfg.fit);
    in.params[i] = {c.day(), c.hour(), pc};
    in.stats[i] = curve_stats(c, pc);
  });
  in.daily = daily;
  in.calendar = calendar;
  in.max_lag = cfg.max_lag;
  const FeatureTable t = build_features(in);

  const std::size_t n_test = static_cast<std::size_t>(cfg.test_days) * 24;
  if (t.X.rows < n_test + 48)
    throw Error(Errc::InvalidConfig, "test horizon leaves fewer than two training days after the lag window");
  const std::size_t n_train = t.X.rows - n_test;
  const DataMatrix Xtrain = t.X.select_rows(0, n_train);

  ForecastResult out;
  out.feature_names = t.X.names;
  std::vector<std::vector<double>> col_diff(t.X.cols());
  for (std::size_t c = 0; c < t.X.cols(); ++c) col_diff[c] = hourly_difference(Xtrain.column(c));

  parallel_for(ParametricCurve::kParams, [&](std::size_t k) {
    std::vector<double> y(n_train);
    for (std::size_t r = 0; r < n_train; ++r) y[r] = t.targets[r][k];
    const auto screen = spearman_screen(col_diff, hourly_difference(y), cfg.screen_threshold);
    auto cols = screen.selected;
    if (cols.empty()) cols.push_back(static_cast<std::size_t>(std::distance(
        screen.rho.begin(), std::max_element(screen.rho.begin(), screen.rho.end(),
                                             [](double a, double b) { return std::abs(a) < std::abs(b); }))));
    GbtHyperparams hp = cfg.hp[k];
    hp.seed = cfg.seed * 1000003ULL + k;
    GbtModel m = train_gbt(Xtrain.select_columns(cols), y, hp);
    // Re-index splits onto the full feature table.
    for (auto& tree : m.trees)
      for (auto& node : tree.nodes)
        if (node.feature >= 0) node.feature = static_cast<int>(cols[static_cast<std::size_t>(node.feature)]);
    m.n_features = t.X.cols();
    out.models[k] = std::move(m);
    out.selected[k] = std::move(cols);
  });

  // Dense curves of table row r: the table starts after max_lag days.
  const std::size_t offset = static_cast<std::size_t>(cfg.max_lag) * 24;
  std::array<double, 24> mh{}, nh{};
  double sm = 0.0, sn = 0.0;
  for (std::size_t r = n_train; r < t.X.rows; ++r) {
    const auto pc = forecast_curve(out.models, t.X.row(r), cfg.side);
    const auto naive = repair_curve(t.naive[r], cfg.side);
    const auto& d = dense[offset + r];
    const double em = curve_mae(pc, d), en = curve_mae(naive, d);
    out.predicted.push_back({t.days[r], t.hours[r], pc});
    out.naive.push_back({t.days[r], t.hours[r], naive});
    out.actual.push_back(in.params[offset + r]);
    out.model_mae.push_back(em);
    out.naive_mae.push_back(en);
    sm += em;
    sn += en;
    mh[static_cast<std::size_t>(t.hours[r] - 1)] += em;
    nh[static_cast<std::size_t>(t.hours[r] - 1)] += en;
  }
  out.mase = mase(sm, sn);
  for (std::size_t h = 0; h < 24; ++h) out.mase_by_hour[h] = nh[h] > 0 ? mh[h] / nh[h] : std::nan("");
  return out;
}

}  // namespace meritcurve
