#include "meritcurve/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "meritcurve/error.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

SynthConfig SynthConfig::defaults(Side side) {
  SynthConfig c;
  c.side = side;
  if (side == Side::Supply) {
    c.U = {15000.0, 30000.0};
    c.L = {50000.0, 80000.0};
    c.window_start = {-20.0, 120.0};
  }
  return c;
}

void SynthConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(Errc::InvalidConfig, m); };
  const PriceBounds b = price_bounds();
  if (days < 0) bad("days must be >= 0");
  if (!(b.lo < b.hi)) bad("price bounds must satisfy lo < hi");
  for (const Range* r : {&U, &L, &window_start, &window_width})
    if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) bad("ranges need lo <= hi");
  if (U.lo < 0.0 || L.lo < 0.0) bad("plateau volumes must be >= 0");
  if (side == Side::Demand && !(U.lo > L.hi)) bad("demand needs the U range above the L range");
  if (side == Side::Supply && !(L.lo > U.hi)) bad("supply needs the L range above the U range");
  if (!(price_step > 0.0)) bad("price_step must be positive");
  const double span = b.hi - b.lo;
  if (std::abs(span / price_step - std::round(span / price_step)) > 1e-9) bad("price_step must divide the bounds");
  if (window_width.lo < 4.0 * price_step) bad("window_width must cover at least 5 price steps");
  if (window_start.lo < b.lo + 2.0 * price_step || window_start.hi + window_width.hi > b.hi - 2.0 * price_step)
    bad("elastic window must stay two price steps inside the bounds");
  if (!(max_shape_weight >= 0.0 && max_shape_weight < 1.0)) bad("max_shape_weight must be in [0, 1)");
  if (plateau_stride < 1) bad("plateau_stride must be >= 1");
  if (!(noise >= 0.0)) bad("noise must be >= 0");
  if (!(persistence >= 0.0 && persistence < 1.0)) bad("persistence must be in [0, 1)");
  if (!(idiosyncratic >= 0.0)) bad("idiosyncratic must be >= 0");
}

ParametricCurve family_curve(Side side, double U, double L, double p_start, double p_end, double w, double z) {
  const double d = L - U;
  // Power series in s.
  const double a0 = U, a1 = d * (1.0 - w + z), a2 = d * (3.0 * w - 3.0 * z), a3 = d * (2.0 * z - 2.0 * w);
  // Substitute s = (t + 1) / 2.
  const double b0 = a0 + a1 / 2 + a2 / 4 + a3 / 8;
  const double b1 = a1 / 2 + a2 / 2 + 3 * a3 / 8;
  const double b2 = a2 / 4 + 3 * a3 / 8;
  const double b3 = a3 / 8;
  ParametricCurve pc;
  pc.side = side;
  pc.U = U;
  pc.L = L;
  pc.p_start = p_start;
  pc.p_end = p_end;
  pc.coef = {b0 + b2 / 2, b1 + 3 * b3 / 4, b2 / 2, b3 / 4};
  return pc;
}

namespace {

double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

struct DayState {
  double z = 0.0;     // persistent market state
  double temp = 0.0;  // weather anomaly
};

}  // namespace

SynthData synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  const PriceBounds b = cfg.price_bounds();
  const double step = cfg.price_step;
  const auto n_grid = static_cast<long>(std::llround((b.hi - b.lo) / step)) + 1;
  auto grid_at = [&](long i) { return i == n_grid - 1 ? b.hi : b.lo + step * static_cast<double>(i); };

  Rng rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SynthData out;
  out.curves.reserve(static_cast<std::size_t>(cfg.days) * 24);
  out.truth.reserve(static_cast<std::size_t>(cfg.days) * 24);
  out.features.reserve(static_cast<std::size_t>(cfg.days));

  // Loadings of each parameter score on (z, temp, hour profile).
  struct Loading {
    double z, temp, hour;
  };
  constexpr Loading kU{0.9, -0.5, 0.8}, kL{0.7, 0.3, -0.6}, kStart{0.6, 0.2, 0.5}, kWidth{-0.4, 0.3, 0.4},
      kShape{0.3, 0.0, 0.5}, kSkew{0.0, 0.4, 0.6};

  DayState st{gauss(rng), gauss(rng)};
  const double innov = std::sqrt(1.0 - cfg.persistence * cfg.persistence);
  double gas_walk = 0.0;
  for (int d = 0; d < cfg.days; ++d) {
    if (d > 0) {
      st.z = cfg.persistence * st.z + innov * gauss(rng);
      st.temp = 0.5 * st.temp + std::sqrt(0.75) * gauss(rng);
      gas_walk = 0.95 * gas_walk + 0.3 * gauss(rng);
    }
    const Date day{std::chrono::sys_days(cfg.start) + std::chrono::days(d)};
    const double season = std::sin(2.0 * std::numbers::pi * static_cast<double>(d) / 365.0);

    FeatureVector f;
    const double co2 = std::max(0.0, 25.0 + 3.0 * gas_walk);
    f.gas = fuel_cost(std::max(0.0, 15.0 + 3.0 * st.z + 1.0 * gas_walk + 0.2 * gauss(rng)), fuel::kGasHeatRate,
                      0.0, 0.0);
    f.coal = fuel_cost(std::max(0.0, 60.0 + 6.0 * st.z + 2.0 * gauss(rng)), fuel::kCoalHeatRate,
                       fuel::kCoalEmission, co2);
    f.oil = fuel_cost(std::max(0.0, 45.0 + 4.0 * st.z + 2.0 * gauss(rng)), fuel::kOilHeatRate, 0.0, 0.0);
    f.at_mean = 283.0 + 8.0 * season + 3.0 * st.temp;
    f.at_min = f.at_mean - 4.0 - std::abs(gauss(rng));
    f.at_max = f.at_mean + 4.0 + std::abs(gauss(rng));
    f.ghi_mean = std::max(20.0, 150.0 + 80.0 * season - 20.0 * st.temp + 10.0 * gauss(rng));
    f.ghi_max = 3.5 * f.ghi_mean;
    f.ghi_min = 0.0;
    f.ws_mean = 15.0 + 4.0 * std::abs(gauss(rng));
    f.ws_min = f.ws_mean * 0.3;
    f.ws_max = f.ws_mean * 2.0;
    out.features.push_back({day, f});

    for (int h = 1; h <= 24; ++h) {
      const double prof = std::sin(2.0 * std::numbers::pi * (h - 7) / 24.0);
      auto score = [&](const Loading& l) {
        return l.z * st.z + l.temp * st.temp + l.hour * prof + cfg.idiosyncratic * gauss(rng);
      };
      const double U = cfg.U.lerp(logistic(score(kU)));
      const double L = cfg.L.lerp(logistic(score(kL)));
      const double p0 = cfg.window_start.lerp(logistic(score(kStart)));
      const double width = cfg.window_width.lerp(logistic(score(kWidth)));
      const double w = cfg.max_shape_weight * logistic(score(kShape));
      const double z = 0.5 * (1.0 - w) * std::tanh(score(kSkew));

      const long ia = std::lround((p0 - b.lo) / step);
      const long ib = std::max(ia + 4, std::lround((p0 + width - b.lo) / step));
      const ParametricCurve truth = family_curve(cfg.side, U, L, grid_at(ia), grid_at(ib), w, z);

      std::vector<double> prices;
      for (long i = 0; i < n_grid; ++i)
        if ((i >= ia && i <= ib) || i % cfg.plateau_stride == 0 || i == n_grid - 1) prices.push_back(grid_at(i));
      std::vector<double> vol = reconstruct(truth, prices);
      if (cfg.noise > 0.0) {
        const double sd = cfg.noise * std::abs(U - L);
        for (double& v : vol) v += sd * gauss(rng);
        for (std::size_t i = 1; i < vol.size(); ++i)
          vol[i] = cfg.side == Side::Demand ? std::min(vol[i], vol[i - 1]) : std::max(vol[i], vol[i - 1]);
        for (double& v : vol) v = std::max(v, 0.0);
      }
      std::vector<CurvePoint> pts(prices.size());
      for (std::size_t i = 0; i < prices.size(); ++i) pts[i] = {prices[i], vol[i]};
      out.curves.emplace_back(cfg.side, day, h, std::move(pts), b);
      out.truth.push_back(truth);
    }
  }
  return out;
}

std::vector<AggregatedCurve> synth_curves(const SynthConfig& cfg) { return synth_dataset(cfg).curves; }

}  // namespace meritcurve
