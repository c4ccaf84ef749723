#include "meritcurve/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "meritcurve/error.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

CurveStats curve_stats(const AggregatedCurve& curve, const ParametricCurve& fit) {
  CurveStats s;
  const auto& pts = curve.points();
  std::vector<double> orders;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dv = std::abs(pts[i].volume - pts[i - 1].volume);
    if (dv == 0.0) continue;
    orders.push_back(dv);
    if (pts[i].price < fit.p_start) s.count_before_start += 1;
    if (pts[i].price > fit.p_end) s.count_after_end += 1;
  }
  s.count = static_cast<double>(orders.size());
  if (!orders.empty()) s.largest_order = *std::max_element(orders.begin(), orders.end());
  if (orders.size() >= 2 && variance(orders) > 0.0) {
    s.skewness = skewness(orders);
    s.kurtosis = excess_kurtosis(orders);
  }
  return s;
}

namespace {

int day_index(Date d) { return std::chrono::sys_days(d).time_since_epoch().count(); }

bool contains(const std::vector<Date>& v, Date d) { return std::find(v.begin(), v.end(), d) != v.end(); }

}  // namespace

FeatureTable build_features(const FeatureInputs& in) {
  const auto& P = in.params;
  if (in.max_lag < 1) throw Error(Errc::InvalidArgument, "max_lag must be >= 1");
  if (P.size() % 24 != 0) throw Error(Errc::MisalignedSeries, "parameter history must hold 24 hours per day");
  const std::size_t n_days = P.size() / 24;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P[i].hour != static_cast<int>(i % 24) + 1 || P[i].day != P[i - i % 24].day)
      throw Error(Errc::MisalignedSeries, "hours out of order on " + format_date(P[i].day));
    if (i >= 24 && i % 24 == 0 && day_index(P[i].day) != day_index(P[i - 24].day) + 1)
      throw Error(Errc::MisalignedSeries, "gap before " + format_date(P[i].day));
  }
  if (!in.stats.empty() && in.stats.size() != P.size())
    throw Error(Errc::MisalignedSeries, "order statistics not aligned with parameters");

  std::map<int, const FeatureVector*> daily;
  for (const auto& d : in.daily) daily[day_index(d.day)] = &d.features;
  std::map<std::pair<int, int>, const ExternalRecord*> ext;
  for (const auto& e : in.external) {
    if (e.values.size() != in.external_names.size())
      throw Error(Errc::MisalignedSeries, "external record width mismatch on " + format_date(e.day));
    ext[{day_index(e.day), e.hour}] = &e;
  }

  FeatureTable t;
  auto& names = t.X.names;
  const auto& pn = ParametricCurve::param_names();
  for (int k = 1; k <= in.max_lag; ++k)
    for (auto n : pn) names.push_back("lag" + std::to_string(k) + "_" + std::string(n));
  for (const char* which : {"U", "L"})
    for (int h = 1; h <= 24; ++h) names.push_back(std::string("prev_") + which + "_h" + std::to_string(h));
  if (!in.stats.empty())
    for (const char* n : {"skewness", "kurtosis", "largest_order", "count_before_start", "count_after_end", "count"})
      names.push_back(std::string("prev_") + n);
  for (const char* n : {"hour", "holiday", "school_holiday", "night", "peak", "weekend", "special_event"})
    names.push_back(n);
  if (!in.daily.empty())
    for (auto n : FeatureVector::names()) names.emplace_back(n);
  for (const auto& n : in.external_names) names.push_back("ext_" + n);

  const auto lag = static_cast<std::size_t>(in.max_lag);
  std::vector<double> row;
  for (std::size_t d = lag; d < n_days; ++d) {
    const Date day = P[d * 24].day;
    const std::chrono::weekday wd{std::chrono::sys_days(day)};
    const bool weekend = wd == std::chrono::Saturday || wd == std::chrono::Sunday;
    for (int h = 1; h <= 24; ++h) {
      const std::size_t i = d * 24 + static_cast<std::size_t>(h - 1);
      row.clear();
      for (std::size_t k = 1; k <= lag; ++k)
        for (double v : P[i - 24 * k].curve.params()) row.push_back(v);
      for (int hh = 0; hh < 24; ++hh) row.push_back(P[(d - 1) * 24 + static_cast<std::size_t>(hh)].curve.U);
      for (int hh = 0; hh < 24; ++hh) row.push_back(P[(d - 1) * 24 + static_cast<std::size_t>(hh)].curve.L);
      if (!in.stats.empty()) {
        const auto& s = in.stats[i - 24];
        for (double v : {s.skewness, s.kurtosis, s.largest_order, s.count_before_start, s.count_after_end, s.count})
          row.push_back(v);
      }
      const bool night = h <= 6 || h >= 23;
      const bool peak = !weekend && h >= 9 && h <= 20;
      for (double v : {static_cast<double>(h), contains(in.calendar.holidays, day) ? 1.0 : 0.0,
                       contains(in.calendar.school_holidays, day) ? 1.0 : 0.0, night ? 1.0 : 0.0, peak ? 1.0 : 0.0,
                       weekend ? 1.0 : 0.0, contains(in.calendar.special_events, day) ? 1.0 : 0.0})
        row.push_back(v);
      if (!in.daily.empty()) {
        const auto it = daily.find(day_index(day));
        if (it == daily.end()) throw Error(Errc::MisalignedSeries, "no daily features for " + format_date(day));
        for (double v : it->second->values()) row.push_back(v);
      }
      if (!in.external_names.empty()) {
        const auto it = ext.find({day_index(day), h});
        if (it == ext.end())
          throw Error(Errc::MisalignedSeries, "no external values for " + format_date(day) + " hour " + std::to_string(h));
        for (double v : it->second->values) row.push_back(v);
      }
      t.X.append_row(row);
      t.targets.push_back(P[i].curve.params());
      t.naive.push_back(P[i - 24].curve.params());
      t.days.push_back(day);
      t.hours.push_back(h);
    }
  }
  return t;
}

std::vector<double> first_difference(std::span<const double> x) {
  std::vector<double> d;
  if (x.size() < 2) return d;
  d.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::DimMismatch, "spearman needs equal lengths");
  if (a.size() < 3) throw Error(Errc::InvalidArgument, "spearman needs at least 3 observations");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(Errc::ConstantSeries, "constant series has undefined ranks");
  return sab / std::sqrt(saa * sbb);
}

ScreenResult spearman_screen(const std::vector<std::vector<double>>& columns, std::span<const double> target,
                             double threshold) {
  ScreenResult r;
  r.rho.assign(columns.size(), 0.0);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    try {
      r.rho[c] = spearman(columns[c], target);
    } catch (const Error& e) {
      if (e.code() != Errc::ConstantSeries) throw;
      r.constant.push_back(c);
      continue;
    }
    if (std::abs(r.rho[c]) >= threshold) r.selected.push_back(c);
  }
  return r;
}

}  // namespace meritcurve
