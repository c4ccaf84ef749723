#include "meritcurve/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "meritcurve/csv.hpp"
#include "meritcurve/error.hpp"
#include "meritcurve/numerics.hpp"

namespace meritcurve {

std::string_view to_string(Side side) noexcept { return side == Side::Supply ? "supply" : "demand"; }

Side parse_side(std::string_view s) {
  if (s == "supply" || s == "Supply") return Side::Supply;
  if (s == "demand" || s == "Demand") return Side::Demand;
  throw Error(Errc::InvalidArgument, "unknown side '" + std::string(s) + "'");
}

PriceBounds PriceBounds::defaults(Side side) noexcept {
  return side == Side::Demand ? PriceBounds{-300.0, 3000.0} : PriceBounds{-500.0, 3000.0};
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

Date parse_date(std::string_view s) {
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw Error(Errc::MalformedRow, "bad date '" + std::string(s) + "'");
  const auto y = parse_int(s.substr(0, 4));
  const auto m = parse_int(s.substr(5, 2));
  const auto d = parse_int(s.substr(8, 2));
  if (!y || !m || !d) throw Error(Errc::MalformedRow, "bad date '" + std::string(s) + "'");
  Date out{std::chrono::year(static_cast<int>(*y)), std::chrono::month(static_cast<unsigned>(*m)),
           std::chrono::day(static_cast<unsigned>(*d))};
  if (!out.ok()) throw Error(Errc::MalformedRow, "invalid date '" + std::string(s) + "'");
  return out;
}

AggregatedCurve::AggregatedCurve(Side side, Date day, int hour, std::vector<CurvePoint> points)
    : AggregatedCurve(side, day, hour, std::move(points), PriceBounds::defaults(side)) {}

AggregatedCurve::AggregatedCurve(Side side, Date day, int hour, std::vector<CurvePoint> points,
                                 PriceBounds bounds)
    : side_(side), day_(day), hour_(hour), bounds_(bounds), points_(std::move(points)) {
  const std::string where = format_date(day_) + " hour " + std::to_string(hour_);
  if (hour_ < 1 || hour_ > 24) throw Error(Errc::InvalidArgument, "hour out of 1..24 at " + where);
  if (points_.empty()) throw Error(Errc::EmptyHour, "no points at " + where);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.price) || !std::isfinite(p.volume))
      throw Error(Errc::MalformedRow, "non-finite point at " + where);
    if (p.volume < 0.0) throw Error(Errc::MalformedRow, "negative volume at " + where);
    if (!bounds_.contains(p.price))
      throw Error(Errc::OutOfRange, "price " + format_double(p.price) + " outside bounds at " + where);
    if (i == 0) continue;
    const auto& q = points_[i - 1];
    if (!(p.price > q.price))
      throw Error(Errc::MonotonicityViolation, "prices not strictly increasing at " + where);
    const bool ok = side_ == Side::Supply ? p.volume >= q.volume : p.volume <= q.volume;
    if (!ok)
      throw Error(Errc::MonotonicityViolation,
                  std::string(to_string(side_)) + " volume order violated at " + where);
  }
}

std::vector<double> AggregatedCurve::prices() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.price);
  return out;
}

std::vector<double> AggregatedCurve::volumes() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.volume);
  return out;
}

double AggregatedCurve::step_value(double p) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), p,
                             [](double v, const CurvePoint& c) { return v < c.price; });
  if (it == points_.begin()) return points_.front().volume;
  return std::prev(it)->volume;
}

double AggregatedCurve::linear_value(double p) const {
  if (p <= points_.front().price) return points_.front().volume;
  if (p >= points_.back().price) return points_.back().volume;
  auto it = std::upper_bound(points_.begin(), points_.end(), p,
                             [](double v, const CurvePoint& c) { return v < c.price; });
  const auto& b = *it;
  const auto& a = *std::prev(it);
  const double t = (p - a.price) / (b.price - a.price);
  return a.volume + t * (b.volume - a.volume);
}

namespace {

struct DayHour {
  int days;  // sys_days count
  int hour;
  auto operator<=>(const DayHour&) const = default;
};

int day_number(Date d) { return std::chrono::sys_days(d).time_since_epoch().count(); }

Date from_day_number(int n) { return Date(std::chrono::sys_days(std::chrono::days(n))); }

}  // namespace

std::vector<AggregatedCurve> read_curves(std::istream& in, Side side, PriceBounds bounds) {
  std::map<DayHour, std::vector<CurvePoint>> groups;
  for (const auto& row : csv::read_rows(in)) {
    const std::string at = "line " + std::to_string(row.line_no);
    if (row.fields.size() != 4) throw Error(Errc::MalformedRow, at + ": expected 4 columns");
    const Date day = parse_date(row.fields[0]);
    const auto hour = parse_int(row.fields[1]);
    const auto price = parse_double(row.fields[2]);
    const auto volume = parse_double(row.fields[3]);
    if (!hour || !price || !volume) throw Error(Errc::MalformedRow, at + ": unparsable field");
    if (*hour < 1 || *hour > 24) throw Error(Errc::MalformedRow, at + ": hour outside 1..24");
    groups[{day_number(day), static_cast<int>(*hour)}].push_back({*price, *volume});
  }
  std::vector<AggregatedCurve> curves;
  curves.reserve(groups.size());
  for (auto& [key, pts] : groups) {
    std::stable_sort(pts.begin(), pts.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.price < b.price; });
    curves.emplace_back(side, from_day_number(key.days), key.hour, std::move(pts), bounds);
  }
  return curves;
}

std::vector<AggregatedCurve> load_curves(const std::filesystem::path& path, Side side) {
  return load_curves(path, side, PriceBounds::defaults(side));
}

std::vector<AggregatedCurve> load_curves(const std::filesystem::path& path, Side side, PriceBounds bounds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_curves(in, side, bounds);
}

void write_curves(std::ostream& out, const std::vector<AggregatedCurve>& curves) {
  for (const auto& c : curves) {
    const std::string prefix = format_date(c.day()) + "," + std::to_string(c.hour()) + ",";
    for (const auto& p : c.points())
      out << prefix << format_double(p.price) << ',' << format_double(p.volume) << '\n';
  }
}

void save_curves(const std::filesystem::path& path, const std::vector<AggregatedCurve>& curves) {
  std::ostringstream os;
  write_curves(os, curves);
  csv::write_file_atomic(path, os.str());
}

const std::array<std::string_view, FeatureVector::kSize>& FeatureVector::names() {
  static const std::array<std::string_view, kSize> n{"coal",    "oil",     "gas",     "at_mean",
                                                     "at_min",  "at_max",  "ghi_mean", "ghi_max",
                                                     "ghi_min", "ws_mean", "ws_min",  "ws_max"};
  return n;
}

std::array<double, FeatureVector::kSize> FeatureVector::values() const {
  return {coal, oil, gas, at_mean, at_min, at_max, ghi_mean, ghi_max, ghi_min, ws_mean, ws_min, ws_max};
}

FeatureVector FeatureVector::from_values(const std::array<double, kSize>& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11]};
}

void FeatureVector::validate() const {
  for (double v : values())
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "non-finite feature value");
  if (ghi_min < 0.0) throw Error(Errc::InvalidArgument, "ghi_min must be >= 0");
}

std::vector<DailyFeatures> load_features(const std::filesystem::path& path) {
  std::vector<DailyFeatures> out;
  for (const auto& row : csv::read_file(path, /*allow_header=*/true)) {
    const std::string at = "line " + std::to_string(row.line_no);
    if (row.fields.size() != 1 + FeatureVector::kSize)
      throw Error(Errc::MalformedRow, at + ": expected 13 columns");
    std::array<double, FeatureVector::kSize> v{};
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto x = parse_double(row.fields[i + 1]);
      if (!x) throw Error(Errc::MalformedRow, at + ": unparsable feature");
      v[i] = *x;
    }
    DailyFeatures df{parse_date(row.fields[0]), FeatureVector::from_values(v)};
    df.features.validate();
    out.push_back(df);
  }
  return out;
}

void save_features(const std::filesystem::path& path, const std::vector<DailyFeatures>& rows) {
  std::ostringstream os;
  os << "day";
  for (auto n : FeatureVector::names()) os << ',' << n;
  os << '\n';
  for (const auto& r : rows) {
    os << format_date(r.day);
    for (double v : r.features.values()) os << ',' << format_double(v);
    os << '\n';
  }
  csv::write_file_atomic(path, os.str());
}

namespace {

Date last_sunday(std::chrono::year y, std::chrono::month m) {
  return Date(std::chrono::year_month_weekday_last(y, m, std::chrono::weekday_last(std::chrono::Sunday)));
}

}  // namespace

bool is_spring_forward(Date d) { return d == last_sunday(d.year(), std::chrono::March); }
bool is_fall_back(Date d) { return d == last_sunday(d.year(), std::chrono::October); }

std::vector<HourlyRecord> dst_fix(const std::vector<HourlyRecord>& series) {
  std::vector<HourlyRecord> out;
  out.reserve(series.size() + 2);
  std::size_t i = 0;
  while (i < series.size()) {
    std::size_t j = i;
    while (j < series.size() && series[j].day == series[i].day) ++j;
    const std::span<const HourlyRecord> day(series.data() + i, j - i);
    const Date d = series[i].day;
    const std::string where = format_date(d);
    for (const auto& r : day)
      if (r.hour < 0 || r.hour > 23) throw Error(Errc::NonHourlySeries, "hour outside 0..23 on " + where);

    if (day.size() == 24) {
      for (int h = 0; h < 24; ++h)
        if (day[static_cast<std::size_t>(h)].hour != h)
          throw Error(Errc::NonHourlySeries, "hours out of order on " + where);
      out.insert(out.end(), day.begin(), day.end());
    } else if (day.size() == 23) {
      if (!is_spring_forward(d)) throw Error(Errc::NonHourlySeries, "23-hour day is not a DST switch: " + where);
      // Exactly one clock hour is skipped; everything else ascends by one.
      std::size_t k = 0;
      for (int h = 0; h < 24; ++h) {
        if (k < day.size() && day[k].hour == h) {
          out.push_back(day[k++]);
        } else {
          if (k >= day.size() || day[k].hour != h + 1)
            throw Error(Errc::NonHourlySeries, "irregular spring-forward day " + where);
          out.push_back({d, h, day[k].value});
        }
      }
      if (k != day.size()) throw Error(Errc::NonHourlySeries, "irregular spring-forward day " + where);
    } else if (day.size() == 25) {
      if (!is_fall_back(d)) throw Error(Errc::NonHourlySeries, "25-hour day is not a DST switch: " + where);
      bool dropped = false;
      int expected = 0;
      for (std::size_t k = 0; k < day.size(); ++k) {
        if (!dropped && k > 0 && day[k].hour == day[k - 1].hour) {
          dropped = true;
          continue;
        }
        if (day[k].hour != expected) throw Error(Errc::NonHourlySeries, "irregular fall-back day " + where);
        out.push_back(day[k]);
        ++expected;
      }
      if (!dropped || expected != 24) throw Error(Errc::NonHourlySeries, "irregular fall-back day " + where);
    } else {
      throw Error(Errc::NonHourlySeries,
                  std::to_string(day.size()) + " hourly entries on " + where);
    }
    i = j;
  }
  return out;
}

double fuel_cost(double fuel_price, double heat_rate, double emission_factor, double co2_price) {
  if (fuel_price < 0 || heat_rate < 0 || emission_factor < 0 || co2_price < 0)
    throw Error(Errc::NegativeInput, "fuel_cost inputs must be non-negative");
  return fuel_price * heat_rate + emission_factor * co2_price;
}

}  // namespace meritcurve
