#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "meritcurve/error.hpp"
#include "meritcurve/point_process.hpp"
#include "meritcurve/synth.hpp"

using namespace meritcurve;

namespace {

const Date kDay{std::chrono::year(2021), std::chrono::March, std::chrono::day(9)};

std::vector<AggregatedCurve> identical_hours(Side side, std::vector<CurvePoint> pts) {
  std::vector<AggregatedCurve> out;
  for (int h = 1; h <= 24; ++h) out.emplace_back(side, kDay, h, pts);
  return out;
}

// Random monotone step curves with volumes spread over several orders of
// magnitude so that plain differences are not always exact.
std::vector<AggregatedCurve> fuzz_day(Side side, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> npts(1, 40);
  const PriceBounds b = PriceBounds::defaults(side);
  std::uniform_real_distribution<double> price(b.lo + 0.1, b.hi);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  std::vector<AggregatedCurve> out;
  for (int h = 1; h <= 24; ++h) {
    std::vector<double> ps;
    const int n = npts(rng);
    for (int i = 0; i < n; ++i) ps.push_back(std::round(price(rng) * 100.0) / 100.0);
    if (frac(rng) < 0.3) ps.push_back(b.lo);
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    std::vector<double> vs(ps.size());
    double v = frac(rng) * std::pow(10.0, 1 + 4 * frac(rng));
    for (auto& x : vs) {
      x = v;
      const double step = frac(rng) < 0.2 ? 0.0 : frac(rng) * std::pow(10.0, -2 + 6 * frac(rng));
      v = std::max(0.0, side == Side::Supply ? v + step : v - step);
    }
    std::vector<CurvePoint> pts;
    for (std::size_t i = 0; i < ps.size(); ++i) pts.push_back({ps[i], vs[i]});
    out.emplace_back(side, kDay, h, pts);
  }
  return out;
}

}  // namespace

TEST(EncodeOrderbook, IdenticalSingleStepHours) {
  const auto book = encode_orderbook(identical_hours(Side::Supply, {{-500.0, 10.0}, {42.0, 35.0}}));
  ASSERT_EQ(book.prices.size(), 1u);
  EXPECT_EQ(book.prices[0], 42.0);
  for (double d : book.marks[0]) EXPECT_EQ(d, 25.0);
  for (double a : book.anchor) EXPECT_EQ(a, 10.0);
}

TEST(EncodeOrderbook, DisjointHoursGiveSeparateRows) {
  auto curves = identical_hours(Side::Supply, {{-500.0, 5.0}});
  curves[0] = AggregatedCurve(Side::Supply, kDay, 1, {{-500.0, 5.0}, {10.0, 8.0}});
  curves[1] = AggregatedCurve(Side::Supply, kDay, 2, {{-500.0, 5.0}, {20.0, 8.0}});
  const auto book = encode_orderbook(curves);
  ASSERT_EQ(book.prices, (std::vector<double>{10.0, 20.0}));
  EXPECT_EQ(book.marks[0][0], 3.0);
  EXPECT_EQ(book.marks[1][1], 3.0);
  for (int h = 1; h < 24; ++h) EXPECT_EQ(book.marks[0][h], 0.0);
  for (int h = 0; h < 24; ++h)
    if (h != 1) EXPECT_EQ(book.marks[1][h], 0.0);
}

TEST(EncodeOrderbook, MissingAndDuplicateHours) {
  auto curves = identical_hours(Side::Demand, {{0.0, 5.0}});
  auto missing = curves;
  missing.pop_back();
  try {
    encode_orderbook(missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingHour);
  }
  auto dup = curves;
  dup[23] = dup[22];
  try {
    encode_orderbook(dup);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateHour);
  }
}

TEST(EncodeOrderbook, FuzzedRoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  for (int day = 0; day < 300; ++day) {
    const Side side = day % 2 ? Side::Demand : Side::Supply;
    const auto curves = fuzz_day(side, rng);
    const auto book = encode_orderbook(curves);
    book.validate();
    for (const auto& row : book.marks)
      for (double d : row) EXPECT_TRUE(side == Side::Supply ? d >= 0.0 : d <= 0.0);
    const auto back = decode_orderbook(book);
    ASSERT_EQ(back.size(), 24u);
    for (int h = 0; h < 24; ++h) ASSERT_EQ(back[h], canonical_curve(curves[h])) << "day " << day << " hour " << h + 1;
  }
}

TEST(DecodeOrderbook, AllZeroMarksGiveConstantCurves) {
  DailyOrderBook book;
  book.side = Side::Demand;
  book.day = kDay;
  book.anchor.fill(12.5);
  for (const auto& c : decode_orderbook(book)) {
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.points()[0].volume, 12.5);
  }
}

TEST(DecodeOrderbook, SingleHourRowLeavesOthersConstant) {
  DailyOrderBook book;
  book.day = kDay;
  book.anchor.fill(1.0);
  book.prices = {100.0};
  HourVector row{};
  row[4] = 2.0;
  book.marks = {row};
  const auto curves = decode_orderbook(book);
  for (int h = 0; h < 24; ++h) EXPECT_EQ(curves[h].size(), h == 4 ? 2u : 1u);
  EXPECT_EQ(curves[4].points().back().volume, 3.0);
}

TEST(DecodeOrderbook, FinalVolumeIsAnchorPlusColumnSum) {
  SynthConfig cfg = SynthConfig::defaults(Side::Supply);
  cfg.days = 1;
  cfg.noise = 0.01;
  const auto book = encode_orderbook(synth_curves(cfg));
  const auto curves = decode_orderbook(book);
  for (int h = 0; h < 24; ++h) {
    long double sum = book.anchor[h];
    for (const auto& row : book.marks) sum += row[h];
    EXPECT_NEAR(curves[h].points().back().volume, static_cast<double>(sum), 1e-9 * std::abs(static_cast<double>(sum)));
  }
}

TEST(NormalizePrice, BreakpointsAndInverse) {
  EXPECT_EQ(normalize_price(3000.0), 1.0);
  EXPECT_NEAR(normalize_price(-150.0), 0.1, 1e-15);
  EXPECT_NEAR(normalize_price(550.0), 0.3, 1e-15);
  EXPECT_THROW(normalize_price(-500.0), Error);
  EXPECT_THROW(normalize_price(3000.5), Error);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> p(-499.99, 3000.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = p(rng);
    EXPECT_NEAR(denormalize_price(normalize_price(x)), x, 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST(Intensity, ClosedFormCompensator) {
  PiecewiseLinearIntensity lam({0.5, 1.0}, {2.0, 4.0});
  EXPECT_EQ(lam(0.25), 2.0);
  EXPECT_DOUBLE_EQ(lam(0.75), 3.0);
  EXPECT_DOUBLE_EQ(lam.compensator(0.5), 1.0);
  EXPECT_DOUBLE_EQ(lam.total(), 1.0 + 0.5 * 3.0);
  double s = 0;
  for (std::size_t j = 0; j < 2; ++j) s += lam.values()[j] * lam.basis_integral(j);
  EXPECT_DOUBLE_EQ(s, lam.total());
}

TEST(FitIntensity, ConstantRateRecoveredWithinThirtyPercent) {
  const auto nodes = PiecewiseLinearIntensity::default_nodes();
  ASSERT_EQ(nodes.size(), 30u);
  PiecewiseLinearIntensity truth(nodes, std::vector<double>(30, 200.0));
  Rng rng(11);
  const auto arrivals = thin_sample(truth, rng);
  const auto fit = fit_intensity(arrivals);
  // Interior coarse nodes carry enough mass for a one-run check.
  for (std::size_t j : {26u, 27u, 28u})
    EXPECT_NEAR(fit.lambda.values()[j], 200.0, 60.0) << "node " << j;
  EXPECT_NEAR(fit.lambda.total(), static_cast<double>(arrivals.size()), 1e-3 * arrivals.size());
}

TEST(FitIntensity, SingleArrivalHasUnitMass) {
  const std::vector<double> a{0.2};
  const auto fit = fit_intensity(a);
  EXPECT_NEAR(fit.lambda.total(), 1.0, 1e-3);
}

TEST(FitIntensity, NoArrivals) {
  try {
    fit_intensity(std::vector<double>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoArrivals);
  }
}

TEST(FitIntensity, NeverWorseThanBestConstant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> a(1 + rng() % 300);
    for (auto& x : a) x = std::max(1e-9, std::pow(u(rng), 1 + r % 4));
    std::sort(a.begin(), a.end());
    const auto fit = fit_intensity(a);
    PiecewiseLinearIntensity flat(fit.lambda.nodes(), std::vector<double>(30, static_cast<double>(a.size())));
    EXPECT_GE(fit.log_likelihood, intensity_log_likelihood(flat, a) - 1e-9);
    EXPECT_NEAR(fit.log_likelihood, intensity_log_likelihood(fit.lambda, a), 1e-9 * std::abs(fit.log_likelihood) + 1e-9);
  }
}

TEST(RescalingDiag, EquallySpacedConstantIsClosedForm) {
  const double c = 50.0;
  const int n = 10;
  PiecewiseLinearIntensity lam({0.5, 1.0}, {c, c});
  std::vector<double> a;
  for (int i = 1; i <= n; ++i) a.push_back(static_cast<double>(i) / n);
  const auto d = rescaling_diag(a, lam);
  ASSERT_EQ(d.scores.size(), 10u);
  for (double s : d.scores) EXPECT_NEAR(s, 1.0 - std::exp(-c / n), 1e-12);
}

TEST(RescalingDiag, ZeroIntensityOnArrival) {
  PiecewiseLinearIntensity lam({0.5, 1.0}, {0.0, 0.0});
  try {
    rescaling_diag(std::vector<double>{0.3}, lam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroIntensityOnArrival);
  }
}

TEST(RescalingDiag, MisspecifiedConstantScoresWorse) {
  const auto nodes = PiecewiseLinearIntensity::default_nodes();
  std::vector<double> v(30);
  for (std::size_t j = 0; j < 30; ++j)
    v[j] = 5.0 + 800.0 * (std::exp(-0.5 * std::pow((nodes[j] - 0.15) / 0.03, 2)) +
                          std::exp(-0.5 * std::pow((nodes[j] - 0.7) / 0.05, 2)));
  PiecewiseLinearIntensity truth(nodes, v);
  Rng rng(19);
  const auto a = thin_sample(truth, rng);
  PiecewiseLinearIntensity flat(nodes, std::vector<double>(30, static_cast<double>(a.size())));
  EXPECT_GT(rescaling_diag(a, flat).ks_statistic, rescaling_diag(a, fit_intensity(a).lambda).ks_statistic);
}

TEST(KsUniform, MatchesKnownStatistic) {
  // Sample {0.1, 0.4, 0.7}: D = max(1/3 - 0.1, 2/3 - 0.4, 1 - 0.7, 0.1, 0.4 - 1/3, 0.7 - 2/3) = 0.3.
  const auto [d, p] = ks_uniform({0.7, 0.1, 0.4});
  EXPECT_NEAR(d, 0.3, 1e-12);
  EXPECT_GT(p, 0.5);
  EXPECT_LE(p, 1.0);
}

TEST(ThinSample, ZeroIntensityIsEmpty) {
  PiecewiseLinearIntensity lam;
  Rng rng(1);
  EXPECT_TRUE(thin_sample(lam, rng).empty());
}

TEST(ThinSample, ConstantRateHasPoissonMoments) {
  PiecewiseLinearIntensity lam(PiecewiseLinearIntensity::default_nodes(), std::vector<double>(30, 100.0));
  std::vector<double> counts;
  for (int r = 0; r < 1000; ++r) {
    Rng rng(derive_seed(99, r));
    const auto a = thin_sample(lam, rng);
    ASSERT_TRUE(std::is_sorted(a.begin(), a.end()));
    for (double u : a) ASSERT_TRUE(u > 0.0 && u <= 1.0);
    counts.push_back(static_cast<double>(a.size()));
  }
  EXPECT_LE(std::abs(mean(counts) - 100.0), 4.0 * std::sqrt(100.0 / 1000));
  EXPECT_NEAR(std::sqrt(variance(counts)), 10.0, 1.0);
}

TEST(ThinSample, TriangularHistogramPassesChiSquare) {
  // lambda(u) = 400 u on (0, 1]; the first node sits close to 0.
  PiecewiseLinearIntensity lam({1e-9, 1.0}, {400e-9, 400.0});
  std::vector<double> bins(10, 0.0);
  for (int r = 0; r < 50; ++r) {
    Rng rng(derive_seed(123, r));
    for (double u : thin_sample(lam, rng)) bins[std::min(9, static_cast<int>(u * 10))] += 1;
  }
  double total = 0;
  for (double b : bins) total += b;
  double chi2 = 0;
  for (int k = 0; k < 10; ++k) {
    const double p = ((k + 1) * (k + 1) - k * k) / 100.0;
    chi2 += std::pow(bins[k] - total * p, 2) / (total * p);
  }
  EXPECT_LT(chi2, 21.67);  // chi-square 99th percentile, 9 degrees of freedom
}

TEST(OrderbookIo, SaveLoadRoundTrip) {
  std::mt19937_64 rng(2);
  std::vector<DailyOrderBook> books{encode_orderbook(fuzz_day(Side::Supply, rng)),
                                    encode_orderbook(fuzz_day(Side::Demand, rng))};
  books[1].day = Date{std::chrono::year(2021), std::chrono::March, std::chrono::day(10)};
  const auto path = std::filesystem::temp_directory_path() / "meritcurve_pp_books.csv";
  save_orderbooks(path, books);
  EXPECT_EQ(load_orderbooks(path), books);
  PiecewiseLinearIntensity lam(PiecewiseLinearIntensity::default_nodes(), std::vector<double>(30, 0.1 / 3.0));
  const auto ipath = std::filesystem::temp_directory_path() / "meritcurve_pp_lambda.csv";
  save_intensity(ipath, lam);
  const auto back = load_intensity(ipath);
  EXPECT_EQ(back.nodes(), lam.nodes());
  EXPECT_EQ(back.values(), lam.values());
  std::filesystem::remove(path);
  std::filesystem::remove(ipath);
}
