#include <algorithm>
#include <cmath>
#include <random>

#include "meritcurve/ddpm.hpp"
#include "meritcurve/error.hpp"
#include "meritcurve/parallel.hpp"

namespace meritcurve {

namespace {

int bin_of(double u, int bins) { return std::clamp(static_cast<int>(std::ceil(u * bins)) - 1, 0, bins - 1); }

}  // namespace

SizeClassModel SizeClassModel::fit(const std::vector<DailyOrderBook>& books, int bins) {
  if (bins < 1) throw Error(Errc::InvalidArgument, "size-class model needs at least one bin");
  std::vector<double> high(bins, 0.0), total(bins, 0.0);
  double all_high = 0.0, all = 0.0;
  for (const auto& book : books)
    for (std::size_t m = 0; m < book.prices.size(); ++m) {
      const int k = bin_of(normalize_price(book.prices[m]), bins);
      const bool h = size_class(book.marks[m], book.side) == SizeClass::High;
      high[k] += h;
      total[k] += 1;
      all_high += h;
      all += 1;
    }
  if (all == 0) throw Error(Errc::NoArrivals, "size-class model needs at least one arrival");
  SizeClassModel model;
  model.p_high.resize(bins);
  // Bins without data fall back to the pooled rate.
  for (int k = 0; k < bins; ++k) model.p_high[k] = total[k] > 0 ? high[k] / total[k] : all_high / all;
  return model;
}

double SizeClassModel::probability(double u) const {
  if (p_high.empty()) return 0.0;
  return p_high[bin_of(u, static_cast<int>(p_high.size()))];
}

std::vector<AggregatedCurve> cumulate_marks(Side side, Date day, const HourVector& anchor,
                                            const std::vector<double>& prices, const std::vector<HourVector>& marks) {
  if (prices.size() != marks.size()) throw Error(Errc::DimMismatch, "prices and marks differ in length");
  DailyOrderBook book;
  book.side = side;
  book.day = day;
  book.bounds = PriceBounds::defaults(side);
  book.anchor = anchor;
  std::vector<std::size_t> idx(prices.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return prices[a] < prices[b]; });
  for (std::size_t i : idx) {
    const double p = prices[i];
    if (!(p > book.bounds.lo && p <= book.bounds.hi)) continue;
    const bool any = std::any_of(marks[i].begin(), marks[i].end(), [](double v) { return v != 0.0; });
    if (!any) continue;
    if (!book.prices.empty() && book.prices.back() == p) {
      for (int h = 0; h < 24; ++h) book.marks.back()[h] += marks[i][h];
    } else {
      book.prices.push_back(p);
      book.marks.push_back(marks[i]);
    }
  }
  if (side == Side::Demand) {
    // Cleared demand cannot fall below zero: cap each drop at the remaining volume.
    for (int h = 0; h < 24; ++h) {
      double cum = anchor[h];
      for (auto& row : book.marks) {
        if (cum + row[h] < 0.0) row[h] = -cum;
        cum += row[h];
      }
    }
  }
  return decode_orderbook(book);
}

GeneratedDay generate_day(Side side, Date day, std::span<const double> intensity_label,
                          std::span<const double> marks_label, const HourVector& anchor, const GeneratorNets& nets,
                          const SizeClassModel& classes, const NoiseSchedule& sched, Rng& rng,
                          const std::vector<double>& nodes) {
  GeneratedDay out;
  std::vector<double> lam = sample_ddpm(nets.intensity, intensity_label, sched, rng);
  if (lam.size() != nodes.size()) throw Error(Errc::DimMismatch, "intensity net does not match the node layout");
  for (auto& v : lam) v = std::max(0.0, v);
  out.lambda = PiecewiseLinearIntensity(nodes, lam);
  out.arrivals = thin_sample(out.lambda, rng);

  const auto n = static_cast<Eigen::Index>(out.arrivals.size());
  const auto ld = static_cast<Eigen::Index>(marks_label.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<bool> high(out.arrivals.size());
  Eigen::Index n_high = 0;
  for (std::size_t m = 0; m < out.arrivals.size(); ++m) {
    high[m] = unif(rng) < classes.probability(out.arrivals[m]);
    n_high += high[m];
  }
  Eigen::MatrixXd lab_low(n - n_high, ld + 1), lab_high(n_high, ld + 1);
  for (Eigen::Index m = 0, lo = 0, hi = 0; m < n; ++m) {
    auto& L = high[m] ? lab_high : lab_low;
    const Eigen::Index r = high[m] ? hi++ : lo++;
    for (Eigen::Index j = 0; j < ld; ++j) L(r, j) = marks_label[j];
    L(r, ld) = out.arrivals[m];
  }
  const Eigen::MatrixXd s_low = lab_low.rows() ? sample_ddpm(nets.marks_low, lab_low, sched, rng) : Eigen::MatrixXd();
  const Eigen::MatrixXd s_high =
      lab_high.rows() ? sample_ddpm(nets.marks_high, lab_high, sched, rng) : Eigen::MatrixXd();

  std::vector<double> prices;
  std::vector<HourVector> marks;
  for (Eigen::Index m = 0, lo = 0, hi = 0; m < n; ++m) {
    const Eigen::MatrixXd& S = high[m] ? s_high : s_low;
    const Eigen::Index r = high[m] ? hi++ : lo++;
    if (S.cols() != 24) throw Error(Errc::DimMismatch, "marks net must produce 24 hourly values");
    HourVector row;
    for (int h = 0; h < 24; ++h) row[h] = S(r, h);
    const auto t = truncate_marks(row, side);
    std::copy(t.begin(), t.end(), row.begin());
    prices.push_back(denormalize_price(out.arrivals[m]));
    marks.push_back(row);
  }
  out.curves = cumulate_marks(side, day, anchor, prices, marks);
  out.empty = prices.empty();
  return out;
}

GeneratorTraining train_generator(const std::vector<DailyOrderBook>& books,
                                  const std::vector<std::vector<double>>& labels, const NoiseSchedule& sched,
                                  const GeneratorTrainConfig& cfg) {
  if (books.empty()) throw Error(Errc::InvalidArgument, "generator training needs at least one order book");
  if (labels.size() != books.size()) throw Error(Errc::DimMismatch, "one label row per order book expected");
  const auto ld = static_cast<Eigen::Index>(labels.front().size());
  for (const auto& l : labels)
    if (static_cast<Eigen::Index>(l.size()) != ld) throw Error(Errc::DimMismatch, "label rows differ in length");
  const Side side = books.front().side;
  for (const auto& b : books)
    if (b.side != side) throw Error(Errc::InvalidArgument, "order books mix market sides");

  GeneratorTraining out;
  out.intensities.resize(books.size());
  parallel_for(books.size(), [&](std::size_t d) {
    out.intensities[d] = fit_intensity(normalized_arrivals(books[d]), cfg.nodes);
  });
  out.classes = SizeClassModel::fit(books, cfg.size_bins);

  const auto nn = static_cast<Eigen::Index>(cfg.nodes.size());
  Eigen::MatrixXd lam(static_cast<Eigen::Index>(books.size()), nn), day_labels(lam.rows(), ld);
  for (Eigen::Index d = 0; d < lam.rows(); ++d) {
    for (Eigen::Index j = 0; j < nn; ++j) lam(d, j) = out.intensities[d].lambda.values()[j];
    for (Eigen::Index j = 0; j < ld; ++j) day_labels(d, j) = labels[d][j];
  }
  auto r = train_denoiser(lam, day_labels, sched, cfg.intensity);
  out.nets.intensity = std::move(r.net);
  out.intensity_loss = std::move(r.loss_trace);

  // Fake-zero draws use their own stream so they do not shift the net seeds.
  Rng rng(derive_seed(cfg.marks.seed, 7));
  std::vector<std::vector<double>> rows[2], lab[2];
  for (std::size_t d = 0; d < books.size(); ++d)
    for (std::size_t m = 0; m < books[d].prices.size(); ++m) {
      const SizeClass c = size_class(books[d].marks[m], side);
      const int k = c == SizeClass::High;
      rows[k].push_back(randomize_zeros(books[d].marks[m], {side, c}, rng));
      auto l = labels[d];
      l.push_back(normalize_price(books[d].prices[m]));
      lab[k].push_back(std::move(l));
    }
  auto train_class = [&](int k, DenoiserNet& net, std::vector<double>& loss) {
    if (rows[k].empty()) {
      net = DenoiserNet(24, static_cast<int>(ld) + 1, cfg.marks.hidden, cfg.marks.seed);
      return;
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows[k].size()), 24), l(x.rows(), ld + 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (int h = 0; h < 24; ++h) x(i, h) = rows[k][i][h];
      for (Eigen::Index j = 0; j <= ld; ++j) l(i, j) = lab[k][i][j];
    }
    DdpmTrainConfig c = cfg.marks;
    c.seed = derive_seed(cfg.marks.seed, 10 + k);
    auto res = train_denoiser(x, l, sched, c);
    net = std::move(res.net);
    loss = std::move(res.loss_trace);
  };
  train_class(0, out.nets.marks_low, out.low_loss);
  train_class(1, out.nets.marks_high, out.high_loss);
  out.low_rows = rows[0].size();
  out.high_rows = rows[1].size();
  return out;
}

}  // namespace meritcurve
