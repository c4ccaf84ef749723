#include <benchmark/benchmark.h>

#include <random>

#include "meritcurve/ddpm.hpp"
#include "meritcurve/evaluation.hpp"
#include "meritcurve/parametric_curve.hpp"
#include "meritcurve/point_process.hpp"
#include "meritcurve/quantile_gbt.hpp"
#include "meritcurve/storage_opt.hpp"
#include "meritcurve/synth.hpp"

using namespace meritcurve;

namespace {

const SynthData& supply_days() {
  static const SynthData d = [] {
    auto cfg = SynthConfig::defaults(Side::Supply);
    cfg.days = 4;
    cfg.noise = 0.01;
    return synth_dataset(cfg);
  }();
  return d;
}

void BM_FitParametric(benchmark::State& st) {
  const auto& c = supply_days().curves.front();
  for (auto _ : st) benchmark::DoNotOptimize(fit_parametric(c));
}
BENCHMARK(BM_FitParametric)->Unit(benchmark::kMillisecond);

void BM_EncodeDecode(benchmark::State& st) {
  const auto& all = supply_days().curves;
  const std::vector<AggregatedCurve> day(all.begin(), all.begin() + 24);
  for (auto _ : st) benchmark::DoNotOptimize(decode_orderbook(encode_orderbook(day)));
}
BENCHMARK(BM_EncodeDecode)->Unit(benchmark::kMillisecond);

void BM_FitIntensity(benchmark::State& st) {
  Rng rng(3);
  std::vector<double> u(static_cast<std::size_t>(st.range(0)));
  std::uniform_real_distribution<double> U;
  for (auto& v : u) v = std::pow(U(rng), 2.0);
  std::sort(u.begin(), u.end());
  for (auto _ : st) benchmark::DoNotOptimize(fit_intensity(u));
}
BENCHMARK(BM_FitIntensity)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_TrainGbt(benchmark::State& st) {
  Rng rng(5);
  std::normal_distribution<double> z;
  DataMatrix X;
  X.names = {"a", "b", "c", "d"};
  std::vector<double> y;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r{z(rng), z(rng), z(rng), z(rng)};
    X.append_row(r);
    y.push_back(r[0] + 0.5 * r[1] * r[2] + 0.1 * z(rng));
  }
  GbtHyperparams hp;
  hp.n_rounds = 100;
  hp.early_stopping_rounds = 0;
  for (auto _ : st) benchmark::DoNotOptimize(train_gbt(X, y, hp));
}
BENCHMARK(BM_TrainGbt)->Unit(benchmark::kMillisecond);

void BM_DdpmSample(benchmark::State& st) {
  const DenoiserNet net(24, 25, {128, 128, 128}, 1);
  const auto sched = make_schedule();
  const Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(st.range(0), 25);
  Rng rng(7);
  for (auto _ : st) benchmark::DoNotOptimize(sample_ddpm(net, labels, sched, rng));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_DdpmSample)->Arg(1)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Wasserstein2(benchmark::State& st) {
  Rng rng(9);
  std::normal_distribution<double> z;
  const auto n = st.range(0);
  PointCloud a, b;
  a.points.resize(n, 3);
  b.points.resize(n, 3);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) {
      a.points(i, j) = z(rng);
      b.points(i, j) = z(rng) + 0.5;
    }
  for (auto _ : st) benchmark::DoNotOptimize(wasserstein2(a, b));
}
BENCHMARK(BM_Wasserstein2)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_OptimalQLinear(benchmark::State& st) {
  const auto g1 = GammaFunction::linear(100, 1), g2 = GammaFunction::linear(200, 1);
  double x = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(optimal_q(x, -x, g1, g2, 1000));
    x = x > 10 ? 0 : x + 0.01;
  }
}
BENCHMARK(BM_OptimalQLinear);

void BM_OptimalQSynthetic(benchmark::State& st) {
  const auto& c = supply_days().curves;
  auto dcfg = SynthConfig::defaults(Side::Demand);
  dcfg.days = 1;
  const auto d = synth_curves(dcfg);
  const auto g1 = GammaFunction::from_curves(d[5], c[5]), g2 = GammaFunction::from_curves(d[19], c[19]);
  for (auto _ : st) benchmark::DoNotOptimize(optimal_q(0, 0, g1, g2, 1000));
}
BENCHMARK(BM_OptimalQSynthetic)->Unit(benchmark::kMicrosecond);

void BM_RevenueMc(benchmark::State& st) {
  const auto g1 = GammaFunction::linear(2000, 50), g2 = GammaFunction::linear(4000, 50);
  const auto e1 = ErrorModel::make(ErrorFamily::Gaussian, {555, 2300});
  const auto e2 = ErrorModel::make(ErrorFamily::Laplace, {1367, 1896});
  for (auto _ : st) benchmark::DoNotOptimize(revenue_mc({}, e1, e2, g1, g2, 10000, 1));
}
BENCHMARK(BM_RevenueMc)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
