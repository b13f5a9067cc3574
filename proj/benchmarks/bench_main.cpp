#include <benchmark/benchmark.h>

#include <random>

#include "houseprice/integral_image.hpp"
#include "houseprice/mlp.hpp"
#include "houseprice/surf.hpp"
#include "houseprice/svr.hpp"

using namespace houseprice;

namespace {

imgproc::GrayImage noise_image(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> px(static_cast<std::size_t>(size) * size);
  for (auto& p : px) p = static_cast<std::uint8_t>(rng() & 0xff);
  return {size, size, std::move(px)};
}

// Smooth blobs on a gradient, closer to a photo than white noise.
imgproc::GrayImage scene(int size) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double v = 60.0 + 100.0 * x / size;
      for (int k = 0; k < 12; ++k) {
        const double cx = (k * 37 % size), cy = (k * 53 % size), s = 2.0 + k % 5;
        v += (k % 2 ? 90 : -90) * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * s * s));
      }
      px[static_cast<std::size_t>(y) * size + x] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  return {size, size, std::move(px)};
}

Eigen::MatrixXd uniform(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd X(rows, cols);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  return X;
}

void BM_IntegralImage(benchmark::State& state) {
  const auto img = noise_image(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(imgproc::IntegralImage(img));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_IntegralImage)->Arg(160)->Arg(640);

void BM_HessianMap(benchmark::State& state) {
  const imgproc::IntegralImage ii(scene(320));
  for (auto _ : state) benchmark::DoNotOptimize(surf::hessian_response_map(ii, static_cast<int>(state.range(0)), 1));
}
BENCHMARK(BM_HessianMap)->Arg(9)->Arg(27);

void BM_DetectAndDescribe(benchmark::State& state) {
  const imgproc::IntegralImage ii(scene(static_cast<int>(state.range(0))));
  surf::SurfParams p;
  p.hessian_threshold = 50.0;
  for (auto _ : state) benchmark::DoNotOptimize(surf::describe(ii, surf::detect_interest_points(ii, p), false));
}
BENCHMARK(BM_DetectAndDescribe)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_TrainSvrHik(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto X = uniform(n, 68, 3);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = X.row(i).head(4).mean();
  svr::SvrConfig cfg;
  cfg.C = 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(svr::train_svr(X, y, cfg));
}
BENCHMARK(BM_TrainSvrHik)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_LmEpochs(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mlp::Samples train{uniform(375, d, 4), {}}, val{uniform(80, d, 5), {}};
  for (int i = 0; i < 375; ++i) train.y.push_back(train.X.row(i).mean());
  for (int i = 0; i < 80; ++i) val.y.push_back(val.X.row(i).mean());
  mlp::LmConfig cfg;
  cfg.max_epochs = 10;
  cfg.patience = 10;
  for (auto _ : state)
    benchmark::DoNotOptimize(mlp::train_lm(mlp::init_network(static_cast<std::size_t>(d), 1), train, val, cfg));
}
BENCHMARK(BM_LmEpochs)->Arg(4)->Arg(260)->Arg(1028)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
