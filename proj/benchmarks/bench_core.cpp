#include <benchmark/benchmark.h>

#include "elr/analysis.hpp"
#include "elr/config.hpp"
#include "elr/losses.hpp"
#include "elr/model.hpp"
#include "elr/trainer.hpp"

using namespace elr;

namespace {

NoisyDataset make_data(Eigen::Index n, Eigen::Index p) {
  DataSpec spec;
  spec.n = n;
  spec.p = p;
  spec.sigma = 0.1;
  spec.delta = 0.4;
  spec.data_seed = 1;
  return spec.build();
}

void BM_ForwardBatchLinear(benchmark::State& state) {
  const Eigen::Index n = state.range(0), p = state.range(1);
  const NoisyDataset data = make_data(n, p);
  const ModelParams params = init_params(Arch::linear(2, p), 1);
  for (auto _ : state) {
    Eigen::MatrixXd logits = forward_batch(params, data.inputs);
    benchmark::DoNotOptimize(logits);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ForwardBatchLinear)->Args({50, 100})->Args({3000, 2700})->Unit(benchmark::kMicrosecond);

void BM_GradFromCoeffs(benchmark::State& state) {
  const Eigen::Index n = state.range(0), p = state.range(1);
  const NoisyDataset data = make_data(n, p);
  const ModelParams params = init_params(Arch::linear(2, p), 1);
  const Eigen::MatrixXd coeffs = Eigen::MatrixXd::Random(n, 2);
  for (auto _ : state) {
    ParamGrad grad = grad_from_coeffs(params, data.inputs, coeffs);
    benchmark::DoNotOptimize(grad);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_GradFromCoeffs)->Args({50, 100})->Args({3000, 2700})->Unit(benchmark::kMicrosecond);

void BM_ElrCoeff(benchmark::State& state) {
  const int classes = static_cast<int>(state.range(0));
  Eigen::VectorXd z = Eigen::VectorXd::Random(classes);
  const Eigen::VectorXd p = softmax(z);
  const Eigen::VectorXd t = Eigen::VectorXd::Random(classes).cwiseAbs();
  for (auto _ : state) {
    Eigen::VectorXd g = elr_coeff(p, t, 3.0);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_ElrCoeff)->Arg(2)->Arg(10)->Arg(100);

void BM_TrainEpochFigGeometry(benchmark::State& state) {
  const NoisyDataset data = make_data(50, 100);
  TrainConfig config;
  config.mode = TrainMode::Elr;
  config.lambda = 3.0;
  config.beta = 0.7;
  config.epochs = static_cast<int>(state.range(0));
  config.seed = 1;
  for (auto _ : state) {
    RunLog log = train(config, data);
    benchmark::DoNotOptimize(log);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpochFigGeometry)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_CheckSeparability(benchmark::State& state) {
  const Eigen::Index n = state.range(0), p = state.range(1);
  const NoisyDataset data = make_data(n, p);
  std::vector<int> signs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) signs[static_cast<std::size_t>(i)] = data.observed_sign(i);
  for (auto _ : state) {
    SeparabilityReport report = check_separability(data.inputs, signs);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_CheckSeparability)->Args({50, 49})->Args({50, 100})->Unit(benchmark::kMicrosecond);

void BM_CoverCount(benchmark::State& state) {
  const std::int64_t n = state.range(0);
  for (auto _ : state) {
    auto count = cover_count(n, n / 2);
    benchmark::DoNotOptimize(count);
  }
}
BENCHMARK(BM_CoverCount)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
