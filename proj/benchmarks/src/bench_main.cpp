#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "swasat/generator.hpp"
#include "swasat/discriminator.hpp"
#include "swasat/sefa.hpp"
#include "swasat/training.hpp"
#include "swasat/wavelet.hpp"

using namespace swasat;

static void BM_DwtIwt(benchmark::State& state) {
  torch::manual_seed(0);
  const auto side = state.range(0);
  const auto x = torch::randn({16, 3, side, side});
  for (auto _ : state) {
    benchmark::DoNotOptimize(wavelet::iwt2d(wavelet::dwt2d(x)));
  }
  state.SetItemsProcessed(state.iterations() * x.numel());
}
BENCHMARK(BM_DwtIwt)->Arg(32)->Arg(64)->Arg(256);

static void BM_Factorize(benchmark::State& state) {
  const auto rows = state.range(0);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(rows, 512);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sefa::factorize(a, 10));
  }
}
BENCHMARK(BM_Factorize)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

static void BM_GeneratorForward(benchmark::State& state) {
  torch::manual_seed(0);
  torch::NoGradGuard no_grad;
  Generator g(GeneratorConfig::desk());
  g->eval();
  const auto z = torch::randn({state.range(0), g->config().z_dim});
  for (auto _ : state) {
    benchmark::DoNotOptimize(g->forward(z));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratorForward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  torch::manual_seed(0);
  auto g = GeneratorConfig::desk();
  auto t = TrainConfig::desk();
  Trainer trainer(g, DiscriminatorConfig::matching(g), t);
  const auto batch = torch::rand({t.batch_size, 3, g.output_resolution, g.output_resolution}) * 2 - 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(trainer.step(batch));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond)->Iterations(16);
BENCHMARK_MAIN();
