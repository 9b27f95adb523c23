#include <random>

#include <benchmark/benchmark.h>

#include "hhlc/features.hpp"
#include "hhlc/hhl_builder.hpp"
#include "hhlc/matrix_core.hpp"
#include "hhlc/mlp_classifier.hpp"
#include "hhlc/synthesis.hpp"

using namespace hhlc;

namespace {

UnitaryMatrix random_unitary(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) z(i, j) = {g(rng), g(rng)};
  return Eigen::HouseholderQR<Eigen::MatrixXcd>(z).householderQ();
}

void BM_Synthesize(benchmark::State& state) {
  const int q = static_cast<int>(state.range(0));
  const UnitaryMatrix u = random_unitary(1 << q, 1);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(u));
}
BENCHMARK(BM_Synthesize)->DenseRange(1, 5);

// Full HHL build, depth included, for a random matrix of side n.
void BM_BuildHhl(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SystemMatrix a = generate_random_sparse({n, n, 1000.0, 3});
  for (auto _ : state) benchmark::DoNotOptimize(build_hhl(a).full_depth);
  state.SetLabel("n_l=" + std::to_string(build_hhl(a).config.n_l));
}
BENCHMARK(BM_BuildHhl)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SystemMatrix a = generate_random_sparse({n, n / 2 + 1, 1000.0, 4});
  for (auto _ : state) benchmark::DoNotOptimize(extract(a, Variant::d1));
}
BENCHMARK(BM_ExtractFeatures)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_MlpForward(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const int in = static_cast<int>(feature_names(Variant::d1).size());
  const MlpModel m = MlpModel::init(in, 5);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(rows, in);
  for (auto _ : state) benchmark::DoNotOptimize(m.logits(x));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
