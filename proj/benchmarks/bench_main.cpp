#include <benchmark/benchmark.h>

#include "semattack/attacks.hpp"
#include "semattack/data.hpp"
#include "semattack/models.hpp"
#include "semattack/theory.hpp"
#include "semattack/transforms.hpp"

namespace semattack {
namespace {

constexpr std::size_t kDim = 100;

Vector random_input(std::size_t d, SeededRng& rng) { return gaussian_vector(Vector(d), 1.0, rng); }

TwoLayerMlp default_mlp() {
  SeededRng rng(1);
  return TwoLayerMlp::initialize(kDim, 64, rng);
}

void BM_OpNormInfToOne(benchmark::State& state) {
  SeededRng rng(2);
  const Matrix u = random_orthonormal(kDim, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(op_norm_inf_to_one(u));
}
BENCHMARK(BM_OpNormInfToOne)->Arg(4)->Arg(12)->Arg(20)->Arg(24);

void BM_RandomOrthonormal(benchmark::State& state) {
  SeededRng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(random_orthonormal(kDim, static_cast<std::size_t>(state.range(0)), rng));
  }
}
BENCHMARK(BM_RandomOrthonormal)->Arg(10)->Arg(100);

void BM_MlpLogits(benchmark::State& state) {
  const TwoLayerMlp model = default_mlp();
  SeededRng rng(4);
  const Vector x = random_input(kDim, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.logits(x));
}
BENCHMARK(BM_MlpLogits);

void BM_MlpInputVjp(benchmark::State& state) {
  const TwoLayerMlp model = default_mlp();
  SeededRng rng(5);
  const Vector x = random_input(kDim, rng);
  const Vector up{1.0, -1.0};
  for (auto _ : state) benchmark::DoNotOptimize(model.input_vjp(x, up));
}
BENCHMARK(BM_MlpInputVjp);

void BM_SubspaceForwardVjp(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto spec = TransformSpec::subspace(nested_basis(kDim, k, 6), {-3, 3}, std::nullopt);
  SeededRng rng(7);
  const Vector x = random_input(kDim, rng);
  const Vector delta = random_input(k, rng);
  const Vector up = random_input(kDim, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(transform_forward(spec, x, delta));
    benchmark::DoNotOptimize(transform_vjp(spec, x, delta, up));
  }
}
BENCHMARK(BM_SubspaceForwardVjp)->Arg(1)->Arg(10)->Arg(100);

void BM_SemanticAttack(benchmark::State& state) {
  SeededRng rng(8);
  const auto data = sample_dataset(
      MixtureSpec{load_means(kBuiltinMeans, kDim), 0.5, default_digit_classes()}, 2000, rng);
  TwoLayerMlp model = default_mlp();
  AdamState adam(model.parameter_count(), 0.01);
  SeededRng train_rng(9);
  train(model, data, 10, adam, train_rng);
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto spec = TransformSpec::subspace(nested_basis(kDim, k, 10), {-3, 3}, 1.0);
  AttackConfig cfg;
  std::size_t row = 0;
  for (auto _ : state) {
    const Vector x = data.sample(row % data.size());
    benchmark::DoNotOptimize(semantic_attack(model, spec, x, label_to_index(data.y[row % data.size()]), cfg));
    ++row;
  }
}
BENCHMARK(BM_SemanticAttack)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_MonteCarloRelaxed(benchmark::State& state) {
  BoundInputs in;
  SeededRng setup(11);
  in.w_hat = random_input(kDim, setup);
  in.w_hat *= 1.0 / norm_l2(in.w_hat);
  in.theta_star = 2.0 * in.w_hat;
  in.basis = nested_basis(kDim, 10, 12);
  in.eps = 0.05;
  in.sigma = 0.5;
  for (auto _ : state) {
    SeededRng rng(13);
    benchmark::DoNotOptimize(monte_carlo_robust_error(in, 10000, rng, McSolver::relaxed_closed_form));
  }
}
BENCHMARK(BM_MonteCarloRelaxed)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace semattack

BENCHMARK_MAIN();
