#include <random>

#include <benchmark/benchmark.h>

#include "tdreg/decomposition.hpp"
#include "tdreg/models.hpp"
#include "tdreg/moments.hpp"
#include "tdreg/regularizers.hpp"
#include "tdreg/rtdm.hpp"

namespace {

using namespace tdreg;

Eigen::MatrixXd topics(int d, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(0.3, 1.0);
  Eigen::MatrixXd a(d, k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < d; ++i) a(i, j) = gamma(rng) + 1e-6;
    a.col(j) /= a.col(j).sum();
  }
  return a;
}

Eigen::MatrixXd lda_docs(int d, int k, int n, std::uint64_t seed) {
  return lda_sample(LdaModel{topics(d, k, seed), 0.5, 20}, n, seed + 1).x;
}

void BM_Whiten(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Eigen::MatrixXd docs = lda_docs(d, 4, 500, 1);
  const MomentSet ms = lda_moments(docs, ModelConstants::lda(4, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(whiten_spectral(ms.m2, 4));
}
BENCHMARK(BM_Whiten)->Arg(50)->Arg(100)->Arg(300);

void BM_WhitenedThirdMoment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd docs = lda_docs(100, 4, n, 2);
  const ModelConstants consts = ModelConstants::lda(4, 0.5);
  const WhiteningPair wp = whiten(lda_moments(docs, consts).m2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(whitened_raw_triples(docs, wp.w, ModelKind::Lda));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_WhitenedThirdMoment)->Arg(100)->Arg(1000);

void BM_PowerMethod(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(
                                Eigen::MatrixXd::Random(k, k)).householderQ();
  Tensor3 t(k);
  for (int j = 0; j < k; ++j) t.add_cube(1.0 + j, q.col(j));
  PowerMethodOptions opts;
  for (auto _ : state) benchmark::DoNotOptimize(tensor_power_method(t, k, opts));
}
BENCHMARK(BM_PowerMethod)->Arg(4)->Arg(10);

void BM_Tdm(benchmark::State& state) {
  const Eigen::MatrixXd docs = lda_docs(100, 4, 1000, 3);
  const ModelConstants consts = ModelConstants::lda(4, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(tdm(docs, consts));
}
BENCHMARK(BM_Tdm)->Unit(benchmark::kMillisecond);

// One RTDM iteration's worth of work: loss and adjoint gradient.
void BM_LossGradient(benchmark::State& state) {
  const int n_p = static_cast<int>(state.range(0));
  RtdmConfig cfg;
  cfg.n_p = n_p;
  cfg.lambda = 10.0;
  const TrainingFit fit = fit_training(lda_docs(100, 4, 100, 4), ModelConstants::lda(4, 0.5), cfg);
  const PseudoDataLoss loss(fit, Regularizer::anti_correlation(), cfg);
  const Eigen::MatrixXd x_p = pseudo_observations(fit, initial_pseudo_parameters(fit, cfg));
  for (auto _ : state) benchmark::DoNotOptimize(loss.evaluate(x_p, true));
}
BENCHMARK(BM_LossGradient)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
