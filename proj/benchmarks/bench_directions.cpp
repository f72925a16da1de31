#include <random>

#include <benchmark/benchmark.h>

#include "sublevel/optimizers.hpp"
#include "sublevel/problems.hpp"
#include "sublevel/spectral.hpp"

using namespace sublevel;

namespace {

GlmObjective logistic(int m, int n) {
  SyntheticSpec s;
  s.m = m;
  s.n = n;
  s.seed = 1;
  SyntheticData d = generate_synthetic(s);
  return GlmObjective(ProblemKind::Logistic, std::move(d.A), std::move(d.b), 1e-3);
}

Vec start(int n) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd(0.0, 0.1);
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = nd(gen);
  return x;
}

MethodConfig cfg(MethodKind kind, int n) {
  MethodConfig c;
  c.kind = kind;
  c.N = n / 2;
  c.p = n / 10;
  c.sample_rows = 1000;
  return c;
}

void BM_Newton(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const GlmObjective obj = logistic(4 * n, n);
  const Vec x = start(n), g = obj.gradient(x);
  for (auto _ : st) benchmark::DoNotOptimize(newton_direction(obj, x, g).d);
}

void BM_LowRankNewton(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const GlmObjective obj = logistic(4 * n, n);
  const Vec x = start(n), g = obj.gradient(x);
  const MethodConfig c = cfg(MethodKind::LowRankNewton, n);
  std::uint64_t s = 0;
  for (auto _ : st) benchmark::DoNotOptimize(lowrank_newton_direction(obj, x, g, c, s++).d);
}

void BM_SigmaSVD(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const GlmObjective obj = logistic(4 * n, n);
  const Vec x = start(n), g = obj.gradient(x);
  const MethodConfig c = cfg(MethodKind::SigmaSVD, n);
  int k = 0;
  for (auto _ : st) {
    const SamplingOperator op = iteration_operator(n, c, k);
    benchmark::DoNotOptimize(sigmasvd_direction(obj, x, g, op, c, k).d);
    ++k;
  }
}

void BM_Sigma(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const GlmObjective obj = logistic(4 * n, n);
  const Vec x = start(n), g = obj.gradient(x);
  const MethodConfig c = cfg(MethodKind::Sigma, n);
  int k = 0;
  for (auto _ : st) benchmark::DoNotOptimize(sigma_direction(obj, x, g, iteration_operator(n, c, k++)).d);
}

void BM_NewSamp(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const GlmObjective obj = logistic(4 * n, n);
  const Vec x = start(n), g = obj.gradient(x);
  const MethodConfig c = cfg(MethodKind::NewSamp, n);
  std::uint64_t s = 0;
  for (auto _ : st) benchmark::DoNotOptimize(newsamp_direction(obj, x, g, c, s++).d);
}

Mat spd(int d) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  Mat G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = nd(gen);
  return G * G.transpose() / d;
}

void BM_DenseTsvd(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  const Mat A = spd(d);
  for (auto _ : st) benchmark::DoNotOptimize(dense_tsvd(A, d / 10, SpectrumMode::Convex).floor());
}

void BM_RandomizedTsvd(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  const Mat A = spd(d);
  RandomizedOptions o;
  for (auto _ : st) {
    benchmark::DoNotOptimize(randomized_tsvd(dense_operator(A), d, d / 10, SpectrumMode::Convex, o).floor());
    ++o.seed;
  }
}

}  // namespace

BENCHMARK(BM_Newton)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LowRankNewton)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NewSamp)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sigma)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SigmaSVD)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseTsvd)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomizedTsvd)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
