#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "confcheck/checker.hpp"

using namespace confcheck;

namespace {

MetricSpec corpus(const char* name) {
  return loadMetric(std::string(CONFCHECK_METRICS_DIR) + "/" + name + ".metric");
}

const char* kFiles[] = {"schwarzschild", "robinson_trautman", "conformal_schwarzschild", "ppwave_quartic"};

void BM_ParseAndDifferentiate(benchmark::State& state) {
  const std::vector<std::string> coords = {"t", "r", "th", "ph"};
  const Expr r = coordinate("r");
  for (auto _ : state) {
    const Expr e = parse("exp(t/7 + r/10)*r^2*sin(th)^2/(1 - 2/r)", coords, {});
    benchmark::DoNotOptimize(diff(diff(e, r), r));
  }
}
BENCHMARK(BM_ParseAndDifferentiate);

void BM_SymbolicConcomitants(benchmark::State& state) {
  const MetricSpec spec = corpus(kFiles[state.range(0)]);
  for (auto _ : state) {
    const Geometry geo(spec);
    benchmark::DoNotOptimize(geo.weyl());
    benchmark::DoNotOptimize(geo.schoutenCurl());
  }
  state.SetLabel(kFiles[state.range(0)]);
}
BENCHMARK(BM_SymbolicConcomitants)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_PointEvaluation(benchmark::State& state) {
  const MetricSpec spec = corpus(kFiles[state.range(0)]);
  const Geometry geo(spec);
  const CompiledGeometry cg(geo);
  const auto pts = samplePoints(spec, 16, 0).points;
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cg.evaluate(spec.point(pts[k++ % pts.size()])));
  state.SetLabel(kFiles[state.range(0)]);
}
BENCHMARK(BM_PointEvaluation)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_Pseudoinverse(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Matrix l(6, 3), r(3, 6);
  for (int i = 0; i < l.size(); ++i) l.data()[i] = n(rng);
  for (int i = 0; i < r.size(); ++i) r.data()[i] = n(rng);
  const Matrix a = l * r;
  for (auto _ : state) benchmark::DoNotOptimize(pseudoinverse(a));
}
BENCHMARK(BM_Pseudoinverse);

void BM_Classify(benchmark::State& state) {
  const MetricSpec spec = corpus(kFiles[state.range(0)]);
  RunConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(classify(spec, cfg));
  state.SetLabel(kFiles[state.range(0)]);
}
BENCHMARK(BM_Classify)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
