// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "credal/annotations.hpp"
#include "credal/kernels.hpp"
#include "credal/parallel.hpp"
#include "credal/synthgen.hpp"

using namespace credal;

namespace {

AnnotationTable table(LabelKind kind, int annotators, std::size_t n) {
  std::vector<Labeler> labs;
  for (int j = 0; j < annotators; ++j) labs.push_back(Labeler::sigmoid(3.0, -1.0 + 2.0 * j / (annotators - 1)));
  return sample_annotated(Environment::gaussian(0, 1), labs, n, kind, GenSeed{7, 0});
}

CredalSpec sweep_spec() {
  std::vector<Environment> envs;
  std::vector<Labeler> labs;
  for (int i = 0; i < 6; ++i) envs.push_back(Environment::gaussian(-1.5 + 0.6 * i, 1.0));
  for (int j = 0; j < 4; ++j) labs.push_back(Labeler::sigmoid(1.0, -2.0 + 1.3 * j));
  return CredalSpec(envs, labs);
}

void BM_disagreement_serial(benchmark::State& s) {
  const auto t = table(LabelKind::hard, static_cast<int>(s.range(0)), 100000);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::disagreement_counts_serial(t));
}
void BM_disagreement_omp(benchmark::State& s) {
  const auto t = table(LabelKind::hard, static_cast<int>(s.range(0)), 100000);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::disagreement_counts_omp(t));
}
void BM_soft_l1_serial(benchmark::State& s) {
  const auto t = table(LabelKind::soft, static_cast<int>(s.range(0)), 20000);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::soft_l1_sums_serial(t));
}
void BM_soft_l1_omp(benchmark::State& s) {
  const auto t = table(LabelKind::soft, static_cast<int>(s.range(0)), 20000);
  for (auto _ : s) benchmark::DoNotOptimize(kernels::soft_l1_sums_omp(t));
}
void BM_joint_tv_pairs(benchmark::State& s) {
  const auto spec = sweep_spec();
  const auto pairs = spec.distinct_pairs();
  const auto exec = s.range(0) == 0 ? Exec::serial : Exec::parallel;
  for (auto _ : s) benchmark::DoNotOptimize(kernels::joint_tv_pairs(spec, pairs, {}, exec));
  s.SetLabel(exec == Exec::serial ? "serial" : "omp threads=" + std::to_string(max_threads()));
}

}  // namespace

BENCHMARK(BM_disagreement_serial)->Arg(5)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_disagreement_omp)->Arg(5)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_soft_l1_serial)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_soft_l1_omp)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_joint_tv_pairs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
