#include <benchmark/benchmark.h>

#include <random>

#include "shesop/datasets.hpp"
#include "shesop/hrv.hpp"
#include "shesop/sources.hpp"

using namespace shesop;

namespace {

RrSeries rest_series(double seconds) {
  return series_from_rr(sources::synthetic_rr(sources::SyntheticProfile::preset(sources::ProfileKind::rest), 1, seconds));
}

void BM_DecodePacket(benchmark::State& state) {
  const auto bytes = wire::encode_packet(wire::make_packet(72, {830, 845, 861, 870}));
  for (auto _ : state) benchmark::DoNotOptimize(wire::try_decode_packet(bytes));
}
BENCHMARK(BM_DecodePacket);

void BM_DecodeRandomBuffer(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<std::uint8_t>> buffers(1024);
  for (auto& b : buffers) {
    b.resize(rng() % 24);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(wire::try_decode_packet(buffers[i++ & 1023]));
}
BENCHMARK(BM_DecodeRandomBuffer);

void BM_FilterEctopic(benchmark::State& state) {
  const auto s = rest_series(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(filter_ectopic(s));
}
BENCHMARK(BM_FilterEctopic)->Arg(300)->Arg(1200);

void BM_LombScargle(benchmark::State& state) {
  const auto s = rest_series(static_cast<double>(state.range(0)));
  const auto grid = hrv::default_grid();
  for (auto _ : state) benchmark::DoNotOptimize(hrv::lomb_scargle_psd(s, grid));
}
BENCHMARK(BM_LombScargle)->Arg(300)->Arg(607)->Arg(1202)->Unit(benchmark::kMillisecond);

void BM_SampleEntropy(benchmark::State& state) {
  const auto s = rest_series(static_cast<double>(state.range(0)));
  const double r = 0.2 * hrv::time_domain(s).sdnn_ms;
  for (auto _ : state) benchmark::DoNotOptimize(hrv::sample_entropy(s, 2, r));
}
BENCHMARK(BM_SampleEntropy)->Arg(300)->Arg(607)->Arg(1202)->Unit(benchmark::kMillisecond);

void BM_ComputeReport(benchmark::State& state) {
  const auto s = rest_series(607);
  for (auto _ : state) benchmark::DoNotOptimize(hrv::compute_report(s));
}
BENCHMARK(BM_ComputeReport)->Unit(benchmark::kMillisecond);

void BM_TrainSmo(benchmark::State& state) {
  datasets::DatasetConfig cfg;
  cfg.per_profile = static_cast<std::size_t>(state.range(0));
  cfg.duration_s = 300;
  const auto samples = datasets::to_samples(datasets::generate_dataset(cfg), {"stress"});
  for (auto _ : state) benchmark::DoNotOptimize(svm::train_smo(samples));
}
BENCHMARK(BM_TrainSmo)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
