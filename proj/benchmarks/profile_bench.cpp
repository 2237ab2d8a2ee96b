#include <benchmark/benchmark.h>

#include "flydram/profile.hpp"

namespace {

using namespace flydram;

void BM_EncodeDecode(benchmark::State& state) {
  auto p = profile_from_distribution(8, 128, 0.93, 0.74, 7500, 10000, 1);
  for (auto _ : state) {
    auto bytes = encode_profile(p);
    benchmark::DoNotOptimize(decode_profile(bytes));
  }
}
BENCHMARK(BM_EncodeDecode);

void BM_LookupTiming(benchmark::State& state) {
  auto p = profile_from_distribution(8, 128, 0.93, 0.74, 7500, 10000, 1);
  std::uint32_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lookup_timing(&p, i % 8, (i / 8) % 128));
    ++i;
  }
}
BENCHMARK(BM_LookupTiming);

void BM_ProfileDevice(benchmark::State& state) {
  const Geometry g{8, 64, 128, 64};
  auto dev = Device::build(preset("A-M1"), g, 1);
  for (auto _ : state) benchmark::DoNotOptimize(profile_device(dev));
}
BENCHMARK(BM_ProfileDevice)->Unit(benchmark::kMillisecond);

}  // namespace
