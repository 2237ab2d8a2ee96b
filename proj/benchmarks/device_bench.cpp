#include <benchmark/benchmark.h>

#include "flydram/charlab.hpp"
#include "flydram/device.hpp"

namespace {

using namespace flydram;

void BM_ActivationRead(benchmark::State& state) {
  auto spec = preset("B-M1");
  spec.frac_fast_trcd = 0.0;
  auto dev = Device::build(spec, {8, 256, 128, 64}, 1);
  const Picos provided = 10000 - state.range(0);
  std::uint32_t row = 0;
  for (auto _ : state) {
    dev.write_line(0, row, 0, pattern_line(0xaa));
    auto r = dev.apply_activation_read(0, row, 0, provided);
    benchmark::DoNotOptimize(r.line);
    row = (row + 1) % 256;
  }
  state.SetItemsProcessed(state.iterations());
}
// Deficit 0 is the no-flip fast path; larger deficits draw every bit.
BENCHMARK(BM_ActivationRead)->Arg(0)->Arg(2500)->Arg(7500);

void BM_PrechargeActivate(benchmark::State& state) {
  auto spec = preset("B-M1");
  spec.frac_fast_trp = 0.0;
  auto dev = Device::build(spec, {8, 256, 128, 64}, 1);
  std::uint32_t row = 0;
  for (auto _ : state) {
    auto r = dev.apply_precharge_activate(1, row, 7500);
    benchmark::DoNotOptimize(r.flips.data());
    row = (row + 1) % 256;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PrechargeActivate);

void BM_TrcdColumnOrder(benchmark::State& state) {
  const Geometry g{8, 64, 128, 64};
  auto dev = Device::build(preset("A-M1"), g, 1);
  for (auto _ : state) {
    auto c = test_trcd_col_order(dev, static_cast<Picos>(state.range(0)), {0x00, 0xff}, Scope::full(g),
                                 Detail::Totals);
    benchmark::DoNotOptimize(c.error_bits);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.lines()));
}
BENCHMARK(BM_TrcdColumnOrder)->Arg(12500)->Arg(7500)->Unit(benchmark::kMillisecond);

}  // namespace
