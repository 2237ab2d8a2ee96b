#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "flydram/errors.hpp"
#include "flydram/sim.hpp"
#include "json.hpp"

namespace flydram {
namespace {

constexpr Geometry kGeo{8, 256, 128, 64};

SimConfig one_channel() {
  SimConfig cfg;
  cfg.map = {kGeo, 1};
  return cfg;
}

PageMap identity_map(std::span<const Trace> traces) {
  auto pages = touched_pages(traces);
  PageMap m;
  std::uint64_t next = 0;
  for (auto k : pages) m.pages[k] = next++;
  return m;
}

TEST(Trace, ParsesCommentsAndGapOnlyLines) {
  std::istringstream in("# header\n3 0x40 R\n\n0 0x80 W  # trailing\n12\n");
  auto t = parse_trace(in);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], (TraceRecord{3, true, 0x40, ReqKind::Read}));
  EXPECT_EQ(t[1], (TraceRecord{0, true, 0x80, ReqKind::Write}));
  EXPECT_EQ(t[2], (TraceRecord{12, false, 0, ReqKind::Read}));
  std::ostringstream out;
  save_trace(out, t);
  std::istringstream back(out.str());
  EXPECT_EQ(parse_trace(back), t);
}

TEST(Trace, ErrorsNameTheLine) {
  std::istringstream in("1 0x40 R\n2 zz R\n");
  try {
    parse_trace(in, "t.trace");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("t.trace:2"), std::string::npos) << e.what();
  }
  std::istringstream kind("1 0x40 X\n");
  EXPECT_THROW(parse_trace(kind), ValidationError);
  std::istringstream empty("");
  EXPECT_TRUE(parse_trace(empty).empty());
}

TEST(Trace, SynthIsDeterministicAndInsideTheFootprint) {
  for (auto k : {SynthKind::Stream, SynthKind::Random, SynthKind::PointerChase}) {
    SynthOptions o;
    o.kind = k;
    o.length = 2000;
    o.footprint = 1 << 20;
    auto a = synth_trace(o);
    EXPECT_EQ(a, synth_trace(o));
    EXPECT_EQ(a.size(), 2000u);
    for (const auto& r : a) EXPECT_LT(r.address, o.footprint);
    EXPECT_EQ(parse_synth_kind(to_string(k)), k);
  }
}

TEST(Sim, ComputeOnlyRunsAtIpcOne) {
  std::vector<Trace> t{{{500, false, 0, ReqKind::Read}}};
  auto rep = run_sim(t, one_channel(), PageMap{});
  EXPECT_EQ(rep.cores[0].instructions, 500u);
  EXPECT_EQ(rep.cores[0].cycles, 500);
  EXPECT_DOUBLE_EQ(rep.cores[0].ipc, 1.0);
}

TEST(Sim, SingleReadCostsTheColdLatency) {
  std::vector<Trace> t{{{100, true, 0x1000, ReqKind::Read}}};
  auto rep = run_sim(t, one_channel(), identity_map(t));
  EXPECT_EQ(rep.cores[0].instructions, 101u);
  EXPECT_EQ(rep.cores[0].cycles, 100 + 26);
  EXPECT_EQ(rep.cores[0].read_latency, 26);
}

TEST(Sim, EmptyTraceFinishesImmediately) {
  std::vector<Trace> t{{}};
  auto rep = run_sim(t, one_channel(), PageMap{});
  EXPECT_EQ(rep.cores[0].cycles, 0);
  EXPECT_EQ(rep.cores[0].instructions, 0u);
}

TEST(Sim, WeightedSpeedupDefinition) {
  std::vector<double> shared{0.5, 0.25}, alone{1.0, 0.5};
  EXPECT_DOUBLE_EQ(weighted_speedup(shared, alone), 1.0);
  SynthOptions o;
  o.length = 3000;
  o.footprint = 1 << 20;
  std::vector<Trace> t{synth_trace(o), (o.seed = 2, synth_trace(o))};
  auto rep = run_sim(t, one_channel(), identity_map(t), {true, std::nullopt});
  ASSERT_TRUE(rep.ws);
  double sum = 0;
  for (const auto& c : rep.cores) {
    EXPECT_GT(c.alone_ipc, 0);
    EXPECT_LE(c.ipc, c.alone_ipc + 1e-12);  // sharing never helps an in-order core
    sum += c.ipc / c.alone_ipc;
  }
  EXPECT_DOUBLE_EQ(*rep.ws, sum);
  auto j = nlohmann::json::parse(rep.to_json());
  EXPECT_EQ(j["schema"], "flydram-sim/1");
}

TEST(Sim, RandomPagesAreInjective) {
  std::vector<PageKey> keys;
  for (std::uint64_t i = 0; i < 10000; ++i) keys.push_back(page_key(static_cast<std::uint32_t>(i % 4), i));
  auto m = page_alloc_random(keys, 20000, 3);
  EXPECT_EQ(m.pages.size(), 10000u);
  EXPECT_TRUE(m.injective());
  for (const auto& [k, p] : m.pages) EXPECT_LT(p, 20000u);
  EXPECT_THROW(page_alloc_random(keys, 9999, 3), ValidationError);
  EXPECT_THROW(m.translate(7, 0), ValidationError);
}

TEST(Sim, AwareAllocatorIsGreedyOptimal) {
  // One-line pages over 1 bank x 4 rows x 4 cols: cost varies by column.
  Geometry g{1, 4, 4, 64};
  AddressMap map{g, 1};
  auto prof = LatencyProfile::uniform(1, 4, {7500, 10000, 12500, 13125}, {7500, 10000, 12500, 13125}, 3, 3);
  prof.tras = 27000;
  prof.trcd = {0, 3, 1, 3};
  std::vector<PageKey> order{page_key(0, 0), page_key(0, 1), page_key(0, 2)};
  auto m = page_alloc_aware(order, &prof, map, 64);
  const std::uint64_t physical = map.capacity() / 64;
  std::vector<Picos> costs;
  for (std::uint64_t p = 0; p < physical; ++p) costs.push_back(page_latency_cost(map, &prof, p, 64));
  // Exhaustive: the hottest page gets a cheapest page, and assigned costs are
  // non-decreasing down the hotness order.
  auto cheapest = *std::min_element(costs.begin(), costs.end());
  EXPECT_EQ(costs[m.pages.at(order[0])], cheapest);
  for (std::size_t i = 1; i < order.size(); ++i)
    EXPECT_LE(costs[m.pages.at(order[i - 1])], costs[m.pages.at(order[i])]);
  std::vector<Picos> sorted = costs;
  std::sort(sorted.begin(), sorted.end());
  Picos best = sorted[0] + sorted[1] + sorted[2], got = 0;
  for (auto k : order) got += costs[m.pages.at(k)];
  EXPECT_EQ(got, best);
  EXPECT_TRUE(m.injective());
}

TEST(Sim, AttachedDeviceAtBaselineNeverFlips) {
  auto s = preset("A-M1");
  auto dev = Device::build(s, kGeo, 1);
  SimConfig cfg = one_channel();
  cfg.controller.keep_log = true;
  cfg.devices = {&dev};
  SynthOptions o;
  o.length = 5000;
  o.footprint = 1 << 22;
  std::vector<Trace> t{synth_trace(o)};
  auto rep = run_sim(t, cfg, identity_map(t));
  EXPECT_EQ(rep.commands.flips, 0u);
  EXPECT_EQ(rep.audit_findings, 0u);
}

}  // namespace
}  // namespace flydram
