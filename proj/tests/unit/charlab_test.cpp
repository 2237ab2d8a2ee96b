#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "flydram/charlab.hpp"
#include "flydram/errors.hpp"

namespace flydram {
namespace {

constexpr Geometry kSmall{2, 32, 16, 64};

Device slow_device(const char* name, std::uint64_t seed = 1) {
  auto s = preset(name);
  s.frac_fast_trcd = 0.5;
  s.frac_fast_trp = 0.5;
  return Device::build(s, kSmall, seed);
}

TEST(Plan, ConfigRoundTripAndPatternParsing) {
  auto cfg = KvConfig::parse(
      "test = trp-row\nlatencies = 10ns, 7.5ns\npatterns = 0xaa/0x33, 0xcc\nrounds = 3\n"
      "scope_banks = 0:1\nscope_rows = 4:8\nscope_cols = 0:16\ndetail = totals\nseed = 9\n");
  auto p = CampaignPlan::from_config(cfg);
  EXPECT_EQ(p.kind, TestKind::TrpRowOrder);
  EXPECT_EQ(p.latencies, (std::vector<Picos>{10000, 7500}));
  EXPECT_EQ(p.patterns, (std::vector<PatternPair>{{0xaa, 0x33}, {0xcc, 0x33}}));
  EXPECT_EQ(p.scope, (Scope{0, 1, 4, 8, 0, 16}));
  EXPECT_EQ(p.detail, Detail::Totals);
  EXPECT_EQ(CampaignPlan::from_config(KvConfig::parse(p.to_config().render())), p);
  for (auto k : {TestKind::ReadCacheline, TestKind::ReadRow, TestKind::TrcdColOrder, TestKind::TrpRowOrder,
                 TestKind::TrasRetention})
    EXPECT_EQ(parse_test_kind(to_string(k)), k);
  EXPECT_THROW(parse_test_kind("bogus"), ValidationError);
}

TEST(Plan, ValidationRejectsBrokenPlans) {
  CampaignPlan p;
  p.patterns = standard_patterns();
  EXPECT_THROW(p.validate(), ValidationError);  // no latencies
  p.latencies = {7500};
  EXPECT_NO_THROW(p.validate());
  p.rounds = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p.rounds = 1;
  p.kind = TestKind::TrpRowOrder;
  p.patterns = {{0x5a, 0x5a}};
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Patterns, StandardSets) {
  EXPECT_EQ(standard_sweep(), (std::vector<Picos>{12500, 10000, 7500, 5000, 2500}));
  auto pats = standard_patterns();
  ASSERT_EQ(pats.size(), 4u);
  for (const auto& p : pats) EXPECT_EQ(p.secondary, static_cast<std::uint8_t>(~p.primary));
  for (const auto& p : standard_pattern_pairs()) EXPECT_NE(p.primary, p.secondary);
}

TEST(DiffLine, RecordsFlippedPositions) {
  auto want = pattern_line(0x00);
  auto got = want;
  got[2] = 0b101;
  got[7] = 1ULL << 63;
  auto e = diff_line(1, 2, 3, got, want);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->error_bits(), 3u);
  EXPECT_EQ(e->beat_errors(2), 2u);
  EXPECT_EQ(e->beat_errors(7), 1u);
  EXPECT_FALSE(diff_line(0, 0, 0, want, want));
}

TEST(Charlab, StandardLatencyIsErrorFree) {
  for (const char* name : {"A-M1", "B-M1", "C-M0"}) {
    auto d = slow_device(name);
    for (Picos lat : {Picos{13125}, Picos{12500}, Picos{10000}}) {
      for (const auto& p : standard_patterns()) {
        auto c = test_trcd_col_order(d, lat, p, Scope::full(kSmall));
        EXPECT_EQ(c.error_bits, 0u) << name << " trcd " << lat;
        EXPECT_EQ(c.tested_lines, kSmall.lines());
        EXPECT_EQ(c.tested_bits, kSmall.lines() * kLineBits);
        c = test_trp_row_order(d, lat, p, Scope::full(kSmall));
        EXPECT_EQ(c.error_bits, 0u) << name << " trp " << lat;
      }
    }
  }
}

TEST(Charlab, ColumnOrderErrorsMatchPlantedColumns) {
  auto s = preset("A-M1");
  s.frac_fast_trcd = 0.5;
  s.flip_mode = FlipMode::Deterministic;
  auto d = Device::build(s, kSmall, 4);
  auto c = test_trcd_col_order(d, 7500, {0x00, 0xff}, Scope::full(kSmall));
  std::uint64_t slow_lines = 0;
  for (std::uint32_t b = 0; b < kSmall.banks; ++b)
    for (std::uint32_t col = 0; col < kSmall.cols_per_row; ++col)
      slow_lines += (d.base_trcd(b, col) > 7500) * kSmall.rows_per_bank;
  EXPECT_EQ(c.erroneous_lines, slow_lines);
  EXPECT_EQ(c.error_bits, slow_lines * kLineBits);
  for (const auto& e : c.lines) EXPECT_GT(d.base_trcd(e.bank, e.col), 7500);
}

TEST(Charlab, ReadRowOnlyTheFirstColumnSeesTheDeficit) {
  auto s = preset("A-M1");
  s.frac_fast_trcd = 0.0;
  s.flip_mode = FlipMode::Deterministic;
  auto d = Device::build(s, kSmall, 2);
  auto c = test_read_row(d, 1, 7, 7500, 0xaa);
  EXPECT_EQ(c.tested_lines, kSmall.cols_per_row);
  ASSERT_EQ(c.lines.size(), 1u);
  EXPECT_EQ(c.lines[0].col, 0u);
  EXPECT_EQ(c.lines[0].row, 7u);
}

TEST(Charlab, PrechargeErrorsCoverTheRow) {
  auto s = preset("B-M1");
  s.frac_fast_trp = 0.0;
  s.flip_mode = FlipMode::Deterministic;
  auto d = Device::build(s, kSmall, 2);
  auto c = test_trp_row_order(d, 7500, {0x00, 0xff}, {0, 1, 3, 4, 0, 16});
  EXPECT_EQ(c.erroneous_lines, kSmall.cols_per_row);
  for (const auto& e : c.lines) EXPECT_EQ(e.row, 3u);
}

TEST(Charlab, TrasRetentionRefusesBelowMinimumAndPassesAbove) {
  auto d = slow_device("A-M1");
  auto refused = test_tras_retention(d, 20000, 64'000'000'000, 0xff, Scope::full(kSmall));
  EXPECT_EQ(refused.status, CellStatus::Refused);
  EXPECT_EQ(refused.tested_lines, 0u);
  for (Picos t = 36000; t >= 22500; t -= 2500) {
    auto c = test_tras_retention(d, t, 64'000'000'000, 0xff, Scope::full(kSmall));
    EXPECT_EQ(c.status, CellStatus::Completed);
    EXPECT_EQ(c.error_bits, 0u);
  }
}

TEST(Campaign, ParallelMatchesSerialAndStreamKeysDiffer) {
  DeviceFactory f = [] { return slow_device("B-M1", 7); };
  CampaignPlan p;
  p.kind = TestKind::TrcdColOrder;
  p.latencies = {7500, 5000};
  p.patterns = {{0x00, 0xff}, {0xaa, 0x55}};
  p.rounds = 2;
  auto a = run_campaign(f, p, 1);
  auto b = run_campaign(f, p, 2);
  ASSERT_EQ(a.cells.size(), 8u);
  ASSERT_EQ(b.cells.size(), 8u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].lines, b.cells[i].lines);
    EXPECT_EQ(a.cells[i].latency, b.cells[i].latency);
  }
  EXPECT_EQ(a.cells[0].round, 0u);
  EXPECT_EQ(a.cells[4].round, 1u);
  EXPECT_NE(a.cells[0].lines, a.cells[4].lines);  // rounds draw independent flips
  EXPECT_NE(cell_stream_key(1, 0), cell_stream_key(1, 1));
  EXPECT_EQ(a.scope_lines(), kSmall.lines());
}

TEST(Campaign, CsvAndBinaryRoundTrip) {
  DeviceFactory f = [] { return slow_device("B-M1", 3); };
  CampaignPlan p;
  p.latencies = {5000};
  p.patterns = {{0xcc, 0x33}};
  auto r = run_campaign(f, p, 1);
  ASSERT_GT(r.error_bits(), 0u);
  std::stringstream blob;
  r.save(blob);
  auto back = CampaignResult::load(blob);
  EXPECT_EQ(back.plan, r.plan);
  EXPECT_EQ(back.geometry, r.geometry);
  ASSERT_EQ(back.cells.size(), 1u);
  EXPECT_EQ(back.cells[0].lines, r.cells[0].lines);
  EXPECT_EQ(back.error_bits(), r.error_bits());

  std::ostringstream csv;
  r.write_csv(csv);
  auto text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "round,latency_ps,pattern,bank,row,col,beat,error_bits");
  std::size_t rows = 0, bits = 0;
  for (const auto& rec : r.records()) {
    ++rows;
    bits += rec.error_bits;
    EXPECT_EQ(rec.flipped_positions.size(), rec.error_bits);
  }
  EXPECT_EQ(bits, r.error_bits());
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), rows + 1);

  std::stringstream bad("FDCR9garbage");
  EXPECT_THROW(CampaignResult::load(bad), IntegrityError);
}

}  // namespace
}  // namespace flydram
