#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "flydram/controller.hpp"
#include "flydram/errors.hpp"

namespace flydram {
namespace {

constexpr TimingSet kStd = TimingSet::standard();
constexpr Geometry kGeo{8, 1024, 128, 64};

Cycle pair_cycles(const TimingSet& t) {
  return to_cycles(t.trp) + to_cycles(t.trcd) + to_cycles(t.tcl) + to_cycles(t.tbl);
}

TEST(AddressMap, DecodeEncodeRoundTrip) {
  AddressMap m{kGeo, 2};
  EXPECT_EQ(m.capacity(), kGeo.bytes() * 2);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto addr = (rng() % m.capacity()) & ~std::uint64_t{63};
    auto d = m.decode(addr);
    EXPECT_LT(d.channel, 2u);
    EXPECT_LT(d.bank, kGeo.banks);
    EXPECT_LT(d.row, kGeo.rows_per_bank);
    EXPECT_LT(d.col, kGeo.cols_per_row);
    EXPECT_EQ(m.encode(d), addr);
  }
  // Consecutive lines walk columns first.
  EXPECT_EQ(m.decode(64).col, 1u);
  EXPECT_EQ(m.decode(64).row, 0u);
}

struct Driver {
  Controller ctl;
  Cycle now = 0;
  std::uint64_t id = 0;

  explicit Driver(const ControllerConfig& cfg) : ctl(cfg, kGeo) {}

  Completion read(const DecodedAddress& where) {
    MemRequest req{id++, ReqKind::Read, 0, now, 0};
    EXPECT_TRUE(ctl.enqueue(req, where));
    std::vector<Completion> done;
    for (;; ++now) {
      ctl.tick(now, done);
      if (!done.empty()) return done.front();
      if (now > 100000) throw std::runtime_error("controller stalled");
    }
  }
};

TEST(Controller, ColdReadLatency) {
  Driver d(ControllerConfig{});
  auto c = d.read({0, 2, 5, 7});
  EXPECT_EQ(c.done - c.arrival, to_cycles(kStd.trcd) + to_cycles(kStd.tcl) + to_cycles(kStd.tbl));
  EXPECT_EQ(c.done - c.arrival, 26);
}

TEST(Controller, SameRowSecondReadIsARowHit) {
  Driver d(ControllerConfig{});
  d.read({0, 1, 9, 0});
  d.now += 1;
  auto c = d.read({0, 1, 9, 1});
  EXPECT_EQ(d.ctl.stats().row_hits, 1u);
  EXPECT_EQ(d.ctl.stats().acts, 1u);
  EXPECT_EQ(c.done - c.arrival, to_cycles(kStd.tcl) + to_cycles(kStd.tbl));
}

TEST(Controller, AlternatingRowPairLatencyIsClosedForm) {
  for (std::uint8_t cls : {std::uint8_t{0}, kStandardClass}) {
    auto prof = LatencyProfile::uniform(kGeo.banks, kGeo.cols_per_row, {7500, 10000, 12500, 13125},
                                        {7500, 10000, 12500, 13125}, cls, cls);
    prof.tras = 27000;
    ControllerConfig cfg;
    cfg.profile = &prof;
    cfg.keep_log = true;
    Driver d(cfg);
    auto t = lookup_timing(&prof, 0, 0);
    d.read({0, 0, 10, 0});
    for (int i = 0; i < 20; ++i) {
      d.now += 40;  // past tRAS and the read-to-precharge window
      auto c = d.read({0, 0, static_cast<std::uint32_t>(i % 2 ? 10 : 11), 0});
      EXPECT_EQ(c.done - c.arrival, pair_cycles(t)) << int{cls};
    }
    EXPECT_EQ(pair_cycles(t), cls == 0 ? 27 : 37);
    EXPECT_TRUE(audit(d.ctl.engine().log()).empty());
  }
}

TEST(Controller, QueueDepthIsEnforced) {
  ControllerConfig cfg;
  cfg.queue_depth = 2;
  Controller c(cfg, kGeo);
  EXPECT_TRUE(c.enqueue({0, ReqKind::Read, 0, 0, 0}, {0, 0, 0, 0}));
  EXPECT_TRUE(c.enqueue({1, ReqKind::Read, 0, 0, 0}, {0, 1, 0, 0}));
  EXPECT_TRUE(c.full());
  EXPECT_FALSE(c.enqueue({2, ReqKind::Read, 0, 0, 0}, {0, 2, 0, 0}));
  cfg.queue_depth = 0;
  EXPECT_THROW(Controller(cfg, kGeo), ValidationError);
}

TEST(Controller, StatsCsvListsEveryCommand) {
  ControllerConfig cfg;
  cfg.keep_stats = true;
  Driver d(cfg);
  d.read({0, 0, 3, 4});
  std::ostringstream out;
  d.ctl.write_stats_csv(out);
  auto s = out.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "cycle,bank,cmd,row,col,eff_trcd_ps");
  EXPECT_EQ(d.ctl.command_stats().size(), 2u);  // ACT, READ
}

}  // namespace
}  // namespace flydram
