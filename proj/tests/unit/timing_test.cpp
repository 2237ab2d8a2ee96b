#include <gtest/gtest.h>

#include <sstream>

#include "flydram/device.hpp"
#include "flydram/errors.hpp"
#include "flydram/timing.hpp"

namespace flydram {
namespace {

constexpr TimingSet kStd = TimingSet::standard();

TEST(Tras, MinimumIsFloorPlusReadout) {
  // 5 + 13.125 + 5 = 23.125ns, nearest 2.5ns step is 22.5ns.
  EXPECT_EQ(tras_min(kStd), 22500);
  EXPECT_EQ(check_tras(22500, kStd), TrasCheck::Ok);
  EXPECT_EQ(check_tras(20000, kStd), TrasCheck::BelowMin);
  EXPECT_EQ(check_tras(36000, kStd), TrasCheck::Ok);
}

TEST(TimingSet, RejectsNonPositiveFields) {
  auto t = kStd;
  t.trcd = 0;
  EXPECT_THROW(t.validate(), ValidationError);
  EXPECT_NO_THROW(kStd.validate());
}

TEST(Engine, EnforceRejectsEachRule) {
  TimingEngine e(2);
  ASSERT_TRUE(e.issue(Command::act(0, 3, 0), IssueMode::Enforce, kStd).accepted());
  auto r = e.issue(Command::read(0, 3, 0, 10000), IssueMode::Enforce, kStd);
  EXPECT_EQ(r.status, IssueStatus::Violated);
  EXPECT_EQ(r.violation, (Violation{Rule::Trcd, 13125, 10000}));
  ASSERT_TRUE(e.issue(Command::read(0, 3, 0, 13125), IssueMode::Enforce, kStd).accepted());
  r = e.issue(Command::read(0, 3, 1, 15000), IssueMode::Enforce, kStd);
  EXPECT_EQ(r.violation.rule, Rule::DataBus);
  r = e.issue(Command::pre(0, 3, 30000), IssueMode::Enforce, kStd);
  EXPECT_EQ(r.violation.rule, Rule::Tras);
  ASSERT_TRUE(e.issue(Command::pre(0, 3, 36000), IssueMode::Enforce, kStd).accepted());
  r = e.issue(Command::act(0, 4, 40000), IssueMode::Enforce, kStd);
  EXPECT_EQ(r.violation, (Violation{Rule::Trp, 13125, 4000}));
  r = e.issue(Command::act(0, 4, 49125), IssueMode::Enforce, kStd);
  ASSERT_TRUE(r.accepted());
  EXPECT_EQ(r.eff_trp, 13125);
}

TEST(Engine, ReadToPrechargeCoversTheBurst) {
  TimingEngine e(1);
  e.issue(Command::act(0, 0, 0), IssueMode::Enforce, kStd);
  e.issue(Command::read(0, 0, 0, 30000), IssueMode::Enforce, kStd);
  auto r = e.issue(Command::pre(0, 0, 40000), IssueMode::Enforce, kStd);
  EXPECT_EQ(r.violation, (Violation{Rule::ReadToPrecharge, 18125, 10000}));
  EXPECT_TRUE(e.issue(Command::pre(0, 0, 48125), IssueMode::Enforce, kStd).accepted());
}

TEST(Engine, ProtocolErrorsInEveryMode) {
  TimingEngine e(1);
  for (auto mode : {IssueMode::Enforce, IssueMode::Permissive}) {
    EXPECT_EQ(e.issue(Command::read(0, 0, 0, 0), mode, kStd).violation.rule, Rule::BankState);
    EXPECT_EQ(e.issue(Command::pre(0, 0, 0), mode, kStd).violation.rule, Rule::BankState);
  }
  e.issue(Command::act(0, 1, 100), IssueMode::Permissive, kStd);
  EXPECT_EQ(e.issue(Command::act(0, 2, 200), IssueMode::Permissive, kStd).violation.rule, Rule::BankState);
  EXPECT_EQ(e.issue(Command::read(0, 2, 0, 300), IssueMode::Permissive, kStd).violation.rule, Rule::BankState);
  EXPECT_EQ(e.issue(Command::read(0, 1, 0, 50), IssueMode::Permissive, kStd).violation.rule, Rule::TimeOrder);
  Command bad{CommandKind::Read, 0, 1, std::nullopt, 400};
  EXPECT_THROW(e.issue(bad, IssueMode::Permissive, kStd), ValidationError);
  EXPECT_THROW(e.issue(Command::act(3, 0, 400), IssueMode::Permissive, kStd), ValidationError);
}

TEST(Engine, PermissiveForwardsReducedLatencyToTheDevice) {
  auto s = preset("A-M1");
  s.frac_fast_trcd = 0.0;
  s.frac_fast_trp = 0.0;
  s.flip_mode = FlipMode::Deterministic;
  auto dev = Device::build(s, {2, 8, 4, 64}, 1);
  dev.write_line(0, 2, 1, pattern_line(0x0f));
  TimingEngine e(2, &dev);
  e.issue(Command::act(0, 2, 0), IssueMode::Permissive, kStd);
  auto r = e.issue(Command::read(0, 2, 1, 7500), IssueMode::Permissive, kStd);
  ASSERT_TRUE(r.accepted());
  EXPECT_EQ(r.eff_trcd, 7500);
  EXPECT_EQ(*r.data, pattern_line(0xf0));
  EXPECT_EQ(r.flips.cause, FlipCause::Activation);
  EXPECT_EQ(r.flips.deficit, 2500);
  // A second read of the same activation sees the stored (flipped) cells.
  r = e.issue(Command::read(0, 2, 1, 12500), IssueMode::Permissive, kStd);
  EXPECT_TRUE(r.flips.empty());
  EXPECT_EQ(*r.data, pattern_line(0xf0));

  auto refused = e.issue(Command::pre(0, 2, 20000), IssueMode::Permissive, kStd);
  EXPECT_EQ(refused.status, IssueStatus::Refused);
  EXPECT_EQ(refused.violation, (Violation{Rule::Tras, 22500, 20000}));
  ASSERT_TRUE(e.issue(Command::pre(0, 2, 30000), IssueMode::Permissive, kStd).accepted());
  r = e.issue(Command::act(0, 3, 35000), IssueMode::Permissive, kStd);
  EXPECT_EQ(r.flips.cause, FlipCause::Precharge);
  EXPECT_EQ(r.flips.deficit, 5000);
  EXPECT_EQ(r.flips.flips.size(), 4u * kLineBits);
  EXPECT_EQ(e.total_flips(), kLineBits + 4u * kLineBits);
}

TEST(Audit, CleanLogHasNoFindings) {
  TimingEngine e(2);
  Picos t = 0;
  for (std::uint32_t i = 0; i < 20; ++i) {
    auto b = i % 2;
    e.issue(Command::act(b, i, t), IssueMode::Enforce, kStd);
    e.issue(Command::read(b, i, 0, t + 13125), IssueMode::Enforce, kStd);
    e.issue(Command::pre(b, i, t + 36000), IssueMode::Enforce, kStd);
    t += 50000;
  }
  EXPECT_EQ(e.log().size(), 60u);
  EXPECT_TRUE(audit(e.log()).empty());
}

TEST(Audit, FindsPermissiveViolationsAtTheirIndex) {
  TimingEngine e(1);
  e.issue(Command::act(0, 0, 0), IssueMode::Permissive, kStd);
  e.issue(Command::read(0, 0, 0, 7500), IssueMode::Permissive, kStd);
  e.issue(Command::pre(0, 0, 36000), IssueMode::Permissive, kStd);
  e.issue(Command::act(0, 1, 46000), IssueMode::Permissive, kStd);
  auto f = audit(e.log());
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0], (AuditFinding{1, {Rule::Trcd, 13125, 7500}}));
  EXPECT_EQ(f[1], (AuditFinding{3, {Rule::Trp, 13125, 10000}}));
}

TEST(Audit, JudgesEachCommandUnderItsOwnTimingSet) {
  TimingSet fast = kStd;
  fast.trcd = 7500;
  TimingEngine e(1);
  e.issue(Command::act(0, 0, 0), IssueMode::Enforce, fast);
  ASSERT_TRUE(e.issue(Command::read(0, 0, 0, 7500), IssueMode::Enforce, fast).accepted());
  EXPECT_TRUE(audit(e.log()).empty());
  EXPECT_EQ(e.log().timings().size(), 1u);
  std::ostringstream csv;
  e.log().write_csv(csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "time_ps,kind,bank,row,col,eff_trcd_ps,eff_trp_ps,eff_tras_ps,flips");
}

}  // namespace
}  // namespace flydram
