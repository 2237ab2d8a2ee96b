#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "flydram/device.hpp"
#include "flydram/errors.hpp"
#include "flydram/variation.hpp"

namespace flydram {
namespace {

TEST(BerCurve, InterpolatesFromImplicitZeroAndHolds) {
  BerCurve c({{2500, 0.01}, {5000, 0.4}});
  EXPECT_DOUBLE_EQ(c.at(0), 0.0);
  EXPECT_DOUBLE_EQ(c.at(1250), 0.005);
  EXPECT_DOUBLE_EQ(c.at(2500), 0.01);
  EXPECT_NEAR(c.at(3750), 0.205, 1e-12);
  EXPECT_DOUBLE_EQ(c.at(20000), 0.4);
}

TEST(BerCurve, ParseRenderRoundTrip) {
  auto c = BerCurve::parse("2.5ns:0.0025, 5ns:0.05, 7.5ns:0.45");
  EXPECT_EQ(BerCurve::parse(c.render()), c);
  EXPECT_THROW(BerCurve::parse("5ns:0.1, 2.5ns:0.2"), ValidationError);
  EXPECT_THROW(BerCurve::parse("2.5ns:0.7"), ValidationError);
}

TEST(VariationSpec, PresetsValidateAndRoundTripThroughConfig) {
  for (const auto& name : preset_names()) {
    auto s = preset(name);
    EXPECT_EQ(s.model_name, name);
    auto cfg = s.to_config();
    auto back = VariationSpec::from_config(KvConfig::parse(cfg.render()));
    EXPECT_EQ(back, s) << name;
  }
  EXPECT_THROW(preset("Z-9"), ValidationError);
}

TEST(VariationSpec, RejectsBrokenInvariants) {
  auto s = preset("A-M1");
  s.fast_trcd = s.slow_trcd;
  EXPECT_THROW(s.validate(), ValidationError);
  s = preset("A-M1");
  s.frac_fast_trp = 1.5;
  EXPECT_THROW(s.validate(), ValidationError);
  s = preset("A-M1");
  s.flip_asymmetry = 0.5;
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(VariationSpec, AsymmetryDecaysTowardCoinToss) {
  auto s = preset("A-M1");
  auto low = s.trcd_flip(2500);
  EXPECT_DOUBLE_EQ(low.zero_to_one, 0.0025);
  EXPECT_NEAR(low.zero_to_one / low.one_to_zero, std::pow(8.0, 1 - 2 * 0.0025), 1e-9);
  auto high = s.trcd_flip(10000);
  EXPECT_DOUBLE_EQ(high.zero_to_one, 0.5);
  EXPECT_DOUBLE_EQ(high.one_to_zero, 0.5);
  auto none = s.trcd_flip(0);
  EXPECT_EQ(none.zero_to_one, 0.0);
  EXPECT_EQ(none.one_to_zero, 0.0);
}

TEST(VariationSpec, DeterministicModeFlipsEverything) {
  auto s = preset("B-M1");
  s.flip_mode = FlipMode::Deterministic;
  auto p = s.trp_flip(2500);
  EXPECT_EQ(p.zero_to_one, 1.0);
  EXPECT_EQ(p.one_to_zero, 1.0);
  EXPECT_EQ(s.trp_flip(0).zero_to_one, 0.0);
}

TEST(PlantedMap, ExactFastCount) {
  // round(0.93 * 1024) = 952 fast entries.
  for (auto shape : {ClusterShape::ColumnMajor, ClusterShape::RowBand, ClusterShape::BankSkew}) {
    auto m = plant_threshold_map(8, 128, 0.93, 7500, 10000, {shape, 0.1, 4, 2.0}, 11);
    EXPECT_EQ(std::count(m.begin(), m.end(), 7500), 952);
    EXPECT_EQ(std::count(m.begin(), m.end(), 10000), 1024 - 952);
  }
}

TEST(PlantedMap, ExtremesAndDeterminism) {
  Clustering c{};
  auto all = plant_threshold_map(4, 64, 1.0, 7500, 10000, c, 1);
  EXPECT_TRUE(std::all_of(all.begin(), all.end(), [](auto v) { return v == 7500; }));
  auto none = plant_threshold_map(4, 64, 0.0, 7500, 10000, c, 1);
  EXPECT_TRUE(std::all_of(none.begin(), none.end(), [](auto v) { return v == 10000; }));
  EXPECT_EQ(plant_threshold_map(4, 64, 0.5, 7500, 10000, c, 9), plant_threshold_map(4, 64, 0.5, 7500, 10000, c, 9));
  EXPECT_NE(plant_threshold_map(4, 64, 0.5, 7500, 10000, c, 9), plant_threshold_map(4, 64, 0.5, 7500, 10000, c, 10));
}

TEST(PlantedMap, ColumnMajorAlignsAcrossBanks) {
  // Without jitter the slow set is the same index range in every group.
  auto m = plant_threshold_map(8, 128, 0.75, 7500, 10000, {ClusterShape::ColumnMajor, 0.0, 4, 2.0}, 5);
  for (std::uint32_t g = 1; g < 8; ++g)
    for (std::uint32_t i = 0; i < 128; ++i) EXPECT_EQ(m[g * 128 + i], m[i]) << g << "," << i;
}

TEST(PlantedMap, RowBandIsContiguous) {
  // One band without jitter: the slow entries of each group form one
  // circular run.
  auto m = plant_threshold_map(1, 1000, 0.8, 7500, 10000, {ClusterShape::RowBand, 0.0, 1, 2.0}, 3);
  int transitions = 0;
  for (std::size_t i = 0; i < m.size(); ++i) transitions += m[i] != m[(i + 1) % m.size()];
  EXPECT_EQ(transitions, 2);
}

TEST(PlantedMap, BankSkewConcentratesSlowEntries) {
  auto m = plant_threshold_map(8, 512, 0.8, 7500, 10000, {ClusterShape::BankSkew, 0.0, 4, 2.0}, 4);
  std::vector<int> per_bank(8, 0);
  for (std::uint32_t g = 0; g < 8; ++g)
    per_bank[g] = static_cast<int>(std::count(m.begin() + g * 512, m.begin() + (g + 1) * 512, 10000));
  auto max = *std::max_element(per_bank.begin(), per_bank.end());
  // 20% slow of 4096 = 819 entries; without noise whole banks fill first.
  EXPECT_EQ(max, 512);
}

}  // namespace
}  // namespace flydram
