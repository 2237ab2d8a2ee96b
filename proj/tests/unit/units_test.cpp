#include <gtest/gtest.h>

#include <set>

#include "flydram/errors.hpp"
#include "flydram/kvconfig.hpp"
#include "flydram/rng.hpp"
#include "flydram/units.hpp"

namespace flydram {
namespace {

TEST(Units, CycleConversionRoundsUp) {
  EXPECT_EQ(to_cycles(0), 0);
  EXPECT_EQ(to_cycles(1250), 1);
  EXPECT_EQ(to_cycles(1251), 2);
  EXPECT_EQ(to_cycles(13125), 11);
  EXPECT_EQ(to_cycles(7500), 6);
  EXPECT_EQ(to_cycles(10000), 8);
  EXPECT_EQ(to_cycles(5000), 4);
}

TEST(Units, QuantumRounding) {
  EXPECT_TRUE(is_quantized(7500));
  EXPECT_FALSE(is_quantized(13125));
  EXPECT_EQ(round_up_to_quantum(23125), 25000);
  EXPECT_EQ(round_nearest_quantum(23125), 22500);
  EXPECT_EQ(round_nearest_quantum(23750), 25000);
}

TEST(Units, ParseLatency) {
  EXPECT_EQ(parse_latency("7.5ns"), 7500);
  EXPECT_EQ(parse_latency("13.125ns"), 13125);
  EXPECT_EQ(parse_latency("13125ps"), 13125);
  EXPECT_EQ(parse_latency("64ms"), 64'000'000'000);
  EXPECT_EQ(parse_latency("0.5us"), 500'000);
  EXPECT_EQ(parse_latency("2500"), 2500);
  EXPECT_EQ(parse_latency("\"10ns\""), 10000);
  EXPECT_THROW(parse_latency("7.5"), ValidationError);
  EXPECT_THROW(parse_latency("1.0005ns"), ValidationError);
  EXPECT_THROW(parse_latency("fast"), ValidationError);
  EXPECT_THROW(parse_latency("3parsecs"), ValidationError);
}

TEST(Units, FormatRoundTrips) {
  for (Picos ps : {Picos{1}, Picos{2500}, Picos{7500}, Picos{13125}, Picos{36000}, Picos{64'000'000'000}, Picos{999}})
    EXPECT_EQ(parse_latency(format_latency(ps)), ps) << ps;
  EXPECT_EQ(format_latency(7500), "7.5ns");
  EXPECT_EQ(format_latency(13125), "13.125ns");
}

TEST(Rng, DeterministicAndSeedSensitive) {
  SplitMix64 a(42), b(42), c(5);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    auto x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitMixReferenceValues) {
  // First outputs of SplitMix64 seeded with 0, from the reference C code.
  SplitMix64 g(0);
  EXPECT_EQ(g(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(g(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(g(), 0x06C45D188009454FULL);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  SplitMix64 g(7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = g.below(10);
    ASSERT_LT(v, 10u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 10u);
}

TEST(Rng, ThresholdMatchesProbability) {
  SplitMix64 g(3);
  const auto t = probability_threshold(0.25);
  int hits = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) hits += g() < t;
  EXPECT_NEAR(hits / double(n), 0.25, 0.005);
  EXPECT_EQ(probability_threshold(0.0), 0u);
  EXPECT_EQ(probability_threshold(1.0), ~std::uint64_t{0});
}

TEST(KvConfig, ParsesAndTracksConsumption) {
  auto cfg = KvConfig::parse("# comment\nname = \"A-M1\"\nfast = 7.5ns\ncount = 12\nflag = true\nlist = a, b ,c\n");
  EXPECT_EQ(cfg.get_string("name"), "A-M1");
  EXPECT_EQ(cfg.get_latency("fast"), 7500);
  EXPECT_EQ(cfg.get_int("count"), 12);
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_EQ(cfg.get_list("list"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_NO_THROW(cfg.reject_unknown());
}

TEST(KvConfig, UnknownKeysAreErrors) {
  auto cfg = KvConfig::parse("known = 1\ntypo_key = 2\n");
  cfg.get_int("known");
  try {
    cfg.reject_unknown();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("typo_key"), std::string::npos);
  }
}

TEST(KvConfig, MalformedLinesReportLineNumbers) {
  try {
    KvConfig::parse("a = 1\nbroken line\n", "x.cfg");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos);
  }
}

TEST(KvConfig, RenderRoundTripsAndMergeOverrides) {
  auto a = KvConfig::parse("x = 1\ny = \"two words\"\n");
  auto b = KvConfig::parse("y = 3\nz = 4\n");
  a.merge(b);
  auto again = KvConfig::parse(a.render());
  EXPECT_EQ(again.get_int("x"), 1);
  EXPECT_EQ(again.get_int("y"), 3);
  EXPECT_EQ(again.get_int("z"), 4);
  EXPECT_EQ(again.render(), a.render());
}

TEST(KvConfig, MissingRequiredKeyThrows) {
  KvConfig cfg;
  EXPECT_THROW(cfg.get_string("absent"), ValidationError);
  EXPECT_EQ(cfg.get_int("absent", 5), 5);
}

}  // namespace
}  // namespace flydram
