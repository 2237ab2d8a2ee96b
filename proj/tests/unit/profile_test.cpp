#include <gtest/gtest.h>

#include <random>

#include "flydram/errors.hpp"
#include "flydram/profile.hpp"

namespace flydram {
namespace {

constexpr TimingSet kStd = TimingSet::standard();

LatencyProfile random_profile(std::mt19937_64& rng, std::uint32_t banks, std::uint32_t cols) {
  auto p = LatencyProfile::uniform(banks, cols, {5000, 7500, 10000, 13125}, {7500, 10000, 12500, 13125}, 0, 0);
  for (auto& c : p.trcd) c = static_cast<std::uint8_t>(rng() % 4);
  for (auto& c : p.trp) c = static_cast<std::uint8_t>(rng() % 4);
  p.tras = 27000;
  return p;
}

TEST(ClassTable, PadsWithStandardAndRejectsOverflow) {
  std::vector<Picos> c{7500, 10000};
  EXPECT_EQ(make_class_table(c, 13125), (ClassTable{7500, 10000, 13125, 13125}));
  std::vector<Picos> many{5000, 7500, 10000, 12500};
  EXPECT_THROW(make_class_table(many, 13125), ValidationError);
  EXPECT_THROW(validate_class_table({10000, 7500, 12500, 13125}, 13125), ValidationError);
  EXPECT_THROW(validate_class_table({7500, 10000, 12500, 12500}, 13125), ValidationError);
}

TEST(Profile, FlyTrasCoversActivationPlusReadout) {
  // ceil_1ns(13.125 + 13.125) = 27ns
  EXPECT_EQ(fly_tras(kStd), 27000);
}

TEST(Codec, RoundTripsRandomProfiles) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    auto banks = static_cast<std::uint32_t>(1 + rng() % 8);
    auto cols = static_cast<std::uint32_t>(1 + rng() % 130);
    auto p = random_profile(rng, banks, cols);
    EXPECT_EQ(decode_profile(encode_profile(p)), p);
  }
}

TEST(Codec, DefaultGeometryPayloadIs512BitsPerBank) {
  EXPECT_EQ(profile_payload_bytes_per_bank(128) * 8, 512u);
  auto p = LatencyProfile::uniform(8, 128, {7500, 10000, 12500, 13125}, {7500, 10000, 12500, 13125}, 3, 3);
  auto head = encode_profile(LatencyProfile::uniform(1, 128, p.trcd_table, p.trp_table, 3, 3)).size() - 64;
  EXPECT_EQ(encode_profile(p).size(), head + 8 * 64);
}

TEST(Codec, NibbleLayout) {
  auto p = LatencyProfile::uniform(1, 2, {7500, 10000, 12500, 13125}, {7500, 10000, 12500, 13125}, 3, 3);
  p.trcd[0] = 1;
  p.trp[0] = 2;
  p.tras = 27000;
  auto bytes = encode_profile(p);
  auto payload = bytes.back();
  EXPECT_EQ(payload & 0x0f, 0b0110);
  EXPECT_EQ(payload >> 4, 0b1111);
}

TEST(Codec, CorruptionIsAnIntegrityError) {
  std::mt19937_64 rng(2);
  auto bytes = encode_profile(random_profile(rng, 2, 16));
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_profile(truncated), IntegrityError);
  auto bad_magic = bytes;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(decode_profile(bad_magic), IntegrityError);
}

TEST(Lookup, ClassesMapToTimingSets) {
  auto p = LatencyProfile::uniform(2, 4, {7500, 10000, 12500, 13125}, {7500, 10000, 12500, 13125}, 0, 0);
  p.tras = fly_tras();
  auto t = lookup_timing(&p, 0, 0);
  EXPECT_EQ(t.trcd, 7500);
  EXPECT_EQ(t.trp, 7500);
  EXPECT_EQ(t.tras, 27000);
  EXPECT_EQ(t.tcl, kStd.tcl);
  p.trcd[1] = kStandardClass;
  p.trp[1] = kStandardClass;
  EXPECT_EQ(lookup_timing(&p, 0, 1), kStd);
  EXPECT_EQ(lookup_timing(nullptr, 1, 3), kStd);
  EXPECT_THROW(lookup_timing(&p, 2, 0), ValidationError);
}

TEST(Distribution, ExactFractionsNestedAcrossSeeds) {
  auto p = profile_from_distribution(8, 128, 0.93, 0.74, 7500, 10000, 4);
  EXPECT_DOUBLE_EQ(p.trcd_fraction(7500), std::llround(0.93 * 1024) / 1024.0);
  EXPECT_DOUBLE_EQ(p.trp_fraction(7500), std::llround(0.74 * 1024) / 1024.0);
  EXPECT_EQ(p.tras, 27000);
  // A larger fraction with the same seed is a superset.
  auto q = profile_from_distribution(8, 128, 0.99, 0.99, 7500, 10000, 4);
  for (std::size_t i = 0; i < p.trcd.size(); ++i)
    if (p.trcd[i] == 0) {
      EXPECT_EQ(q.trcd[i], 0);
    }
}

Device deterministic(double frac_trcd, double frac_trp, std::uint64_t seed) {
  auto s = preset("B-M1");
  s.frac_fast_trcd = frac_trcd;
  s.frac_fast_trp = frac_trp;
  s.flip_mode = FlipMode::Deterministic;
  return Device::build(s, {2, 32, 16, 64}, seed);
}

TEST(ProfileDevice, RecoversPlantedClassesExactly) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto d = deterministic(0.5, 0.97, seed);
    auto p = profile_device(d);
    for (std::uint32_t b = 0; b < 2; ++b)
      for (std::uint32_t c = 0; c < 16; ++c) {
        EXPECT_EQ(p.trcd_ps(b, c), d.column_max_trcd(b, c)) << b << "," << c;
        EXPECT_EQ(p.trp_ps(b, c), d.bank_max_trp(b)) << b << "," << c;
      }
  }
}

TEST(ProfileDevice, AllFastDeviceIsUniformFast) {
  auto d = deterministic(1.0, 1.0, 5);
  auto p = profile_device(d);
  for (auto c : p.trcd) EXPECT_EQ(c, 0);
  for (auto c : p.trp) EXPECT_EQ(c, 0);
  EXPECT_EQ(p.tras, 27000);
}

TEST(ProfileDevice, StochasticProfilesAreConservative) {
  auto s = preset("A-M1");
  auto d = Device::build(s, {2, 32, 16, 64}, 8);
  auto p = profile_device(d);
  for (std::uint32_t b = 0; b < 2; ++b)
    for (std::uint32_t c = 0; c < 16; ++c) {
      EXPECT_GE(p.trcd_ps(b, c), d.column_max_trcd(b, c));
      EXPECT_GE(p.trp_ps(b, c), d.bank_max_trp(b));
    }
}

}  // namespace
}  // namespace flydram
