#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flydram/charlab.hpp"
#include "flydram/device.hpp"
#include "flydram/timing.hpp"

namespace flydram {

inline constexpr std::uint32_t kProfileClasses = 4;
inline constexpr std::uint8_t kStandardClass = kProfileClasses - 1;

/// Class -> latency. Class 3 is the standard value; classes below it are
/// strictly increasing until they reach it, unused ones alias to standard.
using ClassTable = std::array<Picos, kProfileClasses>;

/// Builds a table from ascending candidates (the standard value may be
/// included or not). Throws when more than three non-standard values remain.
ClassTable make_class_table(std::span<const Picos> candidates, Picos standard);
void validate_class_table(const ClassTable& table, Picos standard);

/// ceil to 1ns of (tRCD + tCL) at baseline timing: 27ns for DDR3-1333.
Picos fly_tras(const TimingSet& baseline = TimingSet::standard());

/// Per (bank, col) tRCD and tRP classes: 4 bits per cache-line column.
struct LatencyProfile {
  std::uint32_t banks = 0;
  std::uint32_t cols = 0;
  ClassTable trcd_table{};
  ClassTable trp_table{};
  Picos tras = 0;                  // applied to every non-(3,3) address
  std::vector<std::uint8_t> trcd;  // banks * cols
  std::vector<std::uint8_t> trp;

  static LatencyProfile uniform(std::uint32_t banks, std::uint32_t cols, const ClassTable& trcd_table,
                                const ClassTable& trp_table, std::uint8_t trcd_class, std::uint8_t trp_class);

  std::uint8_t trcd_class(std::uint32_t bank, std::uint32_t col) const { return trcd.at(std::size_t{bank} * cols + col); }
  std::uint8_t trp_class(std::uint32_t bank, std::uint32_t col) const { return trp.at(std::size_t{bank} * cols + col); }
  Picos trcd_ps(std::uint32_t bank, std::uint32_t col) const { return trcd_table[trcd_class(bank, col)]; }
  Picos trp_ps(std::uint32_t bank, std::uint32_t col) const { return trp_table[trp_class(bank, col)]; }
  /// Fraction of (bank, col) entries whose tRCD (or tRP) class maps to `ps`.
  double trcd_fraction(Picos ps) const;
  double trp_fraction(Picos ps) const;

  void validate() const;
  friend bool operator==(const LatencyProfile&, const LatencyProfile&) = default;
};

struct ProfileOptions {
  std::vector<Picos> trcd_candidates{7500, 10000, 12500};
  std::vector<Picos> trp_candidates{7500, 10000, 12500};
  std::vector<PatternPair> trcd_patterns = standard_patterns();
  std::vector<PatternPair> trp_patterns = standard_pattern_pairs();
  std::uint32_t rounds = 1;
  std::uint64_t seed = 1;
};

/// Smallest candidate per (bank, col) that passed every round and pattern on
/// every row: Test 3 per column for tRCD, Test 4 per row for tRP with the
/// column taking the max over the bank's rows. Columns failing every
/// candidate get the standard class after a standard-timing check; failing
/// that check throws ProfilingError. Mutates the device's cells and stream.
LatencyProfile profile_device(Device& device, const ProfileOptions& options = {});

/// Evaluation profile drawn from per-line latency distributions: exactly
/// round(frac * entries) fast tRCD and fast tRP entries, nested so the
/// smaller fast set lies inside the larger. Fast = class 0, slow = class 1.
LatencyProfile profile_from_distribution(std::uint32_t banks, std::uint32_t cols, double frac_fast_trcd,
                                         double frac_fast_trp, Picos fast, Picos slow, std::uint64_t seed);

/// "FDPF1" blob: header (geometry, class tables, tRAS) then, per bank, cols
/// ascending at 4 bits each, (trcd << 2) | trp, even column in the low nibble.
std::vector<std::uint8_t> encode_profile(const LatencyProfile& profile);
LatencyProfile decode_profile(std::span<const std::uint8_t> bytes);
/// Payload bytes per bank (cols / 2, rounded up).
std::size_t profile_payload_bytes_per_bank(std::uint32_t cols);

/// TimingSet for one address; baseline everywhere when `profile` is null.
TimingSet lookup_timing(const LatencyProfile* profile, std::uint32_t bank, std::uint32_t col,
                        const TimingSet& baseline = TimingSet::standard());

}  // namespace flydram
