#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "flydram/geometry.hpp"
#include "flydram/units.hpp"
#include "flydram/variation.hpp"

namespace flydram {

/// 512-bit cache line as eight 64-bit beats; bit b of the line is bit
/// (b % 64) of beat (b / 64).
using CacheLine = std::array<std::uint64_t, kBeatsPerLine>;

/// Line filled with one byte value repeated (the characterization patterns).
constexpr CacheLine pattern_line(std::uint8_t byte) {
  CacheLine line{};
  for (auto& beat : line) beat = 0x0101010101010101ULL * byte;
  return line;
}

enum class FlipCause { Activation, Precharge };

struct BitFlip {
  std::uint32_t bank = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::uint16_t bit = 0;  // position within the line, [0, 512)
  std::uint8_t old_bit = 0;
  std::uint8_t new_bit = 0;

  friend bool operator==(const BitFlip&, const BitFlip&) = default;
};

struct FlipReport {
  std::vector<BitFlip> flips;
  FlipCause cause = FlipCause::Activation;
  Picos deficit = 0;

  bool empty() const { return flips.empty(); }
  friend bool operator==(const FlipReport&, const FlipReport&) = default;
};

/// Synthetic DRAM rank with planted per-region reliable-latency thresholds.
///
/// Thresholds: min tRCD is keyed by (bank, col) plus an optional row-band
/// offset; min tRP is keyed by (bank, row). Each map holds exactly
/// round(frac_fast * entries) fast entries, arranged by the spec's clustering.
///
/// Timing errors: a read issued with a tRCD below the line's threshold flips
/// bits of that one line; an activation that follows a too-short precharge
/// flips bits across the whole row. Flips are written back into the cells and
/// persist until the line is rewritten. Each flip event draws from a keyed
/// stream (stream key, epoch, bank, row, col, bit), so results depend only on
/// the event sequence, never on evaluation order.
///
/// Cells start at zero. Rows are materialized on first write or flip, so a
/// default-geometry device costs memory only for touched rows.
///
/// Not thread-safe for mutation; independent instances are.
class Device {
 public:
  static Device build(const VariationSpec& spec, const Geometry& geometry, std::uint64_t seed);

  const Geometry& geometry() const { return geometry_; }
  const VariationSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_key() const { return stream_key_; }
  std::uint64_t epoch() const { return epoch_; }

  /// Restarts the flip stream under a new key (planted maps are unchanged).
  /// Used to derive independent rounds from one physical device.
  void reseed_stream(std::uint64_t key);

  Picos base_trcd(std::uint32_t bank, std::uint32_t col) const;
  Picos min_trcd(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const;
  Picos min_trp(std::uint32_t bank, std::uint32_t row) const;
  /// Largest min_trcd over every row of the column (the profile oracle).
  Picos column_max_trcd(std::uint32_t bank, std::uint32_t col) const;
  /// Largest min_trp over every row of the bank.
  Picos bank_max_trp(std::uint32_t bank) const;

  void write_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col, const CacheLine& data);
  CacheLine peek_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const;

  struct ActivationRead {
    CacheLine line;
    FlipReport report;
  };
  /// First READ after an ACT issued `provided_trcd` after the ACT.
  ActivationRead apply_activation_read(std::uint32_t bank, std::uint32_t row, std::uint32_t first_col,
                                       Picos provided_trcd);
  /// Any later READ in the same activation: returns the cells verbatim.
  CacheLine subsequent_read(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const;
  /// ACT of `new_row` issued `provided_trp` after the bank's PRE.
  FlipReport apply_precharge_activate(std::uint32_t bank, std::uint32_t new_row, Picos provided_trp);

  /// Drops every materialized row (all cells read as zero again).
  void clear_cells();
  std::size_t materialized_rows() const;

  /// Versioned little-endian snapshot: "FDLV1", geometry, keys, spec, maps, cells.
  void save(std::ostream& out) const;
  static Device load(std::istream& in);

  friend bool operator==(const Device&, const Device&) = default;

 private:
  Device() = default;

  void check_index(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const;
  std::vector<std::uint64_t>& materialize(std::uint32_t bank, std::uint32_t row);
  const std::uint64_t* row_words(std::uint32_t bank, std::uint32_t row) const;
  /// Draws flips for one line in place; returns the number of flipped bits.
  void flip_line(std::uint64_t* words, std::uint32_t bank, std::uint32_t row, std::uint32_t col,
                 std::uint64_t threshold01, std::uint64_t threshold10, FlipReport& report) const;

  Geometry geometry_;
  VariationSpec spec_;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_key_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint32_t band_begin_ = 0;  // rows carrying the tRCD row-band offset
  std::uint32_t band_end_ = 0;
  std::vector<std::int32_t> trcd_map_;  // banks * cols
  std::vector<std::int32_t> trp_map_;   // banks * rows
  std::vector<std::vector<std::uint64_t>> cells_;  // banks * rows, each empty or cols * 8 words
};

/// Plants a two-class threshold map of `groups * length` entries with exactly
/// round(frac_fast * entries) fast ones. Exposed for tests.
std::vector<std::int32_t> plant_threshold_map(std::uint32_t groups, std::uint32_t length, double frac_fast,
                                              Picos fast, Picos slow, const Clustering& clustering,
                                              std::uint64_t seed);

}  // namespace flydram
