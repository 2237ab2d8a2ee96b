#pragma once

#include <cstdint>

namespace flydram {

inline constexpr std::uint32_t kBeatsPerLine = 8;
inline constexpr std::uint32_t kBeatBits = 64;
inline constexpr std::uint32_t kLineBits = kBeatsPerLine * kBeatBits;

/// Rank organization. A row holds `cols_per_row` cache lines; each line is
/// transferred as eight 64-bit data beats.
struct Geometry {
  std::uint32_t banks = 8;
  std::uint32_t rows_per_bank = 32768;
  std::uint32_t cols_per_row = 128;
  std::uint32_t line_bytes = 64;

  std::uint64_t row_bytes() const { return std::uint64_t{cols_per_row} * line_bytes; }
  std::uint64_t lines() const { return std::uint64_t{banks} * rows_per_bank * cols_per_row; }
  std::uint64_t rows() const { return std::uint64_t{banks} * rows_per_bank; }
  std::uint64_t bytes() const { return lines() * line_bytes; }

  std::uint64_t row_index(std::uint32_t bank, std::uint32_t row) const {
    return std::uint64_t{bank} * rows_per_bank + row;
  }
  std::uint64_t line_index(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const {
    return row_index(bank, row) * cols_per_row + col;
  }

  /// Throws ValidationError when a field is zero or the beat layout does not
  /// match `line_bytes`.
  void validate() const;

  /// Same geometry with the row count divided by `factor` (used for scaled
  /// full-device campaigns).
  Geometry scaled_rows(std::uint32_t factor) const {
    Geometry g = *this;
    g.rows_per_bank = rows_per_bank / factor;
    return g;
  }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

}  // namespace flydram
