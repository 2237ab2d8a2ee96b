#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace flydram {

/// Picoseconds. All latencies and absolute times in the library use this unit.
using Picos = std::int64_t;

/// Timing sweeps move in 2.5ns steps, the resolution of the test engine.
inline constexpr Picos kTimingQuantum = 2500;

/// One memory-controller clock (DDR3-1333 command clock rounded to the
/// picosecond grid). Two cycles make one timing quantum.
inline constexpr Picos kMemCyclePs = 1250;

using Cycle = std::int64_t;

/// Round up to whole memory cycles.
constexpr Cycle to_cycles(Picos ps) { return (ps + kMemCyclePs - 1) / kMemCyclePs; }

constexpr bool is_quantized(Picos ps) { return ps % kTimingQuantum == 0; }

constexpr Picos round_up_to_quantum(Picos ps) {
  return ((ps + kTimingQuantum - 1) / kTimingQuantum) * kTimingQuantum;
}

constexpr Picos round_nearest_quantum(Picos ps) {
  return ((ps + kTimingQuantum / 2) / kTimingQuantum) * kTimingQuantum;
}

/// Parses "7.5ns", "13125ps", "0.5us", "64ms" or a bare integer (picoseconds).
/// Throws ValidationError on malformed input or non-integral picoseconds.
Picos parse_latency(std::string_view text);

/// Renders a latency in the shortest exact SI form ("7.5ns", "13.125ns", "64ms").
std::string format_latency(Picos ps);

}  // namespace flydram
