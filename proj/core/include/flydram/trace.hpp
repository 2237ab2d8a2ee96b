#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "flydram/controller.hpp"

namespace flydram {

/// `<gap> <hex-address> <R|W>`: `gap` instructions execute before the access.
/// A line holding only `<gap>` is compute with no access (trailing work).
struct TraceRecord {
  std::uint64_t gap = 0;
  bool access = true;
  std::uint64_t address = 0;  // virtual byte address
  ReqKind kind = ReqKind::Read;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

/// Blank lines and `#` comments are skipped. Malformed lines throw
/// ValidationError naming the origin and line number.
Trace parse_trace(std::istream& in, std::string_view origin = "<trace>");
Trace load_trace(const std::filesystem::path& path);
void save_trace(std::ostream& out, const Trace& trace);
void save_trace(const std::filesystem::path& path, const Trace& trace);

enum class SynthKind {
  Stream,        // sequential lines through the footprint
  Random,        // uniform lines over the footprint
  PointerChase,  // dependent random reads, gap 1
};

std::string_view to_string(SynthKind kind);
SynthKind parse_synth_kind(std::string_view text);

struct SynthOptions {
  SynthKind kind = SynthKind::Random;
  std::uint64_t length = 10000;                // accesses
  std::uint64_t seed = 1;
  std::uint64_t footprint = 64ull << 20;       // bytes of virtual space touched
  std::uint32_t max_gap = 8;                   // gaps drawn uniformly in [0, max_gap]
  double write_fraction = 0.2;                 // ignored by PointerChase
};

Trace synth_trace(const SynthOptions& options);

}  // namespace flydram
