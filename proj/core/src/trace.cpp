#include "flydram/trace.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "flydram/errors.hpp"
#include "flydram/rng.hpp"

namespace flydram {

namespace {

std::string_view next_token(std::string_view& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    s = {};
    return {};
  }
  s.remove_prefix(b);
  auto e = s.find_first_of(" \t\r");
  auto tok = s.substr(0, e);
  s.remove_prefix(e == std::string_view::npos ? s.size() : e);
  return tok;
}

}  // namespace

Trace parse_trace(std::istream& in, std::string_view origin) {
  Trace trace;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest = line;
    if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
    auto fail = [&](std::string_view why) {
      throw ValidationError(fmt::format("{}:{}: {} in '{}'", origin, lineno, why, line));
    };
    auto gap_tok = next_token(rest);
    if (gap_tok.empty()) continue;
    TraceRecord rec;
    auto [gp, gec] = std::from_chars(gap_tok.data(), gap_tok.data() + gap_tok.size(), rec.gap);
    if (gec != std::errc{} || gp != gap_tok.data() + gap_tok.size()) fail("bad gap");
    auto addr_tok = next_token(rest);
    if (addr_tok.empty()) {
      rec.access = false;
      trace.push_back(rec);
      continue;
    }
    if (addr_tok.size() > 2 && addr_tok[0] == '0' && (addr_tok[1] == 'x' || addr_tok[1] == 'X')) addr_tok.remove_prefix(2);
    auto [ap, aec] = std::from_chars(addr_tok.data(), addr_tok.data() + addr_tok.size(), rec.address, 16);
    if (aec != std::errc{} || ap != addr_tok.data() + addr_tok.size()) fail("bad hex address");
    auto kind_tok = next_token(rest);
    if (kind_tok == "R" || kind_tok == "r") rec.kind = ReqKind::Read;
    else if (kind_tok == "W" || kind_tok == "w") rec.kind = ReqKind::Write;
    else fail("access kind must be R or W");
    if (!next_token(rest).empty()) fail("trailing fields");
    trace.push_back(rec);
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open trace {}", path.string()));
  return parse_trace(in, path.string());
}

void save_trace(std::ostream& out, const Trace& trace) {
  for (const auto& r : trace) {
    if (r.access)
      out << fmt::format("{} 0x{:x} {}\n", r.gap, r.address, r.kind == ReqKind::Read ? 'R' : 'W');
    else
      out << r.gap << '\n';
  }
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(fmt::format("cannot write trace {}", path.string()));
  save_trace(out, trace);
}

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::Stream: return "stream";
    case SynthKind::Random: return "random";
    case SynthKind::PointerChase: return "pointer-chase";
  }
  return "?";
}

SynthKind parse_synth_kind(std::string_view text) {
  for (auto k : {SynthKind::Stream, SynthKind::Random, SynthKind::PointerChase})
    if (to_string(k) == text) return k;
  throw ValidationError(fmt::format("unknown trace kind '{}'", text));
}

Trace synth_trace(const SynthOptions& o) {
  constexpr std::uint64_t kLine = 64;
  if (o.footprint < kLine) throw ValidationError("synth_trace: footprint below one line");
  if (!(o.write_fraction >= 0.0 && o.write_fraction <= 1.0)) throw ValidationError("synth_trace: bad write fraction");
  const std::uint64_t lines = o.footprint / kLine;
  SplitMix64 rng(hash_combine(o.seed, static_cast<std::uint64_t>(o.kind)));
  Trace t;
  t.reserve(o.length);
  for (std::uint64_t i = 0; i < o.length; ++i) {
    TraceRecord r;
    switch (o.kind) {
      case SynthKind::Stream:
        r.address = (i % lines) * kLine;
        r.gap = rng.below(o.max_gap + 1ull);
        r.kind = rng.uniform() < o.write_fraction ? ReqKind::Write : ReqKind::Read;
        break;
      case SynthKind::Random:
        r.address = rng.below(lines) * kLine;
        r.gap = rng.below(o.max_gap + 1ull);
        r.kind = rng.uniform() < o.write_fraction ? ReqKind::Write : ReqKind::Read;
        break;
      case SynthKind::PointerChase:
        r.address = rng.below(lines) * kLine;
        r.gap = 1;
        r.kind = ReqKind::Read;
        break;
    }
    t.push_back(r);
  }
  return t;
}

}  // namespace flydram
