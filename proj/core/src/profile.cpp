#include "flydram/profile.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "flydram/errors.hpp"
#include "flydram/rng.hpp"

namespace flydram {

ClassTable make_class_table(std::span<const Picos> candidates, Picos standard) {
  ClassTable t;
  t.fill(standard);
  std::uint32_t n = 0;
  for (auto c : candidates) {
    if (c >= standard) continue;
    if (n == kStandardClass)
      throw ValidationError(fmt::format("profile: at most {} non-standard candidates fit the 4-bit budget",
                                        kStandardClass));
    t[n++] = c;
  }
  validate_class_table(t, standard);
  return t;
}

void validate_class_table(const ClassTable& t, Picos standard) {
  if (t[kStandardClass] != standard)
    throw ValidationError(fmt::format("profile: class 3 must be standard ({}ps), got {}ps", standard, t[kStandardClass]));
  for (std::uint32_t i = 0; i < kStandardClass; ++i) {
    if (t[i] <= 0) throw ValidationError("profile: class latencies must be positive");
    if (t[i] > standard) throw ValidationError("profile: class latency above standard");
    if (t[i] < standard && t[i] >= t[i + 1])
      throw ValidationError("profile: class latencies must increase strictly up to standard");
    if (t[i] == standard && t[i + 1] != standard) throw ValidationError("profile: only trailing classes may alias");
  }
}

Picos fly_tras(const TimingSet& baseline) {
  constexpr Picos ns = 1000;
  return (baseline.trcd + baseline.tcl + ns - 1) / ns * ns;
}

LatencyProfile LatencyProfile::uniform(std::uint32_t banks, std::uint32_t cols, const ClassTable& trcd_table,
                                       const ClassTable& trp_table, std::uint8_t trcd_class, std::uint8_t trp_class) {
  LatencyProfile p;
  p.banks = banks;
  p.cols = cols;
  p.trcd_table = trcd_table;
  p.trp_table = trp_table;
  p.tras = fly_tras();
  p.trcd.assign(std::size_t{banks} * cols, trcd_class);
  p.trp.assign(std::size_t{banks} * cols, trp_class);
  p.validate();
  return p;
}

namespace {

double fraction_at(const std::vector<std::uint8_t>& classes, const ClassTable& table, Picos ps) {
  if (classes.empty()) return 0.0;
  auto n = std::count_if(classes.begin(), classes.end(), [&](auto c) { return table[c] == ps; });
  return static_cast<double>(n) / static_cast<double>(classes.size());
}

}  // namespace

double LatencyProfile::trcd_fraction(Picos ps) const { return fraction_at(trcd, trcd_table, ps); }
double LatencyProfile::trp_fraction(Picos ps) const { return fraction_at(trp, trp_table, ps); }

void LatencyProfile::validate() const {
  const auto std_t = TimingSet::standard();
  if (banks == 0 || cols == 0) throw ValidationError("profile: empty geometry");
  validate_class_table(trcd_table, std_t.trcd);
  validate_class_table(trp_table, std_t.trp);
  if (tras <= 0 || tras > std_t.tras) throw ValidationError("profile: tRAS out of range");
  const std::size_t n = std::size_t{banks} * cols;
  if (trcd.size() != n || trp.size() != n) throw ValidationError("profile: class arrays do not match geometry");
  for (std::size_t i = 0; i < n; ++i)
    if (trcd[i] >= kProfileClasses || trp[i] >= kProfileClasses) throw ValidationError("profile: class out of range");
}

// ---------------------------------------------------------------- profiling

namespace {

void check_candidates(const std::vector<Picos>& c, const char* what) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] <= 0 || !is_quantized(c[i]))
      throw ValidationError(fmt::format("profile: {} candidate {} is not a positive 2.5ns multiple", what,
                                        format_latency(c[i])));
    if (i && c[i] <= c[i - 1]) throw ValidationError(fmt::format("profile: {} candidates must ascend", what));
  }
}

/// Test 3 on one column with early exit: false on the first erroneous read.
bool column_passes(TestBench& bench, std::uint32_t bank, std::uint32_t col, Picos trcd,
                   const std::vector<PatternPair>& patterns, std::uint32_t rounds) {
  const auto& std_t = bench.standard();
  const auto rows = bench.device().geometry().rows_per_bank;
  for (std::uint32_t round = 0; round < rounds; ++round) {
    for (auto p : patterns) {
      const auto data = pattern_line(p.primary);
      for (std::uint32_t r = 0; r < rows; ++r) {
        bench.write_line(bank, r, col, data);
        if (bench.read_cacheline(std_t.trcd, std_t.trp, bank, r, col) != data)
          throw ProfilingError(fmt::format("bank {} row {} col {} fails at standard timing", bank, r, col));
        if (bench.read_cacheline(trcd, std_t.trp, bank, r, col) != data) return false;
      }
    }
  }
  return true;
}

/// Test 4 over every row of the bank; clears `pass[c]` for each column that
/// erred. Stops once no candidate column is left.
void trp_pass(Device& device, std::uint32_t bank, Picos trp, const std::vector<PatternPair>& patterns,
              std::uint32_t rounds, std::vector<char>& pass) {
  const auto& g = device.geometry();
  for (std::uint32_t round = 0; round < rounds; ++round) {
    for (auto p : patterns) {
      for (std::uint32_t r = 0; r < g.rows_per_bank; ++r) {
        if (std::none_of(pass.begin(), pass.end(), [](char v) { return v; })) return;
        Scope row{bank, bank + 1, r, r + 1, 0, g.cols_per_row};
        auto cell = test_trp_row_order(device, trp, p, row);
        for (const auto& le : cell.lines) pass[le.col] = 0;
      }
    }
  }
}

}  // namespace

LatencyProfile profile_device(Device& device, const ProfileOptions& o) {
  const auto& g = device.geometry();
  const auto std_t = TimingSet::standard();
  check_candidates(o.trcd_candidates, "tRCD");
  check_candidates(o.trp_candidates, "tRP");
  if (o.trcd_patterns.empty() || o.trp_patterns.empty() || o.rounds == 0)
    throw ValidationError("profile: patterns and rounds must be non-empty");

  LatencyProfile p;
  p.banks = g.banks;
  p.cols = g.cols_per_row;
  p.trcd_table = make_class_table(o.trcd_candidates, std_t.trcd);
  p.trp_table = make_class_table(o.trp_candidates, std_t.trp);
  p.tras = fly_tras(std_t);
  p.trcd.assign(std::size_t{g.banks} * g.cols_per_row, kStandardClass);
  p.trp.assign(std::size_t{g.banks} * g.cols_per_row, kStandardClass);

  device.reseed_stream(hash_combine(o.seed, 0x50524f46ULL));
  TestBench bench(device);

  for (std::uint32_t b = 0; b < g.banks; ++b) {
    for (std::uint32_t c = 0; c < g.cols_per_row; ++c) {
      auto& cls = p.trcd[std::size_t{b} * g.cols_per_row + c];
      for (std::uint8_t i = 0; i < kStandardClass && p.trcd_table[i] < std_t.trcd; ++i) {
        if (column_passes(bench, b, c, p.trcd_table[i], o.trcd_patterns, o.rounds)) {
          cls = i;
          break;
        }
      }
      if (cls == kStandardClass && !column_passes(bench, b, c, std_t.trcd, {o.trcd_patterns.front()}, 1))
        throw ProfilingError(fmt::format("bank {} col {} fails tRCD even at standard timing", b, c));
    }
  }

  for (std::uint32_t b = 0; b < g.banks; ++b) {
    std::vector<char> undecided(g.cols_per_row, 1);
    for (std::uint8_t i = 0; i < kStandardClass && p.trp_table[i] < std_t.trp; ++i) {
      std::vector<char> pass = undecided;
      trp_pass(device, b, p.trp_table[i], o.trp_patterns, o.rounds, pass);
      for (std::uint32_t c = 0; c < g.cols_per_row; ++c) {
        if (!pass[c]) continue;
        p.trp[std::size_t{b} * g.cols_per_row + c] = i;
        undecided[c] = 0;
      }
    }
    if (std::any_of(undecided.begin(), undecided.end(), [](char v) { return v; })) {
      std::vector<char> pass = undecided;
      trp_pass(device, b, std_t.trp, {o.trp_patterns.front()}, 1, pass);
      for (std::uint32_t c = 0; c < g.cols_per_row; ++c)
        if (undecided[c] && !pass[c])
          throw ProfilingError(fmt::format("bank {} col {} fails tRP even at standard timing", b, c));
    }
  }
  return p;
}

LatencyProfile profile_from_distribution(std::uint32_t banks, std::uint32_t cols, double frac_fast_trcd,
                                         double frac_fast_trp, Picos fast, Picos slow, std::uint64_t seed) {
  const auto std_t = TimingSet::standard();
  for (double f : {frac_fast_trcd, frac_fast_trp})
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("profile: fast fractions must lie in [0, 1]");
  if (!(fast < slow && slow < std_t.trcd)) throw ValidationError("profile: need fast < slow < standard");
  const ClassTable table{fast, slow, std_t.trcd, std_t.trcd};
  auto p = LatencyProfile::uniform(banks, cols, table, table, 1, 1);
  const std::size_t n = p.trcd.size();
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  SplitMix64 rng(hash_combine(seed, 0x44495354ULL));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto k_trcd = static_cast<std::size_t>(std::llround(frac_fast_trcd * static_cast<double>(n)));
  const auto k_trp = static_cast<std::size_t>(std::llround(frac_fast_trp * static_cast<double>(n)));
  for (std::size_t i = 0; i < k_trcd; ++i) p.trcd[order[i]] = 0;
  for (std::size_t i = 0; i < k_trp; ++i) p.trp[order[i]] = 0;
  return p;
}

// ---------------------------------------------------------------- codec

namespace {

constexpr char kMagic[5] = {'F', 'D', 'P', 'F', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

struct Reader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  void need(std::size_t n) const {
    if (bytes.size() - pos < n) throw IntegrityError("profile blob truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes[pos++]} << (8 * i);
    return v;
  }
  std::int64_t i64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[pos++]} << (8 * i);
    return static_cast<std::int64_t>(v);
  }
};

}  // namespace

std::size_t profile_payload_bytes_per_bank(std::uint32_t cols) { return (std::size_t{cols} + 1) / 2; }

std::vector<std::uint8_t> encode_profile(const LatencyProfile& p) {
  p.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, p.banks);
  put_u32(out, p.cols);
  for (auto v : p.trcd_table) put_i64(out, v);
  for (auto v : p.trp_table) put_i64(out, v);
  put_i64(out, p.tras);
  const auto per_bank = profile_payload_bytes_per_bank(p.cols);
  for (std::uint32_t b = 0; b < p.banks; ++b) {
    const std::size_t base = out.size();
    out.resize(base + per_bank, 0);
    for (std::uint32_t c = 0; c < p.cols; ++c) {
      const std::uint8_t nibble = static_cast<std::uint8_t>((p.trcd_class(b, c) << 2) | p.trp_class(b, c));
      out[base + c / 2] |= static_cast<std::uint8_t>(nibble << (4 * (c % 2)));
    }
  }
  return out;
}

LatencyProfile decode_profile(std::span<const std::uint8_t> bytes) {
  Reader in{bytes};
  in.need(sizeof kMagic);
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) throw IntegrityError("bad magic: expected 'FDPF1'");
  in.pos = sizeof kMagic;
  LatencyProfile p;
  p.banks = in.u32();
  p.cols = in.u32();
  if (p.banks == 0 || p.cols == 0 || p.banks > 4096 || p.cols > (1u << 20))
    throw IntegrityError("profile blob: implausible geometry");
  for (auto& v : p.trcd_table) v = in.i64();
  for (auto& v : p.trp_table) v = in.i64();
  p.tras = in.i64();
  const auto per_bank = profile_payload_bytes_per_bank(p.cols);
  in.need(per_bank * p.banks);
  if (bytes.size() != in.pos + per_bank * p.banks) throw IntegrityError("profile blob: trailing bytes");
  p.trcd.resize(std::size_t{p.banks} * p.cols);
  p.trp.resize(p.trcd.size());
  for (std::uint32_t b = 0; b < p.banks; ++b) {
    for (std::uint32_t c = 0; c < p.cols; ++c) {
      const std::uint8_t nibble = (bytes[in.pos + c / 2] >> (4 * (c % 2))) & 0xF;
      p.trcd[std::size_t{b} * p.cols + c] = nibble >> 2;
      p.trp[std::size_t{b} * p.cols + c] = nibble & 3;
    }
    if (p.cols % 2 && (bytes[in.pos + per_bank - 1] >> 4))
      throw IntegrityError("profile blob: padding nibble not zero");
    in.pos += per_bank;
  }
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw IntegrityError(fmt::format("profile blob: {}", e.what()));
  }
  return p;
}

TimingSet lookup_timing(const LatencyProfile* profile, std::uint32_t bank, std::uint32_t col,
                        const TimingSet& baseline) {
  if (!profile) return baseline;
  if (bank >= profile->banks || col >= profile->cols)
    throw ValidationError(fmt::format("lookup: bank {} col {} outside the profile", bank, col));
  const auto rc = profile->trcd_class(bank, col);
  const auto rp = profile->trp_class(bank, col);
  TimingSet t = baseline;
  t.trcd = profile->trcd_table[rc];
  t.trp = profile->trp_table[rp];
  if (t.trcd < baseline.trcd || t.trp < baseline.trp) t.tras = profile->tras;
  return t;
}

}  // namespace flydram
