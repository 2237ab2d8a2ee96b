#include "flydram/charlab.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <istream>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "binio.hpp"
#include "flydram/errors.hpp"
#include "flydram/rng.hpp"

namespace flydram {

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::ReadCacheline: return "read-line";
    case TestKind::ReadRow: return "read-row";
    case TestKind::TrcdColOrder: return "trcd-col";
    case TestKind::TrpRowOrder: return "trp-row";
    case TestKind::TrasRetention: return "tras";
  }
  return "?";
}

TestKind parse_test_kind(std::string_view text) {
  for (auto k : {TestKind::ReadCacheline, TestKind::ReadRow, TestKind::TrcdColOrder, TestKind::TrpRowOrder,
                 TestKind::TrasRetention})
    if (to_string(k) == text) return k;
  throw ValidationError(fmt::format("unknown test kind '{}'", text));
}

std::vector<PatternPair> standard_patterns() { return {{0x00, 0xff}, {0xaa, 0x55}, {0xcc, 0x33}, {0xff, 0x00}}; }
std::vector<PatternPair> standard_pattern_pairs() { return {{0x00, 0xff}, {0xaa, 0x33}, {0xcc, 0x55}}; }
std::vector<Picos> standard_sweep() { return {12500, 10000, 7500, 5000, 2500}; }

Scope Scope::resolved(const Geometry& g) const {
  if (is_unset()) return full(g);
  if (bank_begin >= bank_end || bank_end > g.banks || row_begin >= row_end || row_end > g.rows_per_bank ||
      col_begin >= col_end || col_end > g.cols_per_row)
    throw ValidationError(fmt::format("scope banks {}:{} rows {}:{} cols {}:{} outside geometry", bank_begin,
                                      bank_end, row_begin, row_end, col_begin, col_end));
  return *this;
}

// ---------------------------------------------------------------- plan

namespace {

std::uint8_t parse_byte(std::string_view s) {
  std::string_view digits = s;
  int base = 10;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    digits.remove_prefix(2);
    base = 16;
  }
  unsigned v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || v > 0xff)
    throw ValidationError(fmt::format("bad pattern byte '{}'", s));
  return static_cast<std::uint8_t>(v);
}

// "a:b" half-open range.
std::pair<std::uint32_t, std::uint32_t> parse_range(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) throw ValidationError(fmt::format("bad range '{}' (want begin:end)", s));
  auto num = [&](std::string_view part) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size()) throw ValidationError(fmt::format("bad range '{}'", s));
    return v;
  };
  return {num(s.substr(0, colon)), num(s.substr(colon + 1))};
}

}  // namespace

void CampaignPlan::validate() const {
  if (latencies.empty()) throw ValidationError("campaign: at least one latency required");
  for (auto l : latencies)
    if (l <= 0) throw ValidationError("campaign: latencies must be positive");
  if (patterns.empty()) throw ValidationError("campaign: at least one pattern required");
  if (rounds == 0) throw ValidationError("campaign: rounds must be >= 1");
  if (kind == TestKind::TrpRowOrder)
    for (auto p : patterns)
      if (p.primary == p.secondary) throw ValidationError("campaign: row-order pattern pairs must differ");
  if (wait < 0) throw ValidationError("campaign: wait must be >= 0");
}

CampaignPlan CampaignPlan::from_config(const KvConfig& cfg) {
  CampaignPlan p;
  p.kind = parse_test_kind(cfg.get_string("test"));
  for (const auto& l : cfg.get_list("latencies")) p.latencies.push_back(parse_latency(l));
  if (cfg.has("patterns")) {
    for (const auto& item : cfg.get_list("patterns")) {
      auto slash = item.find('/');
      PatternPair pp;
      pp.primary = parse_byte(std::string_view(item).substr(0, slash));
      pp.secondary = slash == std::string::npos ? static_cast<std::uint8_t>(~pp.primary)
                                                : parse_byte(std::string_view(item).substr(slash + 1));
      p.patterns.push_back(pp);
    }
  } else {
    p.patterns = p.kind == TestKind::TrpRowOrder ? standard_pattern_pairs() : standard_patterns();
  }
  p.rounds = static_cast<std::uint32_t>(cfg.get_int("rounds", 1));
  p.seed = cfg.get_u64("seed", 1);
  if (cfg.has("scope_banks")) std::tie(p.scope.bank_begin, p.scope.bank_end) = parse_range(cfg.get_string("scope_banks"));
  if (cfg.has("scope_rows")) std::tie(p.scope.row_begin, p.scope.row_end) = parse_range(cfg.get_string("scope_rows"));
  if (cfg.has("scope_cols")) std::tie(p.scope.col_begin, p.scope.col_end) = parse_range(cfg.get_string("scope_cols"));
  p.wait = cfg.get_latency("wait", p.wait);
  auto detail = cfg.get_string("detail", "lines");
  if (detail == "lines") p.detail = Detail::Lines;
  else if (detail == "totals") p.detail = Detail::Totals;
  else throw ValidationError(fmt::format("campaign: detail must be lines or totals, got '{}'", detail));
  p.temperature_c = cfg.get_double("temperature_c", p.temperature_c);
  p.validate();
  return p;
}

KvConfig CampaignPlan::to_config() const {
  KvConfig cfg;
  cfg.set("test", std::string(to_string(kind)));
  std::string lats, pats;
  for (auto l : latencies) lats += (lats.empty() ? "" : ", ") + format_latency(l);
  for (auto p : patterns) pats += fmt::format("{}0x{:02x}/0x{:02x}", pats.empty() ? "" : ", ", p.primary, p.secondary);
  cfg.set("latencies", lats);
  cfg.set("patterns", pats);
  cfg.set("rounds", std::to_string(rounds));
  cfg.set("seed", std::to_string(seed));
  if (!scope.is_unset()) {
    cfg.set("scope_banks", fmt::format("{}:{}", scope.bank_begin, scope.bank_end));
    cfg.set("scope_rows", fmt::format("{}:{}", scope.row_begin, scope.row_end));
    cfg.set("scope_cols", fmt::format("{}:{}", scope.col_begin, scope.col_end));
  }
  cfg.set("wait", format_latency(wait));
  cfg.set("detail", detail == Detail::Lines ? "lines" : "totals");
  cfg.set("temperature_c", fmt::format("{}", temperature_c));
  return cfg;
}

// ---------------------------------------------------------------- records

std::uint32_t LineError::beat_errors(std::uint32_t beat) const {
  return static_cast<std::uint32_t>(std::popcount(flipped.at(beat)));
}

std::uint32_t LineError::error_bits() const {
  std::uint32_t n = 0;
  for (auto w : flipped) n += static_cast<std::uint32_t>(std::popcount(w));
  return n;
}

std::vector<ErrorRecord> CampaignCell::records() const {
  std::vector<ErrorRecord> out;
  for (const auto& le : lines) {
    for (std::uint32_t beat = 0; beat < kBeatsPerLine; ++beat) {
      auto w = le.flipped[beat];
      if (!w) continue;
      ErrorRecord r{round, latency, pattern.primary, le.bank, le.row, le.col, beat,
                    static_cast<std::uint32_t>(std::popcount(w)), {}};
      for (; w; w &= w - 1) r.flipped_positions.push_back(static_cast<std::uint16_t>(std::countr_zero(w)));
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::uint64_t CampaignResult::tested_bits() const {
  std::uint64_t n = 0;
  for (const auto& c : cells) n += c.tested_bits;
  return n;
}

std::uint64_t CampaignResult::error_bits() const {
  std::uint64_t n = 0;
  for (const auto& c : cells) n += c.error_bits;
  return n;
}

std::vector<ErrorRecord> CampaignResult::records() const {
  std::vector<ErrorRecord> out;
  for (const auto& c : cells) {
    auto r = c.records();
    out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return out;
}

CampaignResult CampaignResult::at_latency(Picos latency) const {
  CampaignResult r{plan, geometry, {}};
  for (const auto& c : cells)
    if (c.latency == latency) r.cells.push_back(c);
  return r;
}

void CampaignResult::write_csv(std::ostream& out) const {
  out << "round,latency_ps,pattern,bank,row,col,beat,error_bits\n";
  for (const auto& c : cells)
    for (const auto& le : c.lines)
      for (std::uint32_t beat = 0; beat < kBeatsPerLine; ++beat)
        if (auto n = le.beat_errors(beat))
          out << fmt::format("{},{},0x{:02x},{},{},{},{},{}\n", c.round, c.latency, c.pattern.primary, le.bank,
                             le.row, le.col, beat, n);
}

void CampaignResult::save(std::ostream& out) const {
  using namespace binio;
  put_magic(out, "FDCR1");
  put_string(out, plan.to_config().render());
  put<std::uint32_t>(out, plan.scope.bank_begin);
  put<std::uint32_t>(out, plan.scope.bank_end);
  put<std::uint32_t>(out, plan.scope.row_begin);
  put<std::uint32_t>(out, plan.scope.row_end);
  put<std::uint32_t>(out, plan.scope.col_begin);
  put<std::uint32_t>(out, plan.scope.col_end);
  put<std::uint32_t>(out, geometry.banks);
  put<std::uint32_t>(out, geometry.rows_per_bank);
  put<std::uint32_t>(out, geometry.cols_per_row);
  put<std::uint32_t>(out, geometry.line_bytes);
  put<std::uint64_t>(out, cells.size());
  for (const auto& c : cells) {
    put<std::uint32_t>(out, c.round);
    put<std::int64_t>(out, c.latency);
    put<std::uint8_t>(out, c.pattern.primary);
    put<std::uint8_t>(out, c.pattern.secondary);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(c.status));
    put<std::uint64_t>(out, c.tested_lines);
    put<std::uint64_t>(out, c.tested_bits);
    put<std::uint64_t>(out, c.error_bits);
    put<std::uint64_t>(out, c.erroneous_lines);
    put<std::uint64_t>(out, c.lines.size());
    for (const auto& le : c.lines) {
      put<std::uint8_t>(out, le.bank);
      put<std::uint32_t>(out, le.row);
      put<std::uint16_t>(out, le.col);
      for (auto w : le.flipped) put<std::uint64_t>(out, w);
    }
  }
}

CampaignResult CampaignResult::load(std::istream& in) {
  using namespace binio;
  expect_magic(in, "FDCR1");
  CampaignResult r;
  try {
    auto cfg = KvConfig::parse(get_string(in), "<campaign blob>");
    r.plan = CampaignPlan::from_config(cfg);
  } catch (const ValidationError& e) {
    throw IntegrityError(fmt::format("campaign blob: bad plan: {}", e.what()));
  }
  r.plan.scope.bank_begin = get<std::uint32_t>(in);
  r.plan.scope.bank_end = get<std::uint32_t>(in);
  r.plan.scope.row_begin = get<std::uint32_t>(in);
  r.plan.scope.row_end = get<std::uint32_t>(in);
  r.plan.scope.col_begin = get<std::uint32_t>(in);
  r.plan.scope.col_end = get<std::uint32_t>(in);
  r.geometry.banks = get<std::uint32_t>(in);
  r.geometry.rows_per_bank = get<std::uint32_t>(in);
  r.geometry.cols_per_row = get<std::uint32_t>(in);
  r.geometry.line_bytes = get<std::uint32_t>(in);
  auto ncells = get<std::uint64_t>(in);
  if (ncells > (1u << 24)) throw IntegrityError("campaign blob: implausible cell count");
  r.cells.resize(ncells);
  for (auto& c : r.cells) {
    c.round = get<std::uint32_t>(in);
    c.latency = get<std::int64_t>(in);
    c.pattern.primary = get<std::uint8_t>(in);
    c.pattern.secondary = get<std::uint8_t>(in);
    auto st = get<std::uint8_t>(in);
    if (st > 1) throw IntegrityError("campaign blob: bad cell status");
    c.status = static_cast<CellStatus>(st);
    c.tested_lines = get<std::uint64_t>(in);
    c.tested_bits = get<std::uint64_t>(in);
    c.error_bits = get<std::uint64_t>(in);
    c.erroneous_lines = get<std::uint64_t>(in);
    auto n = get<std::uint64_t>(in);
    if (n > c.tested_lines) throw IntegrityError("campaign blob: more erroneous lines than tested");
    c.lines.resize(n);
    for (auto& le : c.lines) {
      le.bank = get<std::uint8_t>(in);
      le.row = get<std::uint32_t>(in);
      le.col = get<std::uint16_t>(in);
      for (auto& w : le.flipped) w = get<std::uint64_t>(in);
    }
  }
  return r;
}

// ---------------------------------------------------------------- bench

TestBench::TestBench(Device& device, TimingSet standard, bool keep_log)
    : device_(&device),
      standard_(standard),
      engine_(device.geometry().banks, &device, keep_log),
      next_act_gap_(standard.trp) {}

IssueResult TestBench::must_issue(const Command& cmd, const CacheLine* data) {
  auto r = engine_.issue(cmd, IssueMode::Permissive, standard_, data);
  if (!r.accepted())
    throw IntegrityError(fmt::format("test bench: {} bank {} row {} rejected ({})", to_string(cmd.kind), cmd.bank,
                                     cmd.row, to_string(r.violation.rule)));
  return r;
}

Picos TestBench::activate(std::uint32_t bank, std::uint32_t row) {
  Picos t = now_;
  if (const auto& last_pre = engine_.bank(bank).last_pre) t = std::max(t, *last_pre + next_act_gap_);
  next_act_gap_ = standard_.trp;
  must_issue(Command::act(bank, row, t));
  act_time_ = t;
  now_ = t;
  return t;
}

void TestBench::precharge(std::uint32_t bank, std::uint32_t row, Picos earliest) {
  must_issue(Command::pre(bank, row, earliest));
  now_ = earliest;
}

void TestBench::write_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col, const CacheLine& data) {
  Picos t = activate(bank, row);
  Picos w = t + standard_.trcd;
  must_issue(Command::write(bank, row, col, w), &data);
  precharge(bank, row, std::max(w + standard_.tcl + standard_.tbl, t + standard_.tras));
}

void TestBench::write_row(std::uint32_t bank, std::uint32_t row, const CacheLine& data) {
  Picos t = activate(bank, row);
  Picos w = t + standard_.trcd;
  const auto cols = device_->geometry().cols_per_row;
  for (std::uint32_t c = 0; c < cols; ++c, w += standard_.tbl) must_issue(Command::write(bank, row, c, w), &data);
  w -= standard_.tbl;
  precharge(bank, row, std::max(w + standard_.tcl + standard_.tbl, t + standard_.tras));
}

CacheLine TestBench::read_cacheline(Picos my_trcd, Picos my_trp, std::uint32_t bank, std::uint32_t row,
                                    std::uint32_t col) {
  Picos t = activate(bank, row);
  Picos r = t + my_trcd;
  auto res = must_issue(Command::read(bank, row, col, r));
  precharge(bank, row, std::max(r + standard_.tcl + standard_.tbl, t + tras_min(standard_)));
  next_act_gap_ = my_trp;
  return *res.data;
}

std::vector<CacheLine> TestBench::read_row(Picos my_trcd, std::uint32_t bank, std::uint32_t row) {
  const auto cols = device_->geometry().cols_per_row;
  std::vector<CacheLine> out;
  out.reserve(cols);
  Picos t = activate(bank, row);
  Picos r = t + my_trcd;
  for (std::uint32_t c = 0; c < cols; ++c, r += standard_.tbl) out.push_back(*must_issue(Command::read(bank, row, c, r)).data);
  r -= standard_.tbl;
  precharge(bank, row, std::max(r + standard_.tcl + standard_.tbl, t + tras_min(standard_)));
  return out;
}

bool TestBench::act_pre(std::uint32_t bank, std::uint32_t row, Picos tras) {
  if (check_tras(tras, standard_) == TrasCheck::BelowMin) return false;
  Picos t = activate(bank, row);
  precharge(bank, row, t + tras);
  return true;
}

// ---------------------------------------------------------------- tests

std::optional<LineError> diff_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col, const CacheLine& got,
                                   const CacheLine& expected) {
  LineError le;
  bool any = false;
  for (std::uint32_t b = 0; b < kBeatsPerLine; ++b) {
    le.flipped[b] = got[b] ^ expected[b];
    any |= le.flipped[b] != 0;
  }
  if (!any) return std::nullopt;
  le.bank = static_cast<std::uint8_t>(bank);
  le.row = row;
  le.col = static_cast<std::uint16_t>(col);
  return le;
}

std::optional<LineError> test_read_cacheline(TestBench& bench, std::uint32_t bank, std::uint32_t row,
                                             std::uint32_t col, Picos my_trcd, Picos my_trp, std::uint8_t pattern) {
  auto got = bench.read_cacheline(my_trcd, my_trp, bank, row, col);
  return diff_line(bank, row, col, got, pattern_line(pattern));
}

namespace {

void tally(CampaignCell& cell, std::optional<LineError>&& le, Detail detail) {
  cell.tested_lines += 1;
  cell.tested_bits += kLineBits;
  if (!le) return;
  cell.erroneous_lines += 1;
  cell.error_bits += le->error_bits();
  if (detail == Detail::Lines) cell.lines.push_back(std::move(*le));
}

void check_scope(const Device& device, const Scope& scope) { (void)scope.resolved(device.geometry()); }

}  // namespace

CampaignCell test_trcd_col_order(Device& device, Picos my_trcd, PatternPair pattern, const Scope& scope_in,
                                 Detail detail) {
  check_scope(device, scope_in);
  const auto scope = scope_in.resolved(device.geometry());
  TestBench bench(device);
  const auto& std_t = bench.standard();
  const auto data = pattern_line(pattern.primary);
  CampaignCell cell;
  cell.latency = my_trcd;
  cell.pattern = pattern;
  for (auto b = scope.bank_begin; b < scope.bank_end; ++b) {
    for (auto c = scope.col_begin; c < scope.col_end; ++c) {
      for (auto r = scope.row_begin; r < scope.row_end; ++r) {
        bench.write_line(b, r, c, data);
        if (bench.read_cacheline(std_t.trcd, std_t.trp, b, r, c) != data)
          throw IntegrityError(fmt::format("standard-timing verify failed at bank {} row {} col {}", b, r, c));
        tally(cell, test_read_cacheline(bench, b, r, c, my_trcd, std_t.trp, pattern.primary), detail);
      }
    }
  }
  return cell;
}

CampaignCell test_read_row(Device& device, std::uint32_t bank, std::uint32_t row, Picos my_trcd,
                           std::uint8_t pattern, bool rewrite) {
  const auto& g = device.geometry();
  if (bank >= g.banks || row >= g.rows_per_bank)
    throw ValidationError(fmt::format("read_row: bank {} row {} outside geometry", bank, row));
  TestBench bench(device);
  const auto data = pattern_line(pattern);
  if (rewrite) bench.write_row(bank, row, data);
  CampaignCell cell;
  cell.latency = my_trcd;
  cell.pattern = {pattern, static_cast<std::uint8_t>(~pattern)};
  auto lines = bench.read_row(my_trcd, bank, row);
  for (std::uint32_t c = 0; c < lines.size(); ++c) tally(cell, diff_line(bank, row, c, lines[c], data), Detail::Lines);
  return cell;
}

CampaignCell test_trp_row_order(Device& device, Picos my_trp, PatternPair pattern, const Scope& scope_in,
                                Detail detail) {
  const auto& g = device.geometry();
  const auto scope = scope_in.resolved(g);
  if (g.rows_per_bank < 2) throw ValidationError("trp_row_order: needs at least two rows per bank");
  TestBench bench(device);
  const auto& std_t = bench.standard();
  const auto data = pattern_line(pattern.primary);
  const auto other = pattern_line(pattern.secondary);
  CampaignCell cell;
  cell.latency = my_trp;
  cell.pattern = pattern;
  auto verify = [&](std::uint32_t b, std::uint32_t r, const CacheLine& want) {
    auto got = bench.read_row(std_t.trcd, b, r);
    for (std::uint32_t c = 0; c < got.size(); ++c)
      if (got[c] != want)
        throw IntegrityError(fmt::format("standard-timing verify failed at bank {} row {} col {}", b, r, c));
  };
  for (auto b = scope.bank_begin; b < scope.bank_end; ++b) {
    for (auto r = scope.row_begin; r < scope.row_end; ++r) {
      const std::uint32_t neighbour = r + 1 < g.rows_per_bank ? r + 1 : r - 1;
      bench.write_row(b, r, data);
      verify(b, r, data);
      bench.write_row(b, neighbour, other);
      verify(b, neighbour, other);
      bench.set_next_act_gap(my_trp);
      auto got = bench.read_row(std_t.trcd, b, r);
      for (auto c = scope.col_begin; c < scope.col_end; ++c) tally(cell, diff_line(b, r, c, got[c], data), detail);
    }
  }
  return cell;
}

CampaignCell test_tras_retention(Device& device, Picos tras, Picos wait, std::uint8_t pattern, const Scope& scope_in,
                                 Detail detail) {
  const auto scope = scope_in.resolved(device.geometry());
  TestBench bench(device);
  CampaignCell cell;
  cell.latency = tras;
  cell.pattern = {pattern, static_cast<std::uint8_t>(~pattern)};
  if (check_tras(tras, bench.standard()) == TrasCheck::BelowMin) {
    cell.status = CellStatus::Refused;
    return cell;
  }
  const auto data = pattern_line(pattern);
  for (auto b = scope.bank_begin; b < scope.bank_end; ++b) {
    for (auto r = scope.row_begin; r < scope.row_end; ++r) {
      bench.write_row(b, r, data);
      bench.act_pre(b, r, tras);
      bench.idle(wait);
      auto got = bench.read_row(bench.standard().trcd, b, r);
      for (auto c = scope.col_begin; c < scope.col_end; ++c) tally(cell, diff_line(b, r, c, got[c], data), detail);
    }
  }
  return cell;
}

// ---------------------------------------------------------------- campaigns

std::uint64_t cell_stream_key(std::uint64_t plan_seed, std::uint64_t index) {
  return hash_combine(hash_combine(plan_seed, 0x43454c4cULL), index);
}

namespace {

CampaignCell run_cell(const DeviceFactory& factory, const CampaignPlan& plan, std::uint64_t index,
                      std::uint32_t round, Picos latency, PatternPair pattern) {
  Device device = factory();
  device.reseed_stream(cell_stream_key(plan.seed, index));
  const auto scope = plan.scope.resolved(device.geometry());
  const auto std_t = TimingSet::standard();
  CampaignCell cell;
  switch (plan.kind) {
    case TestKind::ReadCacheline: {
      TestBench bench(device);
      const auto data = pattern_line(pattern.primary);
      cell.latency = latency;
      cell.pattern = pattern;
      for (auto b = scope.bank_begin; b < scope.bank_end; ++b)
        for (auto r = scope.row_begin; r < scope.row_end; ++r)
          for (auto c = scope.col_begin; c < scope.col_end; ++c) {
            bench.write_line(b, r, c, data);
            tally(cell, test_read_cacheline(bench, b, r, c, latency, std_t.trp, pattern.primary), plan.detail);
          }
      break;
    }
    case TestKind::ReadRow: {
      cell.latency = latency;
      cell.pattern = pattern;
      for (auto b = scope.bank_begin; b < scope.bank_end; ++b)
        for (auto r = scope.row_begin; r < scope.row_end; ++r) {
          auto row = test_read_row(device, b, r, latency, pattern.primary);
          cell.tested_lines += scope.col_end - scope.col_begin;
          cell.tested_bits += std::uint64_t{scope.col_end - scope.col_begin} * kLineBits;
          for (auto& le : row.lines) {
            if (le.col < scope.col_begin || le.col >= scope.col_end) continue;
            cell.erroneous_lines += 1;
            cell.error_bits += le.error_bits();
            if (plan.detail == Detail::Lines) cell.lines.push_back(le);
          }
        }
      break;
    }
    case TestKind::TrcdColOrder:
      cell = test_trcd_col_order(device, latency, pattern, scope, plan.detail);
      break;
    case TestKind::TrpRowOrder:
      cell = test_trp_row_order(device, latency, pattern, scope, plan.detail);
      break;
    case TestKind::TrasRetention:
      cell = test_tras_retention(device, latency, plan.wait, pattern.primary, scope, plan.detail);
      cell.pattern = pattern;
      break;
  }
  cell.round = round;
  return cell;
}

}  // namespace

void run_campaign(const DeviceFactory& factory, const CampaignPlan& plan_in, const CellSink& sink, unsigned jobs) {
  plan_in.validate();
  struct Slot {
    std::uint32_t round;
    Picos latency;
    PatternPair pattern;
  };
  std::vector<Slot> slots;
  for (std::uint32_t round = 0; round < plan_in.rounds; ++round)
    for (auto l : plan_in.latencies)
      for (auto p : plan_in.patterns) slots.push_back({round, l, p});

  jobs = std::max(1u, jobs);
  for (std::size_t base = 0; base < slots.size(); base += jobs) {
    const std::size_t n = std::min<std::size_t>(jobs, slots.size() - base);
    std::vector<CampaignCell> batch(n);
    if (n == 1) {
      const auto& s = slots[base];
      batch[0] = run_cell(factory, plan_in, base, s.round, s.latency, s.pattern);
    } else {
      std::vector<std::exception_ptr> errors(n);
      std::vector<std::thread> threads;
      for (std::size_t i = 0; i < n; ++i)
        threads.emplace_back([&, i] {
          try {
            const auto& s = slots[base + i];
            batch[i] = run_cell(factory, plan_in, base + i, s.round, s.latency, s.pattern);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
      for (auto& t : threads) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    for (auto& c : batch) sink(std::move(c));
  }
}

CampaignResult run_campaign(const DeviceFactory& factory, const CampaignPlan& plan, unsigned jobs) {
  CampaignResult result;
  result.plan = plan;
  {
    Device probe = factory();
    result.geometry = probe.geometry();
    result.plan.scope = plan.scope.resolved(result.geometry);
  }
  run_campaign(factory, result.plan, [&](CampaignCell&& c) { result.cells.push_back(std::move(c)); }, jobs);
  return result;
}

}  // namespace flydram
