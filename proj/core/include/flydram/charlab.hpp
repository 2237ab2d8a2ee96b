#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flydram/device.hpp"
#include "flydram/kvconfig.hpp"
#include "flydram/timing.hpp"

namespace flydram {

enum class TestKind {
  ReadCacheline,  // one ACT/READ/PRE per line with user tRCD and tRP
  ReadRow,        // one ACT, then every column of the row
  TrcdColOrder,   // per line: write, verify at standard, re-read at reduced tRCD
  TrpRowOrder,    // per row: write row and inverted neighbour, re-open row after reduced tRP
  TrasRetention,  // ACT/PRE with reduced tRAS, wait a refresh period, verify
};

std::string_view to_string(TestKind kind);
TestKind parse_test_kind(std::string_view text);

/// Data written to the tested line/row and, for row-order tests, the
/// companion pattern written to the neighbouring row.
struct PatternPair {
  std::uint8_t primary = 0x00;
  std::uint8_t secondary = 0xff;
  friend bool operator==(const PatternPair&, const PatternPair&) = default;
};

/// Half-open index ranges; empty optional means the whole dimension.
struct Scope {
  std::uint32_t bank_begin = 0, bank_end = 0;
  std::uint32_t row_begin = 0, row_end = 0;
  std::uint32_t col_begin = 0, col_end = 0;

  static Scope full(const Geometry& g) { return {0, g.banks, 0, g.rows_per_bank, 0, g.cols_per_row}; }
  bool is_unset() const { return bank_end == 0 && row_end == 0 && col_end == 0; }
  Scope resolved(const Geometry& g) const;
  std::uint64_t lines() const {
    return std::uint64_t{bank_end - bank_begin} * (row_end - row_begin) * (col_end - col_begin);
  }
  friend bool operator==(const Scope&, const Scope&) = default;
};

enum class Detail {
  Lines,   // keep one LineError per erroneous line
  Totals,  // counts only
};

struct CampaignPlan {
  TestKind kind = TestKind::TrcdColOrder;
  std::vector<Picos> latencies;
  std::vector<PatternPair> patterns;
  std::uint32_t rounds = 1;
  Scope scope{};  // unset: whole device
  std::uint64_t seed = 1;
  Picos wait = 64'000'000'000;  // retention wait, simulated only
  Detail detail = Detail::Lines;
  double temperature_c = 20.0;  // recorded, no effect

  void validate() const;
  static CampaignPlan from_config(const KvConfig& cfg);
  KvConfig to_config() const;
  friend bool operator==(const CampaignPlan&, const CampaignPlan&) = default;
};

/// Patterns 0x00, 0xaa, 0xcc, 0xff (single-line tests).
std::vector<PatternPair> standard_patterns();
/// (0x00, 0xff), (0xaa, 0x33), (0xcc, 0x55) for row-order precharge tests.
std::vector<PatternPair> standard_pattern_pairs();
/// 12.5, 10, 7.5, 5, 2.5 ns.
std::vector<Picos> standard_sweep();

/// Flipped-bit masks of one erroneous cache line (bit i of beat j set when
/// that bit read back wrong).
struct LineError {
  std::uint32_t row = 0;
  std::uint16_t col = 0;
  std::uint8_t bank = 0;
  std::array<std::uint64_t, kBeatsPerLine> flipped{};

  std::uint32_t beat_errors(std::uint32_t beat) const;
  std::uint32_t error_bits() const;
  friend bool operator==(const LineError&, const LineError&) = default;
};

/// One erroneous data beat, the unit the CSV export and density analysis use.
struct ErrorRecord {
  std::uint32_t round = 0;
  Picos latency = 0;
  std::uint8_t pattern = 0;
  std::uint32_t bank = 0, row = 0, col = 0;
  std::uint32_t beat_index = 0;
  std::uint32_t error_bits = 0;
  std::vector<std::uint16_t> flipped_positions;  // bit positions within the beat
};

enum class CellStatus : std::uint8_t { Completed, Refused };

/// Outcome of one (round, latency, pattern) test over the scope.
struct CampaignCell {
  std::uint32_t round = 0;
  Picos latency = 0;
  PatternPair pattern{};
  CellStatus status = CellStatus::Completed;
  std::uint64_t tested_lines = 0;
  std::uint64_t tested_bits = 0;
  std::uint64_t error_bits = 0;
  std::uint64_t erroneous_lines = 0;
  std::vector<LineError> lines;  // empty under Detail::Totals

  double ber() const { return tested_bits ? static_cast<double>(error_bits) / static_cast<double>(tested_bits) : 0.0; }
  std::vector<ErrorRecord> records() const;
};

struct CampaignResult {
  CampaignPlan plan;
  Geometry geometry;
  std::vector<CampaignCell> cells;

  std::uint64_t scope_lines() const { return plan.scope.lines(); }
  std::uint64_t tested_bits() const;
  std::uint64_t error_bits() const;
  std::vector<ErrorRecord> records() const;
  /// Cells at one latency (same plan, geometry).
  CampaignResult at_latency(Picos latency) const;

  /// `round,latency_ps,pattern,bank,row,col,beat,error_bits`
  void write_csv(std::ostream& out) const;
  /// Compact little-endian blob, magic "FDCR1".
  void save(std::ostream& out) const;
  static CampaignResult load(std::istream& in);
};

/// Command-level test harness: a permissive timing engine over a device,
/// with a simulated clock that advances as the tests wait.
class TestBench {
 public:
  explicit TestBench(Device& device, TimingSet standard = TimingSet::standard(), bool keep_log = false);

  Device& device() { return *device_; }
  const TimingSet& standard() const { return standard_; }
  const TimingEngine& engine() const { return engine_; }
  Picos now() const { return now_; }

  /// Delay between the next PRE and the ACT after it (standard tRP by default).
  void set_next_act_gap(Picos trp) { next_act_gap_ = trp; }

  /// ACT, tRCD, WRITE, tCL+tBL, PRE at standard timing.
  void write_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col, const CacheLine& data);
  void write_row(std::uint32_t bank, std::uint32_t row, const CacheLine& data);

  /// ACT, wait my_trcd, READ, wait for data, PRE, then my_trp before the next ACT.
  CacheLine read_cacheline(Picos my_trcd, Picos my_trp, std::uint32_t bank, std::uint32_t row, std::uint32_t col);
  /// ACT, wait my_trcd, READ every column, PRE. Columns are visited in order.
  std::vector<CacheLine> read_row(Picos my_trcd, std::uint32_t bank, std::uint32_t row);
  /// ACT, wait tras, PRE. Returns false without issuing anything when tras
  /// is below tRASmin.
  bool act_pre(std::uint32_t bank, std::uint32_t row, Picos tras);
  void idle(Picos duration) { now_ += duration; }

 private:
  Picos activate(std::uint32_t bank, std::uint32_t row);
  void precharge(std::uint32_t bank, std::uint32_t row, Picos earliest);
  IssueResult must_issue(const Command& cmd, const CacheLine* data = nullptr);

  Device* device_;
  TimingSet standard_;
  TimingEngine engine_;
  Picos now_ = 0;
  Picos next_act_gap_;
  Picos act_time_ = 0;
};

/// Compares `got` against the pattern; nullopt when identical.
std::optional<LineError> diff_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col, const CacheLine& got,
                                   const CacheLine& expected);

/// Test 1 on one line (the line must already hold `pattern`).
std::optional<LineError> test_read_cacheline(TestBench& bench, std::uint32_t bank, std::uint32_t row,
                                             std::uint32_t col, Picos my_trcd, Picos my_trp, std::uint8_t pattern);

/// Test 3 over the scope, column-major (banks, then columns, then rows).
/// Throws IntegrityError when a standard-timing verification read fails.
CampaignCell test_trcd_col_order(Device& device, Picos my_trcd, PatternPair pattern, const Scope& scope,
                                 Detail detail = Detail::Lines);

/// Test 2: writes the row with `pattern` at standard timing (unless
/// `rewrite` is false), opens it with my_trcd and reads every column.
CampaignCell test_read_row(Device& device, std::uint32_t bank, std::uint32_t row, Picos my_trcd,
                           std::uint8_t pattern, bool rewrite = true);

/// Test 4 over the scope, row-major (banks, then rows).
CampaignCell test_trp_row_order(Device& device, Picos my_trp, PatternPair pattern, const Scope& scope,
                                Detail detail = Detail::Lines);

/// Restoration sweep point: rows written with `pattern`, ACT/PRE at `tras`,
/// `wait` of idle time, then verified. Refused below tRASmin.
CampaignCell test_tras_retention(Device& device, Picos tras, Picos wait, std::uint8_t pattern, const Scope& scope,
                                 Detail detail = Detail::Lines);

using DeviceFactory = std::function<Device()>;
using CellSink = std::function<void(CampaignCell&&)>;

/// Runs rounds x latencies x patterns cells. Each cell gets a fresh device
/// from the factory with its flip stream keyed by (plan seed, cell index), so
/// the result is identical for any `jobs`. Cells reach `sink` in plan order.
void run_campaign(const DeviceFactory& factory, const CampaignPlan& plan, const CellSink& sink, unsigned jobs = 1);
CampaignResult run_campaign(const DeviceFactory& factory, const CampaignPlan& plan, unsigned jobs = 1);

/// Key of the flip stream for cell `index` of a plan.
std::uint64_t cell_stream_key(std::uint64_t plan_seed, std::uint64_t index);

}  // namespace flydram
