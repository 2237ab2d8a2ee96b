#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <string_view>
#include <vector>

#include "flydram/device.hpp"
#include "flydram/units.hpp"

namespace flydram {

struct TimingSet {
  Picos trcd = 13125;
  Picos trp = 13125;
  Picos tras = 36000;
  Picos tcl = 13125;
  Picos tbl = 5000;

  /// DDR3-1333H baseline.
  static constexpr TimingSet standard() { return {}; }

  void validate() const;
  friend bool operator==(const TimingSet&, const TimingSet&) = default;
};

/// Fastest tRCD the restoration floor is derived from.
inline constexpr Picos kFastTrcdFloor = 5000;

/// Shortest ACT->PRE gap that still covers activating a row and reading one
/// line: tRCD_floor + tCL + tBL, snapped to the nearest 2.5ns step (22.5ns for
/// the baseline tCL/tBL).
Picos tras_min(const TimingSet& timing, Picos trcd_floor = kFastTrcdFloor);

enum class TrasCheck { Ok, BelowMin };
TrasCheck check_tras(Picos provided_tras, const TimingSet& timing, Picos trcd_floor = kFastTrcdFloor);

enum class CommandKind : std::uint8_t { Act, Read, Write, Pre };
std::string_view to_string(CommandKind kind);

struct Command {
  CommandKind kind = CommandKind::Act;
  std::uint32_t bank = 0;
  std::uint32_t row = 0;
  std::optional<std::uint32_t> col;  // present for Read/Write only
  Picos time = 0;

  static Command act(std::uint32_t bank, std::uint32_t row, Picos t) { return {CommandKind::Act, bank, row, {}, t}; }
  static Command read(std::uint32_t bank, std::uint32_t row, std::uint32_t col, Picos t) {
    return {CommandKind::Read, bank, row, col, t};
  }
  static Command write(std::uint32_t bank, std::uint32_t row, std::uint32_t col, Picos t) {
    return {CommandKind::Write, bank, row, col, t};
  }
  static Command pre(std::uint32_t bank, std::uint32_t row, Picos t) { return {CommandKind::Pre, bank, row, {}, t}; }

  bool well_formed() const { return col.has_value() == (kind == CommandKind::Read || kind == CommandKind::Write); }
};

enum class Rule : std::uint8_t {
  Trcd,             // column command before ACT + tRCD
  Trp,              // ACT before PRE + tRP
  Tras,             // PRE before ACT + tRAS
  ReadToPrecharge,  // PRE before the last column command's data finished (tCL + tBL)
  DataBus,          // column commands closer than one burst (tBL) on the shared bus
  BankState,        // protocol error: wrong row open, ACT on an open bank, ...
  TimeOrder,        // timestamps went backwards on a bank
};
std::string_view to_string(Rule rule);

struct Violation {
  Rule rule = Rule::Trcd;
  Picos required = 0;
  Picos actual = 0;
  friend bool operator==(const Violation&, const Violation&) = default;
};

enum class BankPhase : std::uint8_t { Precharged, Activating, Open, Precharging };

struct BankState {
  BankPhase phase = BankPhase::Precharged;
  std::optional<std::uint32_t> open_row;
  std::optional<Picos> last_act;
  std::optional<Picos> last_pre;
  std::optional<Picos> last_col;
  Picos last_cmd = 0;
  bool first_read_done = false;
};

/// One accepted command with the latencies it actually experienced.
struct LogEntry {
  Picos time = 0;
  std::uint32_t row = 0;
  std::int32_t col = -1;
  std::uint16_t bank = 0;
  CommandKind kind = CommandKind::Act;
  std::uint16_t timing_index = 0;  // into AuditLog::timings()
  std::int64_t eff_trcd = -1;      // -1: not applicable
  std::int64_t eff_trp = -1;
  std::int64_t eff_tras = -1;
  std::uint32_t flips = 0;
};

/// Append-only record of every accepted command and the TimingSet in force.
class AuditLog {
 public:
  void append(const LogEntry& entry, const TimingSet& timing);
  const std::vector<LogEntry>& entries() const { return entries_; }
  const std::vector<TimingSet>& timings() const { return timings_; }
  const TimingSet& timing_of(const LogEntry& e) const { return timings_[e.timing_index]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// `time_ps,kind,bank,row,col,eff_trcd_ps,eff_trp_ps,eff_tras_ps,flips`
  void write_csv(std::ostream& out) const;

 private:
  std::vector<LogEntry> entries_;
  std::vector<TimingSet> timings_;
};

struct AuditFinding {
  std::size_t index = 0;  // entry position in the log
  Violation violation;
  friend bool operator==(const AuditFinding&, const AuditFinding&) = default;
};

/// Replays the log and recomputes every timing rule from timestamps under the
/// TimingSet recorded with each command. Empty iff every gap was legal.
std::vector<AuditFinding> audit(const AuditLog& log);

enum class IssueMode {
  Enforce,     // reject commands that break the TimingSet
  Permissive,  // accept any delay, record it and let the device react
};

enum class IssueStatus { Accepted, Violated, Refused };

struct IssueResult {
  IssueStatus status = IssueStatus::Accepted;
  Violation violation{};               // Violated / Refused(Tras)
  std::optional<Picos> eff_trcd;       // first column command after ACT
  std::optional<Picos> eff_trp;        // ACT after PRE
  std::optional<Picos> eff_tras;       // PRE after ACT
  std::optional<CacheLine> data;       // READ data when a device is attached
  FlipReport flips;

  bool accepted() const { return status == IssueStatus::Accepted; }
};

/// Per-bank DRAM command state machine over an optional attached Device.
///
/// The engine never owns a clock: callers stamp each command. Banks are
/// independent except for the shared data bus. In permissive mode the
/// effective latencies are forwarded to the device: the first READ after an
/// ACT drives an activation read, an ACT after a PRE drives a
/// precharge-activate, and a PRE earlier than tRASmin is refused outright.
class TimingEngine {
 public:
  explicit TimingEngine(std::uint32_t banks, Device* device = nullptr, bool keep_log = true);

  IssueResult issue(const Command& cmd, IssueMode mode, const TimingSet& timing,
                    const CacheLine* write_data = nullptr);

  const BankState& bank(std::uint32_t b) const { return banks_.at(b); }
  const AuditLog& log() const { return log_; }
  AuditLog take_log() { return std::exchange(log_, {}); }
  Device* device() const { return device_; }
  std::uint64_t total_flips() const { return total_flips_; }

 private:
  std::optional<Violation> check(const Command& cmd, const BankState& bs, const TimingSet& timing) const;

  std::vector<BankState> banks_;
  std::optional<Picos> last_bus_col_;
  Device* device_ = nullptr;
  bool keep_log_ = true;
  AuditLog log_;
  std::uint64_t total_flips_ = 0;
};

}  // namespace flydram
