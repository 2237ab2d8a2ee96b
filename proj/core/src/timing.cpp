#include "flydram/timing.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "flydram/errors.hpp"

namespace flydram {

void TimingSet::validate() const {
  if (trcd <= 0 || trp <= 0 || tras <= 0 || tcl <= 0 || tbl <= 0)
    throw ValidationError("timing set: every parameter must be positive");
  if (tras < trcd) throw ValidationError("timing set: tRAS must be >= tRCD");
}

Picos tras_min(const TimingSet& timing, Picos trcd_floor) {
  return round_nearest_quantum(trcd_floor + timing.tcl + timing.tbl);
}

TrasCheck check_tras(Picos provided_tras, const TimingSet& timing, Picos trcd_floor) {
  return provided_tras >= tras_min(timing, trcd_floor) ? TrasCheck::Ok : TrasCheck::BelowMin;
}

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::Act: return "ACT";
    case CommandKind::Read: return "READ";
    case CommandKind::Write: return "WRITE";
    case CommandKind::Pre: return "PRE";
  }
  return "?";
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::Trcd: return "tRCD";
    case Rule::Trp: return "tRP";
    case Rule::Tras: return "tRAS";
    case Rule::ReadToPrecharge: return "tCL+tBL";
    case Rule::DataBus: return "data-bus";
    case Rule::BankState: return "bank-state";
    case Rule::TimeOrder: return "time-order";
  }
  return "?";
}

void AuditLog::append(const LogEntry& entry, const TimingSet& timing) {
  LogEntry e = entry;
  // TimingSets are few (one per profile class pair); a linear scan from the
  // back hits almost immediately.
  auto it = std::find(timings_.rbegin(), timings_.rend(), timing);
  if (it == timings_.rend()) {
    timings_.push_back(timing);
    e.timing_index = static_cast<std::uint16_t>(timings_.size() - 1);
  } else {
    e.timing_index = static_cast<std::uint16_t>(std::distance(it, timings_.rend()) - 1);
  }
  entries_.push_back(e);
}

void AuditLog::write_csv(std::ostream& out) const {
  out << "time_ps,kind,bank,row,col,eff_trcd_ps,eff_trp_ps,eff_tras_ps,flips\n";
  auto opt = [](std::int64_t v) { return v < 0 ? std::string{} : fmt::format("{}", v); };
  for (const auto& e : entries_) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", e.time, to_string(e.kind), e.bank, e.row,
                       e.col < 0 ? std::string{} : fmt::format("{}", e.col), opt(e.eff_trcd), opt(e.eff_trp),
                       opt(e.eff_tras), e.flips);
  }
}

namespace {

bool is_column(CommandKind k) { return k == CommandKind::Read || k == CommandKind::Write; }

/// Protocol checks that hold in every mode.
std::optional<Violation> protocol_check(const Command& cmd, const BankState& bs) {
  if (cmd.time < bs.last_cmd) return Violation{Rule::TimeOrder, bs.last_cmd, cmd.time};
  switch (cmd.kind) {
    case CommandKind::Act:
      if (bs.open_row) return Violation{Rule::BankState, 0, 0};
      break;
    case CommandKind::Read:
    case CommandKind::Write:
      if (!bs.open_row || *bs.open_row != cmd.row) return Violation{Rule::BankState, 0, 0};
      break;
    case CommandKind::Pre:
      if (!bs.open_row) return Violation{Rule::BankState, 0, 0};
      break;
  }
  return std::nullopt;
}

std::optional<Violation> timing_check(const Command& cmd, const BankState& bs, const std::optional<Picos>& bus,
                                      const TimingSet& t) {
  switch (cmd.kind) {
    case CommandKind::Act:
      if (bs.last_pre && cmd.time - *bs.last_pre < t.trp) return Violation{Rule::Trp, t.trp, cmd.time - *bs.last_pre};
      break;
    case CommandKind::Read:
    case CommandKind::Write:
      if (bs.last_act && cmd.time - *bs.last_act < t.trcd)
        return Violation{Rule::Trcd, t.trcd, cmd.time - *bs.last_act};
      if (bus && cmd.time - *bus < t.tbl) return Violation{Rule::DataBus, t.tbl, cmd.time - *bus};
      break;
    case CommandKind::Pre:
      if (bs.last_act && cmd.time - *bs.last_act < t.tras)
        return Violation{Rule::Tras, t.tras, cmd.time - *bs.last_act};
      if (bs.last_col && bs.last_act && *bs.last_col >= *bs.last_act && cmd.time - *bs.last_col < t.tcl + t.tbl)
        return Violation{Rule::ReadToPrecharge, t.tcl + t.tbl, cmd.time - *bs.last_col};
      break;
  }
  return std::nullopt;
}

/// State transition after an accepted command; fills the effective latencies.
void advance(const Command& cmd, BankState& bs, std::optional<Picos>& bus, LogEntry& entry) {
  switch (cmd.kind) {
    case CommandKind::Act:
      if (bs.last_pre) entry.eff_trp = cmd.time - *bs.last_pre;
      bs.phase = BankPhase::Activating;
      bs.open_row = cmd.row;
      bs.last_act = cmd.time;
      bs.first_read_done = false;
      break;
    case CommandKind::Read:
    case CommandKind::Write:
      if (!bs.first_read_done) entry.eff_trcd = cmd.time - *bs.last_act;
      bs.phase = BankPhase::Open;
      bs.first_read_done = true;
      bs.last_col = cmd.time;
      bus = cmd.time;
      break;
    case CommandKind::Pre:
      entry.eff_tras = cmd.time - *bs.last_act;
      bs.phase = BankPhase::Precharging;
      bs.open_row.reset();
      bs.last_pre = cmd.time;
      break;
  }
  bs.last_cmd = cmd.time;
}

}  // namespace

std::vector<AuditFinding> audit(const AuditLog& log) {
  std::vector<AuditFinding> findings;
  std::vector<BankState> banks;
  std::optional<Picos> bus;
  const auto& entries = log.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.bank >= banks.size()) banks.resize(e.bank + 1u);
    Command cmd{e.kind, e.bank, e.row, e.col < 0 ? std::nullopt : std::optional<std::uint32_t>(e.col), e.time};
    auto& bs = banks[e.bank];
    auto v = protocol_check(cmd, bs);
    if (!v) v = timing_check(cmd, bs, bus, log.timing_of(e));
    if (v) findings.push_back({i, *v});
    LogEntry scratch;
    advance(cmd, bs, bus, scratch);
  }
  return findings;
}

TimingEngine::TimingEngine(std::uint32_t banks, Device* device, bool keep_log)
    : banks_(banks), device_(device), keep_log_(keep_log) {
  if (device_ && device_->geometry().banks != banks)
    throw ValidationError("timing engine: bank count differs from the attached device");
}

std::optional<Violation> TimingEngine::check(const Command& cmd, const BankState& bs, const TimingSet& timing) const {
  if (auto v = protocol_check(cmd, bs)) return v;
  return timing_check(cmd, bs, last_bus_col_, timing);
}

IssueResult TimingEngine::issue(const Command& cmd, IssueMode mode, const TimingSet& timing,
                                const CacheLine* write_data) {
  if (!cmd.well_formed()) throw ValidationError("malformed command: column present iff READ/WRITE");
  if (cmd.bank >= banks_.size()) throw ValidationError(fmt::format("bank {} out of range", cmd.bank));
  auto& bs = banks_[cmd.bank];
  IssueResult result;

  if (auto v = protocol_check(cmd, bs)) {
    result.status = IssueStatus::Violated;
    result.violation = *v;
    return result;
  }
  if (mode == IssueMode::Enforce) {
    if (auto v = timing_check(cmd, bs, last_bus_col_, timing)) {
      result.status = IssueStatus::Violated;
      result.violation = *v;
      return result;
    }
  }
  if (cmd.kind == CommandKind::Pre) {
    Picos gap = cmd.time - *bs.last_act;
    if (check_tras(gap, timing) == TrasCheck::BelowMin) {
      result.status = IssueStatus::Refused;
      result.violation = {Rule::Tras, tras_min(timing), gap};
      return result;
    }
  }

  const bool first_column = is_column(cmd.kind) && !bs.first_read_done;
  LogEntry entry;
  entry.time = cmd.time;
  entry.row = cmd.row;
  entry.col = cmd.col ? static_cast<std::int32_t>(*cmd.col) : -1;
  entry.bank = static_cast<std::uint16_t>(cmd.bank);
  entry.kind = cmd.kind;
  advance(cmd, bs, last_bus_col_, entry);
  if (entry.eff_trcd >= 0) result.eff_trcd = entry.eff_trcd;
  if (entry.eff_trp >= 0) result.eff_trp = entry.eff_trp;
  if (entry.eff_tras >= 0) result.eff_tras = entry.eff_tras;

  if (device_) {
    switch (cmd.kind) {
      case CommandKind::Act:
        if (result.eff_trp && *result.eff_trp > 0)
          result.flips = device_->apply_precharge_activate(cmd.bank, cmd.row, *result.eff_trp);
        break;
      case CommandKind::Read:
        if (first_column && *result.eff_trcd > 0) {
          auto r = device_->apply_activation_read(cmd.bank, cmd.row, *cmd.col, *result.eff_trcd);
          result.data = r.line;
          result.flips = std::move(r.report);
        } else {
          result.data = device_->subsequent_read(cmd.bank, cmd.row, *cmd.col);
        }
        break;
      case CommandKind::Write:
        device_->write_line(cmd.bank, cmd.row, *cmd.col, write_data ? *write_data : CacheLine{});
        break;
      case CommandKind::Pre:
        break;
    }
  }
  entry.flips = static_cast<std::uint32_t>(result.flips.flips.size());
  total_flips_ += entry.flips;
  if (keep_log_) log_.append(entry, timing);
  return result;
}

}  // namespace flydram
