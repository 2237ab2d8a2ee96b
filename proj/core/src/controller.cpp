#include "flydram/controller.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "flydram/errors.hpp"

namespace flydram {

DecodedAddress AddressMap::decode(std::uint64_t address) const {
  if (address >= capacity())
    throw ValidationError(fmt::format("address {:#x} beyond capacity {:#x}", address, capacity()));
  std::uint64_t line = address / geometry.line_bytes;
  DecodedAddress a;
  a.col = static_cast<std::uint32_t>(line % geometry.cols_per_row);
  line /= geometry.cols_per_row;
  a.channel = static_cast<std::uint32_t>(line % channels);
  line /= channels;
  a.bank = static_cast<std::uint32_t>(line % geometry.banks);
  line /= geometry.banks;
  a.row = static_cast<std::uint32_t>(line);
  return a;
}

std::uint64_t AddressMap::encode(const DecodedAddress& a) const {
  if (a.channel >= channels || a.bank >= geometry.banks || a.row >= geometry.rows_per_bank ||
      a.col >= geometry.cols_per_row)
    throw ValidationError("address map: location outside geometry");
  std::uint64_t line = a.row;
  line = line * geometry.banks + a.bank;
  line = line * channels + a.channel;
  line = line * geometry.cols_per_row + a.col;
  return line * geometry.line_bytes;
}

void ControllerConfig::validate() const {
  if (queue_depth < 1) throw ValidationError("controller: queue depth must be >= 1");
  baseline.validate();
  if (profile) profile->validate();
}

Controller::Controller(const ControllerConfig& config, const Geometry& geometry, Device* device)
    : config_(config),
      geometry_(geometry),
      engine_(geometry.banks, device, config.keep_log),
      banks_(geometry.banks),
      data_cycles_(to_cycles(config.baseline.tcl) + to_cycles(config.baseline.tbl)) {
  config_.validate();
  geometry_.validate();
  if (config_.profile && (config_.profile->banks != geometry.banks || config_.profile->cols != geometry.cols_per_row))
    throw ValidationError("controller: profile geometry differs from the channel's");
}

bool Controller::enqueue(const MemRequest& req, const DecodedAddress& where) {
  if (full()) return false;
  if (where.bank >= geometry_.banks || where.row >= geometry_.rows_per_bank || where.col >= geometry_.cols_per_row)
    throw ValidationError("controller: request outside geometry");
  banks_[where.bank].q.push_back({req, where, lookup_timing(config_.profile, where.bank, where.col, config_.baseline)});
  ++occupancy_;
  return true;
}

bool Controller::try_issue(const Command& cmd, const TimingSet& timing, Cycle now, const CacheLine* data) {
  auto r = engine_.issue(cmd, IssueMode::Enforce, timing, data);
  if (!r.accepted()) return false;
  stats_.flips += r.flips.flips.size();
  if (config_.keep_stats)
    command_stats_.push_back({now, cmd.bank, cmd.kind, cmd.row, cmd.col ? static_cast<std::int32_t>(*cmd.col) : -1,
                              r.eff_trcd.value_or(-1)});
  return true;
}

void Controller::retire(Cycle now, std::vector<Completion>& done) {
  while (!inflight_.empty() && inflight_.top().done <= now) {
    done.push_back(inflight_.top().c);
    inflight_.pop();
  }
}

void Controller::schedule(Cycle now) {
  if (occupancy_ == 0) return;

  struct Candidate {
    std::uint32_t bank;
    CommandKind kind;
    std::size_t index;  // queue position of the request served
    std::uint64_t id;
  };
  std::vector<Candidate> cands;
  cands.reserve(banks_.size());
  for (std::uint32_t b = 0; b < banks_.size(); ++b) {
    auto& bq = banks_[b];
    if (bq.q.empty()) continue;
    const auto& bs = engine_.bank(b);
    if (bs.open_row) {
      auto hit = std::find_if(bq.q.begin(), bq.q.end(), [&](const Pending& p) { return p.where.row == *bs.open_row; });
      if (hit != bq.q.end()) {
        auto kind = hit->req.kind == ReqKind::Read ? CommandKind::Read : CommandKind::Write;
        cands.push_back({b, kind, static_cast<std::size_t>(hit - bq.q.begin()), hit->req.id});
      } else {
        cands.push_back({b, CommandKind::Pre, 0, bq.q.front().req.id});
      }
    } else {
      cands.push_back({b, CommandKind::Act, 0, bq.q.front().req.id});
    }
  }
  // Column commands first (they contend for the bus), each group oldest first.
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    bool ca = a.kind == CommandKind::Read || a.kind == CommandKind::Write;
    bool cb = b.kind == CommandKind::Read || b.kind == CommandKind::Write;
    if (ca != cb) return ca;
    return a.id < b.id;
  });

  const Picos t = now * kMemCyclePs;
  for (const auto& c : cands) {
    auto& bq = banks_[c.bank];
    const auto& p = bq.q[c.index];
    switch (c.kind) {
      case CommandKind::Act:
        if (try_issue(Command::act(c.bank, p.where.row, t), p.timing, now)) {
          bq.act_timing = p.timing;
          bq.hit_open = false;
          ++stats_.acts;
        }
        break;
      case CommandKind::Pre:
        if (try_issue(Command::pre(c.bank, *engine_.bank(c.bank).open_row, t), bq.act_timing, now)) ++stats_.pres;
        break;
      case CommandKind::Read:
      case CommandKind::Write: {
        const bool is_read = c.kind == CommandKind::Read;
        Command cmd = is_read ? Command::read(c.bank, p.where.row, p.where.col, t)
                              : Command::write(c.bank, p.where.row, p.where.col, t);
        if (!try_issue(cmd, p.timing, now)) break;
        if (bq.hit_open) ++stats_.row_hits;
        bq.hit_open = true;
        ++(is_read ? stats_.reads : stats_.writes);
        inflight_.push({now + data_cycles_, {p.req.id, p.req.core, p.req.kind, p.req.arrival, now + data_cycles_}});
        bq.q.erase(bq.q.begin() + static_cast<std::ptrdiff_t>(c.index));
        --occupancy_;
        break;
      }
    }
  }
}

Cycle Controller::next_event_cycle(Cycle now) const {
  if (occupancy_ > 0) return now + 1;
  if (!inflight_.empty()) return std::max(now + 1, inflight_.top().done);
  return std::numeric_limits<Cycle>::max();
}

void Controller::write_stats_csv(std::ostream& out) const {
  out << "cycle,bank,cmd,row,col,eff_trcd_ps\n";
  for (const auto& s : command_stats_)
    out << fmt::format("{},{},{},{},{},{}\n", s.cycle, s.bank, to_string(s.cmd), s.row,
                       s.col < 0 ? std::string{} : std::to_string(s.col),
                       s.eff_trcd < 0 ? std::string{} : std::to_string(s.eff_trcd));
}

}  // namespace flydram
