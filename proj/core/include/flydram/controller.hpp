#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <queue>
#include <vector>

#include "flydram/device.hpp"
#include "flydram/profile.hpp"
#include "flydram/timing.hpp"

namespace flydram {

struct DecodedAddress {
  std::uint32_t channel = 0;
  std::uint32_t bank = 0;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend bool operator==(const DecodedAddress&, const DecodedAddress&) = default;
};

/// Physical address layout, low to high: line offset | col | channel | bank |
/// row. Fields are mixed-radix, so no dimension has to be a power of two.
struct AddressMap {
  Geometry geometry;
  std::uint32_t channels = 2;

  std::uint64_t capacity() const { return geometry.bytes() * channels; }
  /// Throws ValidationError for addresses beyond capacity.
  DecodedAddress decode(std::uint64_t address) const;
  /// Line-aligned address of a location.
  std::uint64_t encode(const DecodedAddress& a) const;
};

enum class ReqKind : std::uint8_t { Read, Write };

struct MemRequest {
  std::uint64_t id = 0;
  ReqKind kind = ReqKind::Read;
  std::uint64_t address = 0;
  Cycle arrival = 0;
  std::uint32_t core = 0;
};

struct Completion {
  std::uint64_t id = 0;
  std::uint32_t core = 0;
  ReqKind kind = ReqKind::Read;
  Cycle arrival = 0;
  Cycle done = 0;
};

struct ControllerConfig {
  std::uint32_t queue_depth = 32;                   // per channel
  const LatencyProfile* profile = nullptr;          // null: baseline timing everywhere
  TimingSet baseline = TimingSet::standard();
  bool keep_log = false;                            // audit log of every command
  bool keep_stats = false;                          // per-command stats rows

  void validate() const;
};

struct ControllerStats {
  std::uint64_t reads = 0, writes = 0, acts = 0, pres = 0;
  std::uint64_t row_hits = 0;  // column commands that needed no ACT of their own
  std::uint64_t flips = 0;     // bits the attached device flipped (0 when safe)
};

struct CommandStat {
  Cycle cycle = 0;
  std::uint32_t bank = 0;
  CommandKind cmd = CommandKind::Act;
  std::uint32_t row = 0;
  std::int32_t col = -1;
  std::int64_t eff_trcd = -1;
};

/// One channel: per-bank request queues scheduled FR-FCFS (row hits first,
/// then oldest) under an open-row policy. A row is closed only for a queued
/// request to another row when no request to the open row remains. At most
/// one command per bank per tick; the engine runs in enforce mode with each
/// request's TimingSet from the profile, so nothing issues early.
class Controller {
 public:
  Controller(const ControllerConfig& config, const Geometry& geometry, Device* device = nullptr);

  bool full() const { return occupancy_ >= config_.queue_depth; }
  bool idle() const { return occupancy_ == 0 && inflight_.empty(); }
  /// False (request not taken) when the queue is full.
  bool enqueue(const MemRequest& req, const DecodedAddress& where);

  /// Appends completions due at or before `now` to `done`.
  void retire(Cycle now, std::vector<Completion>& done);
  /// Issues this cycle's commands.
  void schedule(Cycle now);
  void tick(Cycle now, std::vector<Completion>& done) {
    retire(now, done);
    schedule(now);
  }
  /// Earliest cycle after `now` at which tick can do anything.
  Cycle next_event_cycle(Cycle now) const;

  const ControllerStats& stats() const { return stats_; }
  const TimingEngine& engine() const { return engine_; }
  const std::vector<CommandStat>& command_stats() const { return command_stats_; }
  /// `cycle,bank,cmd,row,col,eff_trcd_ps`
  void write_stats_csv(std::ostream& out) const;

 private:
  struct Pending {
    MemRequest req;
    DecodedAddress where;
    TimingSet timing;
  };
  struct BankQueue {
    std::deque<Pending> q;
    TimingSet act_timing;  // timing the open row was activated under
    bool hit_open = false; // the open row's first column command has issued
  };
  struct Inflight {
    Cycle done;
    Completion c;
    bool operator>(const Inflight& o) const { return done != o.done ? done > o.done : c.id > o.c.id; }
  };

  bool try_issue(const Command& cmd, const TimingSet& timing, Cycle now, const CacheLine* data = nullptr);

  ControllerConfig config_;
  Geometry geometry_;
  TimingEngine engine_;
  std::vector<BankQueue> banks_;
  std::uint32_t occupancy_ = 0;
  std::priority_queue<Inflight, std::vector<Inflight>, std::greater<>> inflight_;
  Cycle data_cycles_;
  ControllerStats stats_;
  std::vector<CommandStat> command_stats_;
};

}  // namespace flydram
