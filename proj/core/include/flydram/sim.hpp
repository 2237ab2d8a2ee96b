#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flydram/controller.hpp"
#include "flydram/trace.hpp"

namespace flydram {

/// Virtual page of one core: (core << 40) | page number.
using PageKey = std::uint64_t;
inline PageKey page_key(std::uint32_t core, std::uint64_t vpage) { return (std::uint64_t{core} << 40) | vpage; }

/// Injective virtual -> physical page map shared by all cores.
struct PageMap {
  std::uint64_t page_bytes = 4096;
  std::map<PageKey, std::uint64_t> pages;  // physical page numbers

  /// Throws ValidationError for an unmapped page.
  std::uint64_t translate(std::uint32_t core, std::uint64_t vaddr) const;
  bool injective() const;
};

/// Distinct pages the traces touch, core by core in first-touch order.
std::vector<PageKey> touched_pages(std::span<const Trace> traces, std::uint64_t page_bytes = 4096);
/// Pages by descending access count, ties by key.
std::vector<PageKey> hot_pages(std::span<const Trace> traces, std::uint64_t page_bytes = 4096);

/// Uniform physical pages without replacement (sparse Fisher-Yates).
PageMap page_alloc_random(std::span<const PageKey> pages, std::uint64_t physical_pages, std::uint64_t seed,
                          std::uint64_t page_bytes = 4096);

/// Sum over the page's lines of profiled tRCD + tRP (baseline when no profile).
Picos page_latency_cost(const AddressMap& map, const LatencyProfile* profile, std::uint64_t physical_page,
                        std::uint64_t page_bytes = 4096);

/// Pages in `order` (hottest first) take the cheapest free physical pages,
/// ties by lowest address.
PageMap page_alloc_aware(std::span<const PageKey> order, const LatencyProfile* profile, const AddressMap& map,
                         std::uint64_t page_bytes = 4096);

struct SimConfig {
  AddressMap map;
  ControllerConfig controller;
  /// Direct-mapped filter in front of memory, in lines; 0 disables it.
  std::uint32_t cache_lines = 0;
  /// Empty, or one device per channel (flips are then counted).
  std::vector<Device*> devices;
};

struct CoreReport {
  std::uint64_t instructions = 0;
  Cycle cycles = 0;
  double ipc = 0;
  double alone_ipc = 0;  // 0 when not computed
  std::uint64_t reads = 0, writes = 0, cache_hits = 0;
  Cycle read_latency = 0;  // summed over memory reads
};

struct SimReport {
  std::vector<CoreReport> cores;
  Cycle total_cycles = 0;
  ControllerStats commands;  // summed over channels
  double row_hit_rate = 0;
  std::optional<double> ws;
  std::optional<std::uint64_t> audit_findings;  // when logs were kept

  std::string to_json() const;  // schema "flydram-sim/1"
  /// `core,instructions,cycles,ipc,alone_ipc,reads,writes,avg_read_latency`
  void write_csv(std::ostream& out) const;
};

struct SimOptions {
  /// Run each trace alone under the same config and report WS.
  bool weighted_speedup = false;
  /// Use these alone IPCs for WS instead (e.g. baseline-system runs).
  std::optional<std::vector<double>> alone_ipcs;
};

/// In-order cores, one instruction per cycle, blocking reads, posted writes.
/// Each cycle: completions retire, cores issue, controllers schedule. A core's
/// IPC uses its own finish cycle.
SimReport run_sim(std::span<const Trace> traces, const SimConfig& config, const PageMap& pages,
                  const SimOptions& options = {});

/// Sum of shared / alone IPC.
double weighted_speedup(std::span<const double> shared_ipcs, std::span<const double> alone_ipcs);

}  // namespace flydram
