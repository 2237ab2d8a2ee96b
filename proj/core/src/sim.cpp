#include "flydram/sim.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "flydram/errors.hpp"
#include "flydram/rng.hpp"
#include "json.hpp"

namespace flydram {

std::uint64_t PageMap::translate(std::uint32_t core, std::uint64_t vaddr) const {
  auto it = pages.find(page_key(core, vaddr / page_bytes));
  if (it == pages.end()) throw ValidationError(fmt::format("core {} address {:#x} has no page mapping", core, vaddr));
  return it->second * page_bytes + vaddr % page_bytes;
}

bool PageMap::injective() const {
  std::set<std::uint64_t> seen;
  for (const auto& [k, p] : pages)
    if (!seen.insert(p).second) return false;
  return true;
}

std::vector<PageKey> touched_pages(std::span<const Trace> traces, std::uint64_t page_bytes) {
  std::vector<PageKey> out;
  std::set<PageKey> seen;
  for (std::uint32_t c = 0; c < traces.size(); ++c)
    for (const auto& r : traces[c])
      if (r.access) {
        auto k = page_key(c, r.address / page_bytes);
        if (seen.insert(k).second) out.push_back(k);
      }
  return out;
}

std::vector<PageKey> hot_pages(std::span<const Trace> traces, std::uint64_t page_bytes) {
  std::map<PageKey, std::uint64_t> counts;
  for (std::uint32_t c = 0; c < traces.size(); ++c)
    for (const auto& r : traces[c])
      if (r.access) ++counts[page_key(c, r.address / page_bytes)];
  std::vector<std::pair<PageKey, std::uint64_t>> v(counts.begin(), counts.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<PageKey> out;
  out.reserve(v.size());
  for (const auto& [k, n] : v) out.push_back(k);
  return out;
}

PageMap page_alloc_random(std::span<const PageKey> pages, std::uint64_t physical_pages, std::uint64_t seed,
                          std::uint64_t page_bytes) {
  if (pages.size() > physical_pages)
    throw ValidationError(fmt::format("{} pages do not fit in {} physical pages", pages.size(), physical_pages));
  PageMap m;
  m.page_bytes = page_bytes;
  SplitMix64 rng(hash_combine(seed, 0x50414745ULL));
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;  // sparse view of the permuted array
  auto slot = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (std::uint64_t i = 0; i < pages.size(); ++i) {
    std::uint64_t j = i + rng.below(physical_pages - i);
    std::uint64_t vi = slot(i), vj = slot(j);
    swapped[j] = vi;
    swapped[i] = vj;
    if (!m.pages.emplace(pages[i], vj).second) throw ValidationError("page_alloc_random: duplicate page key");
  }
  return m;
}

Picos page_latency_cost(const AddressMap& map, const LatencyProfile* profile, std::uint64_t physical_page,
                        std::uint64_t page_bytes) {
  const auto& g = map.geometry;
  Picos cost = 0;
  for (std::uint64_t off = 0; off < page_bytes; off += g.line_bytes) {
    auto a = map.decode(physical_page * page_bytes + off);
    auto t = lookup_timing(profile, a.bank, a.col);
    cost += t.trcd + t.trp;
  }
  return cost;
}

PageMap page_alloc_aware(std::span<const PageKey> order, const LatencyProfile* profile, const AddressMap& map,
                         std::uint64_t page_bytes) {
  if (page_bytes % map.geometry.line_bytes) throw ValidationError("page size must be a whole number of lines");
  const std::uint64_t physical = map.capacity() / page_bytes;
  if (order.size() > physical) throw ValidationError("page_alloc_aware: pages exceed capacity");
  std::vector<std::pair<Picos, std::uint64_t>> ranked(physical);
  for (std::uint64_t p = 0; p < physical; ++p) ranked[p] = {page_latency_cost(map, profile, p, page_bytes), p};
  std::sort(ranked.begin(), ranked.end());
  PageMap m;
  m.page_bytes = page_bytes;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (!m.pages.emplace(order[i], ranked[i].second).second) throw ValidationError("page_alloc_aware: duplicate page key");
  return m;
}

double weighted_speedup(std::span<const double> shared, std::span<const double> alone) {
  if (shared.size() != alone.size()) throw ValidationError("weighted_speedup: IPC lists differ in length");
  double ws = 0;
  for (std::size_t i = 0; i < shared.size(); ++i) {
    if (alone[i] <= 0) throw ValidationError("weighted_speedup: alone IPC must be positive");
    ws += shared[i] / alone[i];
  }
  return ws;
}

namespace {

struct CoreState {
  std::size_t pos = 0;
  Cycle next = 0;  // cycle the current record's access (or end of gap) happens
  bool waiting = false;
  bool finished = false;
  Cycle issued_at = 0;
};

/// Simulates the listed cores (trace index = core id) together.
SimReport simulate(std::span<const Trace> traces, const std::vector<std::uint32_t>& active, const SimConfig& cfg,
                   const PageMap& pages) {
  const auto& map = cfg.map;
  if (!cfg.devices.empty() && cfg.devices.size() != map.channels)
    throw ValidationError("sim: give either no devices or one per channel");
  std::vector<Controller> ctrls;
  ctrls.reserve(map.channels);
  for (std::uint32_t ch = 0; ch < map.channels; ++ch)
    ctrls.emplace_back(cfg.controller, map.geometry, cfg.devices.empty() ? nullptr : cfg.devices[ch]);

  const std::size_t n = traces.size();
  std::vector<CoreState> st(n);
  SimReport rep;
  rep.cores.resize(n);
  std::vector<std::uint64_t> tags(cfg.cache_lines, std::numeric_limits<std::uint64_t>::max());
  std::vector<char> is_active(n, 0);
  std::size_t remaining = 0;
  for (auto c : active) {
    is_active[c] = 1;
    if (traces[c].empty()) {
      st[c].finished = true;
    } else {
      st[c].next = static_cast<Cycle>(traces[c][0].gap);
      ++remaining;
    }
  }

  auto advance = [&](std::uint32_t c, Cycle resume) {
    auto& s = st[c];
    ++s.pos;
    if (s.pos == traces[c].size()) {
      s.finished = true;
      rep.cores[c].cycles = resume;
      --remaining;
    } else {
      s.next = resume + static_cast<Cycle>(traces[c][s.pos].gap);
    }
  };

  std::uint64_t next_id = 0;
  std::vector<Completion> done;
  Cycle now = 0;
  while (true) {
    done.clear();
    for (auto& ctl : ctrls) ctl.retire(now, done);
    std::sort(done.begin(), done.end(), [](const Completion& a, const Completion& b) { return a.id < b.id; });
    for (const auto& d : done) {
      if (d.kind != ReqKind::Read) continue;
      rep.cores[d.core].read_latency += d.done - d.arrival;
      st[d.core].waiting = false;
      advance(d.core, d.done);
    }

    for (std::uint32_t c = 0; c < n; ++c) {
      auto& s = st[c];
      if (!is_active[c] || s.finished || s.waiting || s.next > now) continue;
      const auto& rec = traces[c][s.pos];
      auto& cr = rep.cores[c];
      if (!rec.access) {
        advance(c, now);
        continue;
      }
      const std::uint64_t paddr = pages.translate(c, rec.address);
      if (!tags.empty()) {
        const std::uint64_t line = paddr / map.geometry.line_bytes;
        auto& tag = tags[line % tags.size()];
        if (rec.kind == ReqKind::Read && tag == line) {
          ++cr.cache_hits;
          advance(c, now + 1);
          continue;
        }
        tag = line;
      }
      const auto where = map.decode(paddr);
      MemRequest req{next_id, rec.kind, paddr, now, c};
      if (!ctrls[where.channel].enqueue(req, where)) {
        s.next = now + 1;  // queue full: retry
        continue;
      }
      ++next_id;
      if (rec.kind == ReqKind::Read) {
        ++cr.reads;
        s.waiting = true;
      } else {
        ++cr.writes;
        advance(c, now + 1);
      }
    }

    for (auto& ctl : ctrls) ctl.schedule(now);

    bool busy = false;
    Cycle next = std::numeric_limits<Cycle>::max();
    for (const auto& ctl : ctrls) {
      busy |= !ctl.idle();
      next = std::min(next, ctl.next_event_cycle(now));
    }
    if (remaining == 0 && !busy) break;
    for (std::uint32_t c = 0; c < n; ++c)
      if (is_active[c] && !st[c].finished && !st[c].waiting) next = std::min(next, std::max(st[c].next, now + 1));
    if (next == std::numeric_limits<Cycle>::max()) throw IntegrityError("sim: no pending event but work remains");
    now = next;
  }
  rep.total_cycles = now;

  std::uint64_t findings = 0;
  for (const auto& ctl : ctrls) {
    const auto& s = ctl.stats();
    rep.commands.reads += s.reads;
    rep.commands.writes += s.writes;
    rep.commands.acts += s.acts;
    rep.commands.pres += s.pres;
    rep.commands.row_hits += s.row_hits;
    rep.commands.flips += s.flips;
    if (cfg.controller.keep_log) findings += audit(ctl.engine().log()).size();
  }
  if (cfg.controller.keep_log) rep.audit_findings = findings;
  const auto cols = rep.commands.reads + rep.commands.writes;
  rep.row_hit_rate = cols ? static_cast<double>(rep.commands.row_hits) / static_cast<double>(cols) : 0.0;
  for (auto c : active) {
    auto& cr = rep.cores[c];
    for (const auto& r : traces[c]) cr.instructions += r.gap + (r.access ? 1 : 0);
    cr.ipc = cr.cycles ? static_cast<double>(cr.instructions) / static_cast<double>(cr.cycles) : 0.0;
  }
  return rep;
}

}  // namespace

SimReport run_sim(std::span<const Trace> traces, const SimConfig& config, const PageMap& pages,
                  const SimOptions& options) {
  config.controller.validate();
  config.map.geometry.validate();
  if (config.map.channels == 0) throw ValidationError("sim: need at least one channel");
  std::vector<std::uint32_t> all(traces.size());
  for (std::uint32_t c = 0; c < all.size(); ++c) all[c] = c;
  SimReport rep = simulate(traces, all, config, pages);

  std::vector<double> alone;
  if (options.alone_ipcs) {
    alone = *options.alone_ipcs;
    if (alone.size() != traces.size()) throw ValidationError("sim: alone IPC count differs from core count");
  } else if (options.weighted_speedup) {
    SimConfig solo = config;
    for (std::uint32_t c = 0; c < traces.size(); ++c) alone.push_back(simulate(traces, {c}, solo, pages).cores[c].ipc);
  }
  if (!alone.empty()) {
    std::vector<double> shared;
    for (std::size_t c = 0; c < traces.size(); ++c) {
      rep.cores[c].alone_ipc = alone[c];
      shared.push_back(rep.cores[c].ipc);
    }
    rep.ws = weighted_speedup(shared, alone);
  }
  return rep;
}

std::string SimReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "flydram-sim/1";
  j["total_cycles"] = total_cycles;
  j["ws"] = ws ? nlohmann::ordered_json(*ws) : nlohmann::ordered_json(nullptr);
  j["row_hit_rate"] = row_hit_rate;
  j["commands"] = {{"reads", commands.reads},   {"writes", commands.writes}, {"acts", commands.acts},
                   {"pres", commands.pres},     {"row_hits", commands.row_hits}, {"flips", commands.flips}};
  if (audit_findings) j["audit_findings"] = *audit_findings;
  j["cores"] = nlohmann::ordered_json::array();
  for (const auto& c : cores) {
    nlohmann::ordered_json e;
    e["instructions"] = c.instructions;
    e["cycles"] = c.cycles;
    e["ipc"] = c.ipc;
    e["alone_ipc"] = c.alone_ipc;
    e["reads"] = c.reads;
    e["writes"] = c.writes;
    e["cache_hits"] = c.cache_hits;
    e["read_latency_cycles"] = c.read_latency;
    j["cores"].push_back(e);
  }
  return j.dump(2) + "\n";
}

void SimReport::write_csv(std::ostream& out) const {
  out << "core,instructions,cycles,ipc,alone_ipc,reads,writes,avg_read_latency\n";
  for (std::size_t i = 0; i < cores.size(); ++i) {
    const auto& c = cores[i];
    double avg = c.reads ? static_cast<double>(c.read_latency) / static_cast<double>(c.reads) : 0.0;
    out << fmt::format("{},{},{},{},{},{},{},{}\n", i, c.instructions, c.cycles, c.ipc, c.alone_ipc, c.reads, c.writes,
                       avg);
  }
}

}  // namespace flydram
