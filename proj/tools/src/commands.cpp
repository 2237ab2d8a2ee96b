#include "commands.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "flydram/analytics.hpp"
#include "flydram/charlab.hpp"
#include "flydram/device.hpp"
#include "flydram/errors.hpp"
#include "flydram/profile.hpp"
#include "flydram/rng.hpp"
#include "flydram/sim.hpp"
#include "flydram/trace.hpp"

#ifndef FLYDRAM_VERSION
#define FLYDRAM_VERSION "0.0.0"
#endif

namespace flydram::cli {

namespace {

namespace fs = std::filesystem;

/// Reads keys from the run config and records the value actually used, so
/// the manifest carries defaults too.
class Resolver {
 public:
  Resolver(const KvConfig& in, std::string_view command) : in_(in) {
    if (in_.has("command") && in_.get_string("command") != command)
      throw ValidationError(fmt::format("config is for '{}', not '{}'", in_.get_string("command"), command));
    out_.set("command", std::string(command));
  }

  std::string str(std::string_view key, std::string_view fallback) {
    auto v = in_.get_string(key, fallback);
    out_.set(key, v);
    return v;
  }
  std::optional<std::string> opt(std::string_view key) {
    if (!in_.has(key)) return std::nullopt;
    auto v = in_.get_string(key);
    out_.set(key, v);
    return v;
  }
  std::int64_t integer(std::string_view key, std::int64_t fallback) {
    auto v = in_.get_int(key, fallback);
    out_.set(key, std::to_string(v));
    return v;
  }
  std::uint32_t count(std::string_view key, std::uint32_t fallback, std::uint32_t min = 1) {
    auto v = integer(key, fallback);
    if (v < min || v > 0xffffffffLL) throw ValidationError(fmt::format("{} must be >= {}", key, min));
    return static_cast<std::uint32_t>(v);
  }
  std::uint64_t u64(std::string_view key, std::uint64_t fallback) {
    auto v = in_.get_u64(key, fallback);
    out_.set(key, std::to_string(v));
    return v;
  }
  double real(std::string_view key, double fallback) {
    auto v = in_.get_double(key, fallback);
    out_.set(key, fmt::format("{}", v));
    return v;
  }
  Picos latency(std::string_view key, Picos fallback) {
    auto v = in_.get_latency(key, fallback);
    out_.set(key, format_latency(v));
    return v;
  }
  bool flag(std::string_view key, bool fallback) {
    auto v = in_.get_bool(key, fallback);
    out_.set(key, v ? "true" : "false");
    return v;
  }
  std::vector<std::string> list(std::string_view key, std::string_view fallback) {
    auto v = in_.has(key) ? in_.get_list(key) : split_list(fallback);
    std::string joined;
    for (const auto& s : v) joined += (joined.empty() ? "" : ", ") + s;
    out_.set(key, joined);
    return v;
  }
  void record(const KvConfig& cfg) {
    for (const auto& [k, v] : cfg.entries()) out_.set(k, v);
  }
  const KvConfig& input() const { return in_; }

  /// Fails on unknown keys, then writes the manifest.
  void finish(const fs::path& out) {
    in_.reject_unknown();
    std::ofstream f(out / "manifest.cfg", std::ios::binary);
    if (!f) throw ValidationError(fmt::format("cannot write {}", (out / "manifest.cfg").string()));
    f << "# flydram " << FLYDRAM_VERSION << " manifest; re-run with --config this file\n" << out_.render();
  }

 private:
  const KvConfig& in_;
  KvConfig out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError(fmt::format("cannot write {}", path.string()));
  f << text;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError(fmt::format("cannot write {}", path.string()));
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError(fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

Geometry read_geometry(Resolver& r) {
  Geometry g;
  g.banks = r.count("banks", g.banks);
  g.rows_per_bank = r.count("rows_per_bank", g.rows_per_bank);
  g.cols_per_row = r.count("cols_per_row", g.cols_per_row);
  g.validate();
  return g;
}

/// `device = <blob>` or an inline `spec` + geometry built from the seed.
Device obtain_device(Resolver& r, std::uint64_t seed) {
  if (auto path = r.opt("device")) {
    if (r.input().has("spec")) throw ValidationError("give either device or spec, not both");
    std::ifstream f(*path, std::ios::binary);
    if (!f) throw ValidationError(fmt::format("cannot open device {}", *path));
    return Device::load(f);
  }
  auto spec = load_variation_spec(r.str("spec", "A-M1"));
  auto g = read_geometry(r);
  return Device::build(spec, g, seed);
}

void ensure_out(const fs::path& out) { fs::create_directories(out); }

}  // namespace

std::string cmd_gen_device(RunContext& ctx) {
  Resolver r(ctx.config, "gen-device");
  const auto seed = r.u64("seed", 1);
  const auto spec_name = r.str("spec", "A-M1");
  auto spec = load_variation_spec(spec_name);
  auto g = read_geometry(r);
  auto dev = Device::build(spec, g, seed);
  ensure_out(ctx.out);
  std::ostringstream blob;
  dev.save(blob);
  write_text(ctx.out / "device.fdlv", blob.str());
  r.finish(ctx.out);
  return fmt::format("gen-device: {} {}x{}x{} seed {} -> {}", spec.model_name, g.banks, g.rows_per_bank,
                     g.cols_per_row, seed, (ctx.out / "device.fdlv").string());
}

std::string cmd_characterize(RunContext& ctx) {
  Resolver r(ctx.config, "characterize");
  const auto seed = r.u64("seed", 1);
  Device dev = obtain_device(r, seed);
  auto plan = CampaignPlan::from_config(r.input());
  r.record(plan.to_config());
  ensure_out(ctx.out);
  auto result = run_campaign([&] { return dev; }, plan, ctx.jobs);

  std::ostringstream csv, blob, cells;
  result.write_csv(csv);
  result.save(blob);
  cells << "round,latency_ps,pattern,status,tested_lines,tested_bits,error_bits,erroneous_lines\n";
  for (const auto& c : result.cells)
    cells << fmt::format("{},{},0x{:02x},{},{},{},{},{}\n", c.round, c.latency, c.pattern.primary,
                         c.status == CellStatus::Completed ? "completed" : "refused", c.tested_lines, c.tested_bits,
                         c.error_bits, c.erroneous_lines);
  write_text(ctx.out / "campaign.csv", csv.str());
  write_text(ctx.out / "cells.csv", cells.str());
  write_text(ctx.out / "campaign.fdcr", blob.str());
  r.finish(ctx.out);
  return fmt::format("characterize: {} {} cells, {} error bits / {} tested (BER {:.6g})", to_string(plan.kind),
                     result.cells.size(), result.error_bits(), result.tested_bits(), compute_ber(result));
}

std::string cmd_analyze(RunContext& ctx) {
  Resolver r(ctx.config, "analyze");
  r.u64("seed", 1);  // unused; kept so the manifest records it
  const auto path = r.str("campaign", "campaign.fdcr");
  const auto name = r.str("name", "campaign");
  const auto k = r.count("ecc", 1, 0);
  const auto heat = r.str("heatmap", "none");
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError(fmt::format("cannot open campaign {}", path));
  auto result = CampaignResult::load(f);
  ensure_out(ctx.out);
  NamedResult nr{name, &result};
  export_report(std::span<const NamedResult>(&nr, 1), ctx.out);
  if (heat != "none") {
    Granularity gran;
    if (heat == "rowcol") gran = Granularity::RowColPerBank;
    else if (heat == "bankrow") gran = Granularity::BankRow;
    else throw ValidationError(fmt::format("heatmap must be none, rowcol or bankrow, got '{}'", heat));
    std::ostringstream out;
    out << "latency_ps,bank,row,col,probability\n";
    for (auto lat : result.plan.latencies) {
      auto map = spatial_heatmap(result.at_latency(lat), gran);
      for (std::uint32_t b = 0; b < map.banks; ++b)
        for (std::uint32_t row = 0; row < map.rows; ++row)
          for (std::uint32_t c = 0; c < map.cols; ++c) {
            double v = map.values[(std::size_t{b} * map.rows + row) * map.cols + c];
            if (v > 0)
              out << fmt::format("{},{},{},{},{}\n", lat, map.bank_begin + b, map.row_begin + row,
                                 gran == Granularity::BankRow ? std::string{} : std::to_string(map.col_begin + c), v);
          }
    }
    write_text(ctx.out / "heatmap.csv", out.str());
  }
  r.finish(ctx.out);
  auto ecc = result.plan.detail == Detail::Lines ? ecc_correct(result, k) : EccReport{k, 0, 0};
  return fmt::format("analyze: BER {:.6g}, error-free {:.4f} -> {:.4f} with k={} ECC", compute_ber(result),
                     ecc.raw_error_free, ecc.error_free, k);
}

std::string cmd_profile(RunContext& ctx) {
  Resolver r(ctx.config, "profile");
  const auto seed = r.u64("seed", 1);
  const auto mode = r.str("mode", "device");
  LatencyProfile prof;
  if (mode == "device") {
    Device dev = obtain_device(r, seed);
    ProfileOptions o;
    o.seed = seed;
    o.rounds = r.count("rounds", 1);
    o.trcd_candidates.clear();
    o.trp_candidates.clear();
    for (const auto& s : r.list("trcd_candidates", "7.5ns, 10ns, 12.5ns")) o.trcd_candidates.push_back(parse_latency(s));
    for (const auto& s : r.list("trp_candidates", "7.5ns, 10ns, 12.5ns")) o.trp_candidates.push_back(parse_latency(s));
    prof = profile_device(dev, o);
  } else if (mode == "distribution") {
    auto g = read_geometry(r);
    prof = profile_from_distribution(g.banks, g.cols_per_row, r.real("frac_fast_trcd", 1.0),
                                     r.real("frac_fast_trp", 1.0), r.latency("fast", 7500), r.latency("slow", 10000),
                                     seed);
  } else {
    throw ValidationError(fmt::format("mode must be device or distribution, got '{}'", mode));
  }
  ensure_out(ctx.out);
  write_bytes(ctx.out / "profile.fdpf", encode_profile(prof));
  std::ostringstream csv;
  csv << "bank,col,trcd_class,trp_class,trcd_ps,trp_ps\n";
  for (std::uint32_t b = 0; b < prof.banks; ++b)
    for (std::uint32_t c = 0; c < prof.cols; ++c)
      csv << fmt::format("{},{},{},{},{},{}\n", b, c, prof.trcd_class(b, c), prof.trp_class(b, c), prof.trcd_ps(b, c),
                         prof.trp_ps(b, c));
  write_text(ctx.out / "profile.csv", csv.str());
  r.finish(ctx.out);
  return fmt::format("profile: tRCD {:.4f} @{} tRP {:.4f} @{} ({} bytes)", prof.trcd_fraction(prof.trcd_table[0]),
                     format_latency(prof.trcd_table[0]), prof.trp_fraction(prof.trp_table[0]),
                     format_latency(prof.trp_table[0]), encode_profile(prof).size());
}

std::string cmd_simulate(RunContext& ctx) {
  Resolver r(ctx.config, "simulate");
  const auto seed = r.u64("seed", 1);
  std::optional<LatencyProfile> prof;
  const auto profile_path = r.str("profile", "none");
  if (profile_path != "none") {
    auto bytes = read_bytes(profile_path);
    prof = decode_profile(bytes);
  }
  SimConfig cfg;
  cfg.map.geometry = read_geometry(r);
  cfg.map.channels = r.count("channels", 2);
  cfg.controller.queue_depth = r.count("queue_depth", 32);
  cfg.controller.profile = prof ? &*prof : nullptr;
  cfg.controller.keep_log = r.flag("audit", false);
  cfg.cache_lines = r.count("cache_lines", 0, 0);

  std::vector<Device> devices;
  if (auto dpath = r.opt("device")) {
    std::ifstream f(*dpath, std::ios::binary);
    if (!f) throw ValidationError(fmt::format("cannot open device {}", *dpath));
    Device d = Device::load(f);
    if (d.geometry() != cfg.map.geometry) throw ValidationError("device geometry differs from the simulated geometry");
    devices.assign(cfg.map.channels, d);
    for (auto& dev : devices) cfg.devices.push_back(&dev);
  }

  std::vector<Trace> traces;
  if (auto files = r.opt("traces")) {
    for (const auto& p : split_list(*files)) traces.push_back(load_trace(p));
  } else {
    const auto cores = r.count("cores", 4);
    const auto kinds = r.list("trace_kind", "random");
    SynthOptions o;
    o.length = r.u64("length", 10000);
    o.footprint = r.u64("footprint", 64ull << 20);
    o.max_gap = r.count("max_gap", 8, 0);
    o.write_fraction = r.real("write_fraction", 0.2);
    for (std::uint32_t c = 0; c < cores; ++c) {
      o.kind = parse_synth_kind(kinds[c % kinds.size()]);
      o.seed = hash_combine(seed, c);
      traces.push_back(synth_trace(o));
    }
  }

  const auto alloc = r.str("allocator", "random");
  const std::uint64_t page_bytes = 4096;
  PageMap pages;
  if (alloc == "random") {
    pages = page_alloc_random(touched_pages(traces, page_bytes), cfg.map.capacity() / page_bytes, seed, page_bytes);
  } else if (alloc == "aware") {
    pages = page_alloc_aware(hot_pages(traces, page_bytes), cfg.controller.profile, cfg.map, page_bytes);
  } else {
    throw ValidationError(fmt::format("allocator must be random or aware, got '{}'", alloc));
  }

  SimOptions opts;
  const auto reference = r.str("ws_reference", "same");
  if (reference == "baseline") {
    SimConfig base = cfg;
    base.controller.profile = nullptr;
    base.controller.keep_log = false;
    std::vector<double> alone;
    for (std::size_t c = 0; c < traces.size(); ++c) {
      auto solo = run_sim(std::span<const Trace>(&traces[c], 1), base, [&] {
        PageMap m;
        m.page_bytes = pages.page_bytes;
        for (const auto& [k, p] : pages.pages)
          if ((k >> 40) == c) m.pages.emplace(k & ((std::uint64_t{1} << 40) - 1), p);
        return m;
      }());
      alone.push_back(solo.cores[0].ipc);
    }
    opts.alone_ipcs = alone;
  } else if (reference == "same") {
    opts.weighted_speedup = true;
  } else if (reference != "none") {
    throw ValidationError(fmt::format("ws_reference must be same, baseline or none, got '{}'", reference));
  }

  auto rep = run_sim(traces, cfg, pages, opts);
  ensure_out(ctx.out);
  write_text(ctx.out / "sim.json", rep.to_json());
  std::ostringstream csv;
  rep.write_csv(csv);
  write_text(ctx.out / "sim.csv", csv.str());
  r.finish(ctx.out);
  return fmt::format("simulate: {} cores, {} cycles, WS {}, row-hit {:.3f}, flips {}", traces.size(), rep.total_cycles,
                     rep.ws ? fmt::format("{:.4f}", *rep.ws) : std::string("n/a"), rep.row_hit_rate,
                     rep.commands.flips);
}

std::string run_command(const std::string& name, RunContext& ctx) {
  if (name == "gen-device") return cmd_gen_device(ctx);
  if (name == "characterize") return cmd_characterize(ctx);
  if (name == "analyze") return cmd_analyze(ctx);
  if (name == "profile") return cmd_profile(ctx);
  if (name == "simulate") return cmd_simulate(ctx);
  throw ValidationError(fmt::format("unknown command '{}'", name));
}

}  // namespace flydram::cli
