#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "flydram/errors.hpp"

namespace {

// Subcommand flags that are shorthands for config keys.
const std::map<std::string, std::vector<std::pair<std::string, std::string>>> kShorthands = {
    {"gen-device", {{"--spec", "spec"}, {"--banks", "banks"}, {"--rows", "rows_per_bank"}, {"--cols", "cols_per_row"}}},
    {"characterize",
     {{"--device", "device"}, {"--spec", "spec"}, {"--test", "test"}, {"--latencies", "latencies"},
      {"--patterns", "patterns"}, {"--rounds", "rounds"}, {"--rows", "rows_per_bank"}, {"--detail", "detail"}}},
    {"analyze", {{"--campaign", "campaign"}, {"--ecc", "ecc"}, {"--heatmap", "heatmap"}, {"--name", "name"}}},
    {"profile",
     {{"--device", "device"}, {"--spec", "spec"}, {"--mode", "mode"}, {"--rows", "rows_per_bank"},
      {"--trcd-candidates", "trcd_candidates"}, {"--trp-candidates", "trp_candidates"}}},
    {"simulate",
     {{"--profile", "profile"}, {"--device", "device"}, {"--cores", "cores"}, {"--length", "length"},
      {"--trace-kind", "trace_kind"}, {"--traces", "traces"}, {"--allocator", "allocator"},
      {"--ws-reference", "ws_reference"}}},
};

const std::map<std::string, std::string> kDescriptions = {
    {"gen-device", "build a synthetic device from a variation preset or spec file"},
    {"characterize", "run a latency test campaign against a device"},
    {"analyze", "BER, heatmaps, beat density and ECC from a campaign"},
    {"profile", "derive a per-(bank,col) latency profile"},
    {"simulate", "run traces through the multi-core memory system"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flydram: DRAM latency-variation laboratory"};
  app.require_subcommand(1);

  std::string config_path, out = ".", seed;
  unsigned jobs = 1;
  std::vector<std::string> sets;
  std::map<std::string, std::map<std::string, std::string>> values;

  for (const auto& [name, flags] : kShorthands) {
    auto* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->fallthrough();
    for (const auto& [flag, key] : flags) sub->add_option(flag, values[name][key], "sets config key '" + key + "'");
  }
  app.add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "global seed (falls back to FLYDRAM_SEED, then 1)");
  app.add_option("--out", out, "output directory");
  app.add_option("--jobs", jobs, "worker threads for characterize")->check(CLI::PositiveNumber);
  app.add_option("--set", sets, "extra key=value override (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    flydram::cli::RunContext ctx;
    ctx.out = out;
    ctx.jobs = jobs;
    if (!config_path.empty()) ctx.config = flydram::KvConfig::load(config_path);
    flydram::KvConfig overrides;
    for (const auto& [key, value] : values[name])
      if (!value.empty()) overrides.set(key, value);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw flydram::ValidationError("--set expects key=value, got '" + kv + "'");
      overrides.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed.empty()) {
      overrides.set("seed", seed);
    } else if (!ctx.config.has("seed") && !overrides.has("seed")) {
      const char* env = std::getenv("FLYDRAM_SEED");
      overrides.set("seed", env && *env ? env : "1");
    }
    ctx.config.merge(overrides);
    std::cout << flydram::cli::run_command(name, ctx) << '\n';
    return 0;
  } catch (const flydram::ValidationError& e) {
    std::cerr << "flydram " << name << ": " << e.what() << '\n';
    return 2;
  } catch (const flydram::IntegrityError& e) {
    std::cerr << "flydram " << name << ": integrity: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "flydram " << name << ": " << e.what() << '\n';
    return 1;
  }
}
