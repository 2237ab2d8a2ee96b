#pragma once

#include <filesystem>
#include <string>

#include "flydram/kvconfig.hpp"

namespace flydram::cli {

/// Everything a subcommand needs: merged config (file plus overrides, seed
/// already resolved), output directory and worker count.
struct RunContext {
  KvConfig config;
  std::filesystem::path out = ".";
  unsigned jobs = 1;
};

/// Each writes its artifacts plus `manifest.cfg` into ctx.out and returns the
/// one-line summary. Re-running with `--config <out>/manifest.cfg` rewrites
/// the same bytes.
std::string cmd_gen_device(RunContext& ctx);
std::string cmd_characterize(RunContext& ctx);
std::string cmd_analyze(RunContext& ctx);
std::string cmd_profile(RunContext& ctx);
std::string cmd_simulate(RunContext& ctx);

/// Dispatch by subcommand name.
std::string run_command(const std::string& name, RunContext& ctx);

}  // namespace flydram::cli
