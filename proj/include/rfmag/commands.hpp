#pragma once

// Subcommands behind the rfmag CLI. Each writes its outputs into
// config.output_dir together with manifest.json and schema.json, and returns
// the paths it wrote.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rfmag/config.hpp"

namespace rfmag {

struct CommandContext {
  int workers = 1;
  std::string command_line;  // recorded in the manifest
};

using OutputFiles = std::vector<std::filesystem::path>;

OutputFiles cmd_simulate(const SimConfig& config, const CommandContext& ctx);
OutputFiles cmd_sweep(const SimConfig& config, const CommandContext& ctx);
OutputFiles cmd_pn_limit(const SimConfig& config, const CommandContext& ctx, std::ostream& out);
OutputFiles cmd_calibrate(const SimConfig& config, const CommandContext& ctx);
OutputFiles cmd_optimize_mode(const SimConfig& config, const CommandContext& ctx);
OutputFiles cmd_spectrum(const SimConfig& config, const CommandContext& ctx);

/// Numbers in CSV/JSON outputs use this shortest round-trip format.
std::string format_number(double value);

extern const char* const kVersion;

}  // namespace rfmag
