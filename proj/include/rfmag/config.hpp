#pragma once

// YAML run configuration. Physical values are SI; strings such as
// "0.92 G", "36 fT", "15 ms", "1 kHz" or "0.43 ms^-1" are converted.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rfmag/protocol.hpp"

namespace rfmag {

enum class Dimension { none, field, time, frequency, rate, angular_rate, angle, gyro };

/// Parses "<number> [unit]" for the given dimension. Throws ConfigError.
double parse_quantity(const std::string& text, Dimension dim);

struct SweepSpec {
  std::string variable;          // registered field path or "rf.bandwidth"
  std::vector<double> values;    // SI
  bool monte_carlo = true;       // false: exact mode-level prediction
};

struct OptimizeSpec {
  std::vector<double> gamma_grid;  // 1/s
  std::size_t n_shots = 0;         // 0: analytic path
};

struct SpectrumSpec {
  std::size_t averages = 1;
};

struct SimConfig {
  ExperimentConfig experiment;
  ProtocolKind protocol = ProtocolKind::pn;
  std::size_t n_shots = 10000;
  std::uint64_t master_seed = 1;
  std::optional<double> detection_bandwidth;  // Hz, no default
  std::optional<SweepSpec> sweep;
  OptimizeSpec optimize;
  SpectrumSpec spectrum;
  std::filesystem::path output_dir = "out";

  SimConfig();
  void validate() const;
};

/// Loads and validates a YAML file. Parse errors carry the line number;
/// unknown keys and invalid values name the offending field.
SimConfig load_config(const std::filesystem::path& path);
SimConfig load_config_string(const std::string& yaml_text);

/// Canonical JSON of every resolved field (sorted keys).
std::string canonical_json(const SimConfig& config);

/// 64-bit FNV-1a over canonical_json, as 16 hex digits.
std::string config_hash(const SimConfig& config);

/// Sets a numeric field by path ("delay", "rf.duration", "probe2.mode_gamma",
/// ...). "rf.bandwidth" sets rf.duration = 0.88 / value. Throws ConfigError
/// for unknown paths.
void set_field(SimConfig& config, const std::string& path, double value);
double get_field(const SimConfig& config, const std::string& path);
std::vector<std::string> numeric_field_paths();

std::string to_string(ProtocolKind kind);
ProtocolKind parse_protocol(const std::string& name);

}  // namespace rfmag
