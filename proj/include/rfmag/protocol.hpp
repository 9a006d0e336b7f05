#pragma once

// Pulse sequences and Monte-Carlo shot generation.
//
// Every protocol is a list of SequenceSteps compiled once into channels over
// the atomic modes; a shot replays the list, sampling each probe's S2c/S2s
// outcome and conditioning the atoms on it.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rfmag/lockin.hpp"
#include "rfmag/magnetometer.hpp"
#include "rfmag/stats.hpp"

namespace rfmag {

enum class ProtocolKind { pn, entangled, unentangled, calibration };
enum class ReadoutPath { mode, time_domain };

/// Everything a shot needs. probe2 is the readout pulse of every protocol;
/// probe1 is the entangling pulse (entangled) or the mapping pulse
/// (calibration).
struct ExperimentConfig {
  PhysicalConstants constants;
  EnsembleParams ensemble;
  ProbeParams probe1;
  ProbeParams probe2;
  RFPulse rf;
  double b_dc = 9.2e-5;        // T
  double delay = 0.5e-3;       // s, between probe1 and the RF window
  double pump_duration = 6e-3; // s
  ReadoutPath readout_path = ReadoutPath::mode;
  double sample_rate_factor = 16.0;  // fs = factor * Omega / 2 pi

  CellConfig cells() const { return ensemble.n_cells == 2 ? CellConfig::two : CellConfig::one; }
  double omega() const;
  double sample_rate() const;
  void validate() const;
};

enum class StepKind { pump, probe, rf, delay, spin_flip };

struct SequenceStep {
  StepKind kind = StepKind::pump;
  std::string id;
  ProbeParams probe;  // probe steps
  RFPulse rf;         // rf steps
  double duration = 0.0;  // delay steps
};

std::vector<SequenceStep> build_sequence(const ExperimentConfig& config, ProtocolKind kind);

struct PulseOutcome {
  std::string pulse_id;
  double s2c = 0.0;
  double s2s = 0.0;
};

struct ConditionedSummary {
  std::string pulse_id;
  double var_z = 0.0;  // atom.z_plus (two cells) or atom.z
  double var_y = 0.0;
};

struct ShotRecord {
  std::vector<PulseOutcome> outcomes;
  std::vector<ConditionedSummary> conditioned;

  const PulseOutcome& outcome(const std::string& pulse_id) const;
};

/// Outcome distribution of one probe given all earlier outcomes.
struct PulsePrediction {
  std::string pulse_id;
  double mean_c = 0.0;
  double mean_s = 0.0;
  double var_c = 0.0;
  double var_s = 0.0;
  double cov_cs = 0.0;
  /// Atomic variances after conditioning on this pulse.
  double atom_var_z = 0.0;
  double atom_var_y = 0.0;
};

class CompiledProtocol {
 public:
  CompiledProtocol(const ExperimentConfig& config, ProtocolKind kind);
  CompiledProtocol(const ExperimentConfig& config, std::vector<SequenceStep> steps);

  ShotRecord run(Rng& rng) const;

  /// Deterministic propagation with each outcome at its conditional mean.
  /// Covariances do not depend on outcomes, so the variances are exact for
  /// every shot; the means are those of a shot with average outcomes.
  std::vector<PulsePrediction> predict() const;

  const std::vector<SequenceStep>& steps() const { return steps_; }
  const ExperimentConfig& config() const { return config_; }

 private:
  struct Step {
    SequenceStep spec;
    AffineChannel channel;  // over atomic modes (probe: atoms -> atoms + light)
    std::optional<LockinReference> lockin;
    double photon_rate = 0.0;
  };

  template <typename Measure>
  QuadratureState replay(Measure&& measure) const;

  ExperimentConfig config_;
  std::vector<SequenceStep> steps_;
  std::vector<Step> compiled_;
};

/// Exchanges plus and minus sectors: sign flip of cell 2's transverse spin.
QuadratureState spin_flip(const QuadratureState& state);

ShotRecord run_pn_protocol(const ExperimentConfig& config, Rng& rng);
ShotRecord run_entanglement_protocol(const ExperimentConfig& config, Rng& rng);

struct ShotEnsemble {
  std::vector<ShotRecord> records;
  std::uint64_t master_seed = 0;
  std::uint64_t stream = 0;
  std::string config_hash;

  std::vector<double> values(const std::string& pulse_id, bool cos_quadrature) const;
};

struct QuadratureSummary {
  SampleStats s2c;
  SampleStats s2s;
};

std::map<std::string, QuadratureSummary> summarize(const ShotEnsemble& ensemble);

/// OpenMP shot loop; shot i uses shot_rng(master_seed, i, stream). Results are
/// bit-identical for any worker count and to monte_carlo_serial.
ShotEnsemble monte_carlo(const CompiledProtocol& protocol, std::size_t n_shots,
                         std::uint64_t master_seed, int workers, std::uint64_t stream = 0);

/// Single-threaded reference loop.
ShotEnsemble monte_carlo_serial(const CompiledProtocol& protocol, std::size_t n_shots,
                                std::uint64_t master_seed, std::uint64_t stream = 0);

struct CalibrationResult {
  double kappa_squared = 0.0;  // estimate
  double std_error = 0.0;
  double raw_mean = 0.0;       // mean of probe2 S2s in shot-noise units
  double expected = 0.0;       // model value of the estimator
};

/// Estimator applied to an ensemble produced by the calibration sequence.
CalibrationResult estimate_kappa_squared(const CompiledProtocol& protocol,
                                         const ShotEnsemble& shots);

/// Two-pulse kappa^2 calibration. probe1 carries the S3c displacement,
/// spin flip, probe2 reads <S2s>. Estimator: mean(S2s) / (sqrt(eta) * input),
/// both in shot-noise units.
CalibrationResult run_calibration_protocol(const ExperimentConfig& config, std::size_t n_shots,
                                           std::uint64_t master_seed, int workers = 1);

}  // namespace rfmag
