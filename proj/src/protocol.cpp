#include "rfmag/protocol.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rfmag/errors.hpp"

namespace rfmag {
namespace {

const std::string& z_label(CellConfig cells) {
  return cells == CellConfig::two ? modes::z_plus : modes::z_single;
}
const std::string& y_label(CellConfig cells) {
  return cells == CellConfig::two ? modes::y_plus : modes::y_single;
}

AffineChannel dark_channel(const std::vector<std::string>& atoms, const EnsembleParams& ensemble,
                           double dt) {
  const auto n = static_cast<Eigen::Index>(atoms.size());
  AffineChannel ch = AffineChannel::identity(n);
  const double rate = 1.0 / ensemble.t2_dark;
  const double decay = std::exp(-rate * dt);
  const double refill = -std::expm1(-2.0 * rate * dt) * ensemble.floor_variance();
  for (Eigen::Index i = 0; i < n; ++i) {
    ch.matrix(i, i) = decay;
    ch.added_noise(i, i) = refill;
  }
  return ch;
}

AffineChannel flip_channel(const std::vector<std::string>& atoms) {
  const auto n = static_cast<Eigen::Index>(atoms.size());
  auto pos = [&](const std::string& l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (atoms[i] == l) return i;
    }
    throw std::invalid_argument("spin flip needs mode '" + l + "'");
  };
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> target(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) target[i] = i;
  std::swap(target[pos(modes::z_plus)], target[pos(modes::z_minus)]);
  std::swap(target[pos(modes::y_plus)], target[pos(modes::y_minus)]);
  for (Eigen::Index i = 0; i < n; ++i) p(i, target[i]) = 1.0;
  return {p, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n), {}};
}

void require_two_cells(const ExperimentConfig& config, const char* what) {
  if (config.cells() != CellConfig::two) {
    throw ConfigError(std::string(what) + " requires the two-cell configuration");
  }
}

}  // namespace

double ExperimentConfig::omega() const {
  return rf.carrier > 0.0 ? rf.carrier : larmor_frequency(b_dc, constants);
}

double ExperimentConfig::sample_rate() const {
  return sample_rate_factor * omega() / (2.0 * std::numbers::pi);
}

void ExperimentConfig::validate() const {
  constants.validate();
  ensemble.validate();
  probe1.validate();
  probe2.validate();
  rf.validate();
  if (b_dc < 0.0) throw ConfigError("b_dc must be >= 0");
  if (delay < 0.0) throw ConfigError("delay must be >= 0");
  if (pump_duration < 0.0) throw ConfigError("pump_duration must be >= 0");
  if (readout_path == ReadoutPath::time_domain) {
    if (!(omega() > 0.0)) throw ConfigError("time-domain readout needs a nonzero Larmor frequency");
    check_nyquist(omega(), sample_rate());
    if (!(probe1.photon_number > 0.0 && probe2.photon_number > 0.0)) {
      throw ConfigError("time-domain readout needs probe photon_number > 0");
    }
  }
}

std::vector<SequenceStep> build_sequence(const ExperimentConfig& config, ProtocolKind kind) {
  auto pump = [] { return SequenceStep{StepKind::pump, "pump", {}, {}, 0.0}; };
  auto probe = [](std::string id, const ProbeParams& p) {
    return SequenceStep{StepKind::probe, std::move(id), p, {}, 0.0};
  };
  auto delay = [](std::string id, double d) {
    return SequenceStep{StepKind::delay, std::move(id), {}, {}, d};
  };
  SequenceStep rf{StepKind::rf, "rf", {}, config.rf, 0.0};

  switch (kind) {
    case ProtocolKind::pn:
      return {pump(), rf, probe("readout", config.probe2)};
    case ProtocolKind::entangled:
      require_two_cells(config, "the entanglement protocol");
      return {pump(), probe("probe1", config.probe1), delay("delay", config.delay), rf,
              probe("probe2", config.probe2)};
    case ProtocolKind::unentangled:
      return {pump(), delay("probe1_slot", config.probe1.duration), delay("delay", config.delay),
              rf, probe("probe2", config.probe2)};
    case ProtocolKind::calibration: {
      require_two_cells(config, "the calibration protocol");
      if (config.probe1.s3c_displacement == 0.0) {
        throw ConfigError("calibration needs a nonzero probe1.s3c_displacement");
      }
      return {pump(), probe("calibration1", config.probe1),
              SequenceStep{StepKind::spin_flip, "spin_flip", {}, {}, 0.0},
              probe("calibration2", config.probe2)};
    }
  }
  throw std::logic_error("unknown protocol kind");
}

const PulseOutcome& ShotRecord::outcome(const std::string& pulse_id) const {
  for (const auto& o : outcomes) {
    if (o.pulse_id == pulse_id) return o;
  }
  throw std::out_of_range("no outcome for pulse '" + pulse_id + "'");
}

CompiledProtocol::CompiledProtocol(const ExperimentConfig& config, ProtocolKind kind)
    : CompiledProtocol(config, build_sequence(config, kind)) {}

CompiledProtocol::CompiledProtocol(const ExperimentConfig& config, std::vector<SequenceStep> steps)
    : config_(config), steps_(std::move(steps)) {
  config_.validate();
  const CellConfig cells = config_.cells();
  const auto atoms = atomic_modes(cells);
  for (const auto& s : steps_) {
    Step c{s, AffineChannel::identity(static_cast<Eigen::Index>(atoms.size())), std::nullopt, 0.0};
    switch (s.kind) {
      case StepKind::pump:
        break;
      case StepKind::delay:
        if (s.duration < 0.0) throw ConfigError("delay must be >= 0");
        c.channel = dark_channel(atoms, config_.ensemble, s.duration);
        break;
      case StepKind::rf: {
        s.rf.validate();
        c.channel = dark_channel(atoms, config_.ensemble, s.rf.duration);
        const Displacement d = rf_displacement(s.rf, config_.ensemble, config_.constants);
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          if (atoms[i] == z_label(cells)) c.channel.offset(i) = d.z;
          if (atoms[i] == y_label(cells)) c.channel.offset(i) = d.y;
        }
        break;
      }
      case StepKind::spin_flip:
        if (cells != CellConfig::two) throw ConfigError("spin flip requires two cells");
        c.channel = flip_channel(atoms);
        break;
      case StepKind::probe:
        s.probe.validate();
        c.channel = probe_channel(atoms, config_.ensemble, s.probe, cells);
        if (config_.readout_path == ReadoutPath::time_domain) {
          const ModeFunction mode{s.probe.mode_gamma, s.probe.mode_sign, s.probe.duration};
          c.lockin = LockinReference::make(config_.omega(), mode, config_.sample_rate());
          c.photon_rate = s.probe.photon_number / s.probe.duration;
        }
        break;
    }
    compiled_.push_back(std::move(c));
  }
}

template <typename Measure>
QuadratureState CompiledProtocol::replay(Measure&& measure) const {
  const CellConfig cells = config_.cells();
  QuadratureState state = pumped_state(config_.ensemble, cells);
  for (const auto& step : compiled_) {
    switch (step.spec.kind) {
      case StepKind::pump:
        state = pumped_state(config_.ensemble, cells);
        break;
      case StepKind::probe:
        state = measure(step, apply_channel(state, step.channel));
        break;
      default:
        state = apply_channel(state, step.channel);
        break;
    }
  }
  return state;
}

ShotRecord CompiledProtocol::run(Rng& rng) const {
  ShotRecord record;
  const CellConfig cells = config_.cells();
  const std::vector<std::string> unmeasured = {modes::s3c};
  auto measure = [&](const Step& step, QuadratureState state) {
    double oc = 0.0, os = 0.0;
    if (!step.lockin) {
      oc = sample_outcome(state, modes::s2c, rng);
      state = condition_on_outcome(state, modes::s2c, oc);
      os = sample_outcome(state, modes::s2s, rng);
      state = condition_on_outcome(state, modes::s2s, os);
    } else {
      const double vc = state.variance(modes::s2c);
      const double vs = state.variance(modes::s2s);
      if (std::abs(state.covariance(modes::s2c, modes::s2s)) > 1e-9 * (vc + vs)) {
        throw NumericError("time-domain readout needs uncorrelated S2c and S2s");
      }
      const double shot = kVacuumVariance;
      if (vc < shot * (1.0 - 1e-9) || vs < shot * (1.0 - 1e-9)) {
        throw NumericError("time-domain readout needs outcome variance >= shot noise");
      }
      AtomicSignal signal{state.mean_of(modes::s2s), state.mean_of(modes::s2c),
                          std::max(vc - shot, 0.0), std::max(vs - shot, 0.0)};
      const TimeSeries series = synthesize_photocurrent(signal, *step.lockin, step.photon_rate, rng);
      const Quadratures q = lockin_demodulate(series, *step.lockin);
      oc = q.s2c;
      os = q.s2s;
      state = condition_on_outcome(state, modes::s2c, oc);
      state = condition_on_outcome(state, modes::s2s, os);
    }
    state = discard(state, unmeasured);
    record.outcomes.push_back({step.spec.id, oc, os});
    record.conditioned.push_back(
        {step.spec.id, state.variance(z_label(cells)), state.variance(y_label(cells))});
    return state;
  };
  replay(measure);
  return record;
}

std::vector<PulsePrediction> CompiledProtocol::predict() const {
  std::vector<PulsePrediction> out;
  const CellConfig cells = config_.cells();
  const std::vector<std::string> unmeasured = {modes::s3c};
  auto measure = [&](const Step& step, QuadratureState state) {
    PulsePrediction p;
    p.pulse_id = step.spec.id;
    p.mean_c = state.mean_of(modes::s2c);
    p.mean_s = state.mean_of(modes::s2s);
    p.var_c = state.variance(modes::s2c);
    p.var_s = state.variance(modes::s2s);
    p.cov_cs = state.covariance(modes::s2c, modes::s2s);
    state = condition_on_outcome(state, modes::s2c, p.mean_c);
    state = condition_on_outcome(state, modes::s2s, state.mean_of(modes::s2s));
    state = discard(state, unmeasured);
    p.atom_var_z = state.variance(z_label(cells));
    p.atom_var_y = state.variance(y_label(cells));
    out.push_back(p);
    return state;
  };
  replay(measure);
  return out;
}

QuadratureState spin_flip(const QuadratureState& state) {
  QuadratureState out = swap_modes(state, modes::z_plus, modes::z_minus);
  return swap_modes(out, modes::y_plus, modes::y_minus);
}

ShotRecord run_pn_protocol(const ExperimentConfig& config, Rng& rng) {
  return CompiledProtocol(config, ProtocolKind::pn).run(rng);
}

ShotRecord run_entanglement_protocol(const ExperimentConfig& config, Rng& rng) {
  return CompiledProtocol(config, ProtocolKind::entangled).run(rng);
}

std::vector<double> ShotEnsemble::values(const std::string& pulse_id, bool cos_quadrature) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto& o = r.outcome(pulse_id);
    out.push_back(cos_quadrature ? o.s2c : o.s2s);
  }
  return out;
}

std::map<std::string, QuadratureSummary> summarize(const ShotEnsemble& ensemble) {
  std::map<std::string, QuadratureSummary> out;
  if (ensemble.records.empty()) return out;
  for (const auto& o : ensemble.records.front().outcomes) {
    const auto c = ensemble.values(o.pulse_id, true);
    const auto s = ensemble.values(o.pulse_id, false);
    out[o.pulse_id] = {describe(c), describe(s)};
  }
  return out;
}

CalibrationResult estimate_kappa_squared(const CompiledProtocol& protocol,
                                         const ShotEnsemble& shots) {
  const ExperimentConfig& config = protocol.config();
  const auto values = shots.values("calibration2", false);
  const SampleStats stats = describe(values);
  const double shot_unit = std::sqrt(kVacuumVariance);
  const double norm =
      std::sqrt(config.probe2.eta_detection) * config.probe1.s3c_displacement * shot_unit;
  if (norm == 0.0) throw ConfigError("calibration with zero detection efficiency");
  CalibrationResult r;
  r.raw_mean = stats.mean / shot_unit;
  r.kappa_squared = stats.mean / norm;
  r.std_error = stats.mean_stderr.value_or(0.0) / std::abs(norm);
  for (const auto& p : protocol.predict()) {
    if (p.pulse_id == "calibration2") r.expected = p.mean_s / norm;
  }
  return r;
}

CalibrationResult run_calibration_protocol(const ExperimentConfig& config, std::size_t n_shots,
                                           std::uint64_t master_seed, int workers) {
  const CompiledProtocol protocol(config, ProtocolKind::calibration);
  return estimate_kappa_squared(protocol, monte_carlo(protocol, n_shots, master_seed, workers));
}

}  // namespace rfmag
