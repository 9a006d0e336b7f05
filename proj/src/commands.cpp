#include "rfmag/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "rfmag/errors.hpp"
#include "rfmag/estimation.hpp"

#ifndef RFMAG_VERSION
#define RFMAG_VERSION "0.0.0"
#endif

namespace rfmag {

const char* const kVersion = RFMAG_VERSION;

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

namespace {

std::string timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects outputs of one command and finishes with manifest and schema.
class Run {
 public:
  Run(const SimConfig& config, const CommandContext& ctx, std::string command)
      : config_(config), ctx_(ctx), command_(std::move(command)), started_(timestamp()) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + config.output_dir.string() + "': " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = config_.output_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    files_.push_back(p);
    return out;
  }

  void write_json(const std::string& name, const json& j) {
    auto out = open(name);
    out << j.dump(2) << "\n";
    check(out, name);
  }

  void check(std::ostream& out, const std::string& name) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + name + "'");
  }

  void schema(const std::string& file, json columns) { schema_[file] = std::move(columns); }

  json header() const {
    return {{"config_hash", config_hash(config_)},
            {"master_seed", config_.master_seed},
            {"n_shots", config_.n_shots},
            {"protocol", to_string(config_.protocol)},
            {"version", kVersion}};
  }

  OutputFiles finish() {
    if (!schema_.empty()) write_json("schema.json", schema_);
    json outputs = json::array();
    for (const auto& f : files_) outputs.push_back(f.filename().string());
    outputs.push_back("manifest.json");
    json m = header();
    m["artifact"] = "rfmag";
    m["command"] = command_;
    m["command_line"] = ctx_.command_line;
    m["started_at"] = started_;
    m["finished_at"] = timestamp();
    m["outputs"] = outputs;
    m["config"] = json::parse(canonical_json(config_));
    write_json("manifest.json", m);
    return files_;
  }

 private:
  const SimConfig& config_;
  const CommandContext& ctx_;
  std::string command_;
  std::string started_;
  OutputFiles files_;
  json schema_ = json::object();
};

json stats_json(const SampleStats& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"n", s.n},
          {"mean", s.mean},
          {"mean_stderr", opt(s.mean_stderr)},
          {"variance", opt(s.variance)},
          {"variance_stderr", opt(s.variance_stderr)}};
}

json units_json() {
  return {{"S2c", "Stokes quadrature normalized to sqrt(photon number); vacuum variance 0.5"},
          {"S2s", "Stokes quadrature normalized to sqrt(photon number); vacuum variance 0.5"},
          {"shot_noise_units", "variance / 0.5"},
          {"pn_units", "atomic variance / projection-noise variance"},
          {"field", "T"},
          {"time", "s"},
          {"sensitivity", "T/sqrt(Hz)"},
          {"bandwidth", "Hz"},
          {"rate", "1/s"}};
}

const json kShotColumns = json::array({
    {{"name", "shot_id"}, {"type", "integer"}, {"unit", ""}},
    {{"name", "pulse_id"}, {"type", "string"}, {"unit", ""}},
    {{"name", "S2c"}, {"type", "real"}, {"unit", "vacuum variance 0.5"}},
    {{"name", "S2s"}, {"type", "real"}, {"unit", "vacuum variance 0.5"}},
});

void write_shots(Run& run, const std::string& name, const ShotEnsemble& e) {
  auto out = run.open(name);
  out << "shot_id,pulse_id,S2c,S2s\n";
  for (std::size_t i = 0; i < e.records.size(); ++i) {
    for (const auto& o : e.records[i].outcomes) {
      out << i << ',' << o.pulse_id << ',' << format_number(o.s2c) << ',' << format_number(o.s2s)
          << '\n';
    }
  }
  run.check(out, name);
  run.schema(name, kShotColumns);
}

json curve_columns(const std::string& x_name, const std::string& x_unit, const std::string& value,
                   const std::string& value_unit) {
  return json::array({{{"name", "x"}, {"quantity", x_name}, {"unit", x_unit}},
                      {{"name", "value"}, {"quantity", value}, {"unit", value_unit}},
                      {{"name", "stderr"}, {"quantity", "standard error of value"}, {"unit", value_unit}}});
}

struct CurvePoint {
  double x, value, std_error;
};

void write_curve(Run& run, const std::string& name, const std::vector<CurvePoint>& pts,
                 json columns) {
  auto out = run.open(name);
  out << "x,value,stderr\n";
  for (const auto& p : pts) {
    out << format_number(p.x) << ',' << format_number(p.value) << ',' << format_number(p.std_error)
        << '\n';
  }
  run.check(out, name);
  run.schema(name, std::move(columns));
}

std::string readout_id(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::pn: return "readout";
    case ProtocolKind::calibration: return "calibration2";
    default: return "probe2";
  }
}

ExperimentConfig reference_of(ExperimentConfig c) {
  c.rf.amplitude = 0.0;
  return c;
}

double kappa_squared_of(const ExperimentConfig& c) {
  const double k = coupling_constant(c.ensemble.gamma_swap, c.probe2.duration, c.probe2.xi_squared);
  return k * k;
}

// One figure-of-merit evaluation for sweeps and summaries.
struct Metrics {
  double noise_pn = 0.0, noise_pn_stderr = 0.0;
  double snr = 0.0, snr_stderr = 0.0;
  double var_c = 0.0, var_s = 0.0;
};

Metrics analytic_metrics(const ExperimentConfig& c, ProtocolKind kind) {
  const std::string id = readout_id(kind);
  const CompiledProtocol ref(reference_of(c), kind);
  const EntanglementReport rep = predicted_entanglement(ref, id);
  Metrics m;
  m.noise_pn = rep.sigma_epr;
  m.var_c = rep.var_c;
  m.var_s = rep.var_s;
  m.snr = predicted_snr(c, kind, id);
  return m;
}

Metrics mc_metrics(const ExperimentConfig& c, ProtocolKind kind, std::size_t n, std::uint64_t seed,
                   int workers) {
  const std::string id = readout_id(kind);
  const ShotEnsemble sig_store = monte_carlo(CompiledProtocol(c, kind), n, seed, workers, 0);
  const ShotEnsemble ref_store = monte_carlo(CompiledProtocol(reference_of(c), kind), n, seed, workers, 1);

  Metrics m;
  const bool use_cos = std::cos(c.rf.phase) * std::cos(c.rf.phase) >= 0.5;
  SnrResult s;
  double vc, vs, se_c, se_s;
  if (kind == ProtocolKind::entangled) {
    s = conditional_snr(sig_store, ref_store, use_cos, "probe1", id);
    const ConditionalNoise cn = conditional_noise(ref_store, ref_store, "probe1", id);
    vc = cn.var_c; vs = cn.var_s; se_c = cn.var_c_stderr; se_s = cn.var_s_stderr;
  } else {
    s = snr(sig_store.values(id, use_cos), ref_store.values(id, use_cos));
    const SampleStats a = describe(ref_store.values(id, true));
    const SampleStats b = describe(ref_store.values(id, false));
    vc = *a.variance; vs = *b.variance; se_c = *a.variance_stderr; se_s = *b.variance_stderr;
  }
  const EntanglementReport rep = entanglement_report(vc, vs, c.probe2, c.ensemble);
  const double gain = c.probe2.eta_detection * rep.kappa_squared * kVacuumVariance;
  m.noise_pn = rep.sigma_epr;
  m.noise_pn_stderr = 0.5 * std::hypot(se_c, se_s) / gain;
  m.var_c = vc;
  m.var_s = vs;
  m.snr = s.value;
  m.snr_stderr = s.std_error;
  return m;
}

json prediction_json(const CompiledProtocol& p) {
  json out = json::object();
  for (const auto& x : p.predict()) {
    out[x.pulse_id] = {{"mean_S2c", x.mean_c}, {"mean_S2s", x.mean_s}, {"var_S2c", x.var_c},
                       {"var_S2s", x.var_s}, {"cov", x.cov_cs}, {"atom_var_z", x.atom_var_z},
                       {"atom_var_y", x.atom_var_y}};
  }
  return out;
}

json sensitivity_json(const SensitivityReport& r) {
  return {{"snr", r.snr}, {"b_min_effective", r.b_min_effective},
          {"sensitivity_tau", r.sensitivity_tau}, {"sensitivity_cycle", r.sensitivity_cycle},
          {"cycle_time", r.cycle_time}, {"bandwidth", r.bandwidth}};
}

}  // namespace

OutputFiles cmd_simulate(const SimConfig& config, const CommandContext& ctx) {
  Run run(config, ctx, "simulate");
  const ExperimentConfig& c = config.experiment;
  const ProtocolKind kind = config.protocol;
  json summary = run.header();
  summary["units"] = units_json();

  const CompiledProtocol sig(c, kind);
  ShotEnsemble es = monte_carlo(sig, config.n_shots, config.master_seed, ctx.workers, 0);
  es.config_hash = config_hash(config);
  write_shots(run, "shots.csv", es);

  auto pulses_json = [](const ShotEnsemble& e) {
    json j = json::object();
    for (const auto& [id, q] : summarize(e)) j[id] = {{"S2c", stats_json(q.s2c)}, {"S2s", stats_json(q.s2s)}};
    return j;
  };
  summary["pulses"] = pulses_json(es);
  summary["prediction"] = prediction_json(sig);

  if (kind == ProtocolKind::calibration) {
    const CalibrationResult r = estimate_kappa_squared(sig, es);
    summary["calibration"] = {{"kappa_squared", r.kappa_squared}, {"stderr", r.std_error},
                              {"raw_mean_shot_units", r.raw_mean}, {"expected", r.expected},
                              {"kappa_squared_eff", r.kappa_squared * c.probe2.eta_detection}};
  } else {
    const std::string id = readout_id(kind);
    const CompiledProtocol ref(reference_of(c), kind);
    ShotEnsemble er = monte_carlo(ref, config.n_shots, config.master_seed, ctx.workers, 1);
    er.config_hash = es.config_hash;
    write_shots(run, "shots_reference.csv", er);
    summary["reference_pulses"] = pulses_json(er);

    if (config.n_shots >= 3) {
      const bool use_cos = std::cos(c.rf.phase) * std::cos(c.rf.phase) >= 0.5;
      SnrResult s;
      double vc, vs;
      if (kind == ProtocolKind::entangled) {
        s = conditional_snr(es, er, use_cos, "probe1", id);
        const ConditionalNoise cn = conditional_noise(er, er, "probe1", id);
        vc = cn.var_c;
        vs = cn.var_s;
        summary["conditional_variance"] = {{"S2c", vc}, {"S2s", vs},
                                           {"S2c_stderr", cn.var_c_stderr}, {"S2s_stderr", cn.var_s_stderr}};
      } else {
        s = snr(es.values(id, use_cos), er.values(id, use_cos));
        vc = *describe(er.values(id, true)).variance;
        vs = *describe(er.values(id, false)).variance;
      }
      summary["snr"] = {{"value", s.value}, {"stderr", s.std_error}, {"pooled", s.pooled},
                        {"mean_difference", s.mean_difference}, {"signal_std", s.signal_std},
                        {"quadrature", use_cos ? "S2c" : "S2s"}};
      if (s.value > 0.0) summary["sensitivity"] = sensitivity_json(sensitivity_report(c, s.value));

      const double k2 = kappa_squared_of(c);
      const NoiseBudget b = noise_budget(vc / kVacuumVariance, k2, c.probe2.xi_squared,
                                         c.probe2.eta_detection, std::numeric_limits<double>::infinity());
      summary["noise_budget"] = {{"total_shot_units", b.total_shot_units},
                                 {"light_contribution", b.light_contribution},
                                 {"atomic_pn_units", b.atomic_pn_units},
                                 {"kappa_squared_used", b.kappa_squared_used},
                                 {"exact_light_contribution", b.exact_light_contribution},
                                 {"exact_atomic_pn_units", b.exact_atomic_pn_units}};
      const EntanglementReport rep = entanglement_report(vc, vs, c.probe2, c.ensemble);
      summary["sigma_epr"] = rep.sigma_epr;
      summary["noise_pn_units"] = {{"z", rep.atomic_z_pn}, {"y", rep.atomic_y_pn}};
      summary["noise_reduction_db"] = rep.reduction_db;
    }
    summary["predicted_snr"] = predicted_snr(c, kind, id);
    summary["predicted_entanglement"] = predicted_entanglement(ref, id).sigma_epr;
  }
  run.write_json("summary.json", summary);
  return run.finish();
}

OutputFiles cmd_sweep(const SimConfig& config, const CommandContext& ctx) {
  if (!config.sweep) throw ConfigError("sweep command needs a 'sweep' block");
  const SweepSpec& sw = *config.sweep;
  if (sw.values.empty()) throw ConfigError("sweep grid is empty");
  Run run(config, ctx, "sweep");

  std::vector<ProtocolKind> kinds;
  if (config.protocol == ProtocolKind::pn) kinds = {ProtocolKind::pn};
  else if (config.protocol == ProtocolKind::calibration) throw ConfigError("sweep does not support the calibration protocol");
  else kinds = {ProtocolKind::entangled, ProtocolKind::unentangled};

  std::string x_unit = "";
  for (const auto& [name, unit] : std::vector<std::pair<std::string, std::string>>{
           {"delay", "s"}, {"duration", "s"}, {"bandwidth", "Hz"}, {"amplitude", "T"},
           {"gamma", "1/s"}, {"t2_dark", "s"}, {"b_dc", "T"}}) {
    if (sw.variable.find(name) != std::string::npos) x_unit = unit;
  }

  json summary = run.header();
  summary["variable"] = sw.variable;
  summary["method"] = sw.monte_carlo ? "monte_carlo" : "analytic";
  std::map<ProtocolKind, std::vector<Metrics>> results;
  for (ProtocolKind kind : kinds) {
    for (std::size_t i = 0; i < sw.values.size(); ++i) {
      SimConfig point = config;
      set_field(point, sw.variable, sw.values[i]);
      point.protocol = kind;
      point.validate();
      const std::uint64_t seed = config.master_seed + i;
      results[kind].push_back(sw.monte_carlo
                                  ? mc_metrics(point.experiment, kind, config.n_shots, seed, ctx.workers)
                                  : analytic_metrics(point.experiment, kind));
    }
  }

  for (ProtocolKind kind : kinds) {
    const auto& ms = results[kind];
    std::vector<CurvePoint> noise, snr_pts, sens, snr_bw;
    for (std::size_t i = 0; i < ms.size(); ++i) {
      SimConfig point = config;
      set_field(point, sw.variable, sw.values[i]);
      const ExperimentConfig& c = point.experiment;
      const double x = sw.values[i];
      const Metrics& m = ms[i];
      noise.push_back({x, m.noise_pn, m.noise_pn_stderr});
      snr_pts.push_back({x, m.snr, m.snr_stderr});
      const double s = m.snr > 0 ? sensitivity(c.rf.amplitude, m.snr, c.rf.duration) : INFINITY;
      sens.push_back({x, s, m.snr > 0 ? s * m.snr_stderr / m.snr : 0.0});
      snr_bw.push_back({x, m.snr * c.rf.bandwidth(), m.snr_stderr * c.rf.bandwidth()});
    }
    const std::string k = to_string(kind);
    write_curve(run, "sweep_" + k + "_noise.csv", noise,
                curve_columns(sw.variable, x_unit, k + " readout noise after conditioning", "PN units"));
    write_curve(run, "sweep_" + k + "_snr.csv", snr_pts, curve_columns(sw.variable, x_unit, k + " SNR", ""));
    write_curve(run, "sweep_" + k + "_sensitivity.csv", sens,
                curve_columns(sw.variable, x_unit, k + " sensitivity B sqrt(tau)/SNR", "T/sqrt(Hz)"));
    write_curve(run, "sweep_" + k + "_snr_bandwidth.csv", snr_bw,
                curve_columns(sw.variable, x_unit, k + " SNR times RF bandwidth", "Hz"));
  }

  if (kinds.size() == 2) {
    const auto& e = results[ProtocolKind::entangled];
    const auto& u = results[ProtocolKind::unentangled];
    json ratios = json::array();
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double r = u[i].snr > 0 ? e[i].snr / u[i].snr : NAN;
      ratios.push_back(r);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    summary["improvement_ratio"] = ratios;
    summary["improvement_ratio_spread"] = hi / lo - 1.0;
    if (sw.variable == "delay" && sw.values.size() >= 3) {
      std::vector<double> v;
      for (const auto& m : e) v.push_back(m.noise_pn);
      try {
        const LifetimeFit fit = fit_exponential_lifetime(sw.values, v);
        summary["lifetime_fit"] = {{"t_fit", fit.t_fit}, {"floor", fit.floor},
                                   {"amplitude", fit.amplitude}, {"residual_norm", fit.residual_norm}};
      } catch (const std::exception& ex) {
        summary["lifetime_fit"] = {{"error", ex.what()}};
      }
    }
  }
  run.write_json("sweep.json", summary);
  return run.finish();
}

OutputFiles cmd_pn_limit(const SimConfig& config, const CommandContext& ctx, std::ostream& out) {
  Run run(config, ctx, "pn-limit");
  const ExperimentConfig& c = config.experiment;
  const PnLimit lim = pn_limited_sensitivity(c.ensemble, c.rf.duration, c.constants);
  json j = run.header();
  j["b_min"] = lim.b_min;
  j["sensitivity"] = lim.sensitivity;
  j["tau"] = c.rf.duration;
  j["n_total"] = c.ensemble.n_total();
  j["units"] = {{"b_min", "T"}, {"sensitivity", "T/sqrt(Hz)"}, {"tau", "s"}};
  out << "B_min       = " << format_number(lim.b_min) << " T\n"
      << "sensitivity = " << format_number(lim.sensitivity) << " T/sqrt(Hz)\n";
  run.write_json("pn_limit.json", j);
  return run.finish();
}

OutputFiles cmd_calibrate(const SimConfig& config, const CommandContext& ctx) {
  Run run(config, ctx, "calibrate");
  const ExperimentConfig& c = config.experiment;
  const CompiledProtocol protocol(c, ProtocolKind::calibration);
  const ShotEnsemble shots = monte_carlo(protocol, config.n_shots, config.master_seed, ctx.workers);
  write_shots(run, "shots.csv", shots);
  const CalibrationResult r = estimate_kappa_squared(protocol, shots);
  json j = run.header();
  j["protocol"] = "calibration";
  j["kappa_squared"] = r.kappa_squared;
  j["stderr"] = r.std_error;
  j["raw_mean_shot_units"] = r.raw_mean;
  j["expected"] = r.expected;
  j["kappa_squared_eff"] = r.kappa_squared * c.probe2.eta_detection;
  j["input_s3c_shot_units"] = c.probe1.s3c_displacement;
  run.write_json("calibration.json", j);
  return run.finish();
}

OutputFiles cmd_optimize_mode(const SimConfig& config, const CommandContext& ctx) {
  Run run(config, ctx, "optimize-mode");
  const ExperimentConfig& c = config.experiment;
  const ModeOptimization opt = optimize_mode_gamma(c, config.optimize.gamma_grid,
                                                   config.optimize.n_shots, config.master_seed,
                                                   ctx.workers);
  std::vector<CurvePoint> pts;
  for (const auto& p : opt.curve) pts.push_back({p.gamma, p.snr, p.std_error});
  write_curve(run, "mode_curve.csv", pts, curve_columns("probe2.mode_gamma", "1/s", "PN readout SNR", ""));
  json j = run.header();
  j["protocol"] = "pn";
  j["gamma_opt"] = opt.gamma_opt;
  j["snr_opt"] = opt.snr_opt;
  j["two_gamma_tot"] = 2.0 * c.ensemble.gamma_tot();
  j["method"] = config.optimize.n_shots == 0 ? "analytic" : "monte_carlo";
  j["units"] = {{"gamma_opt", "1/s"}};
  run.write_json("optimize.json", j);
  return run.finish();
}

OutputFiles cmd_spectrum(const SimConfig& config, const CommandContext& ctx) {
  Run run(config, ctx, "spectrum");
  ExperimentConfig c = config.experiment;
  if (!(c.omega() > 0.0)) throw ConfigError("spectrum needs a nonzero Larmor frequency");
  const double fs = c.sample_rate();
  check_nyquist(c.omega(), fs, config.detection_bandwidth.value_or(0.0));
  c.readout_path = ReadoutPath::mode;

  const auto pred = CompiledProtocol(c, ProtocolKind::pn).predict();
  const PulsePrediction& p = pred.back();
  const AtomicSignal signal{p.mean_s, p.mean_c, std::max(p.var_c - kVacuumVariance, 0.0),
                            std::max(p.var_s - kVacuumVariance, 0.0)};
  const ModeFunction mode{c.probe2.mode_gamma, c.probe2.mode_sign, c.probe2.duration};
  const LockinReference ref = LockinReference::make(c.omega(), mode, fs);
  const double rate = c.probe2.photon_number / c.probe2.duration;

  std::vector<SpectrumBin> avg;
  TimeSeries first;
  for (std::size_t k = 0; k < config.spectrum.averages; ++k) {
    Rng rng = shot_rng(config.master_seed, k, 2);
    TimeSeries series = synthesize_photocurrent(signal, ref, rate, rng);
    if (config.detection_bandwidth) {
      series = band_limit(series, c.omega() / (2.0 * std::numbers::pi), *config.detection_bandwidth);
    }
    const auto spec = power_spectrum(series);
    if (k == 0) {
      avg = spec;
      first = std::move(series);
    } else {
      for (std::size_t i = 0; i < avg.size(); ++i) avg[i].power += spec[i].power;
    }
  }
  for (auto& b : avg) b.power /= static_cast<double>(config.spectrum.averages);

  {
    auto out = run.open("spectrum.csv");
    write_csv(out, avg);
    run.check(out, "spectrum.csv");
  }
  {
    auto out = run.open("photocurrent.csv");
    write_csv(out, first);
    run.check(out, "photocurrent.csv");
  }
  run.schema("spectrum.csv", json::array({{{"name", "t_or_f"}, {"quantity", "frequency"}, {"unit", "Hz"}},
                                          {{"name", "value"}, {"quantity", "one-sided periodogram"}, {"unit", "(photocurrent units)^2"}}}));
  run.schema("photocurrent.csv", json::array({{{"name", "t_or_f"}, {"quantity", "time"}, {"unit", "s"}},
                                              {{"name", "value"}, {"quantity", "photocurrent sample"}, {"unit", "sqrt(photons/s)"}}}));

  std::size_t peak = 1;
  for (std::size_t i = 1; i < avg.size(); ++i) {
    if (avg[i].power > avg[peak].power) peak = i;
  }
  std::vector<double> powers;
  for (std::size_t i = 1; i < avg.size(); ++i) powers.push_back(avg[i].power);
  std::nth_element(powers.begin(), powers.begin() + powers.size() / 2, powers.end());
  json j = run.header();
  j["peak_frequency"] = avg[peak].frequency;
  j["peak_power"] = avg[peak].power;
  j["median_power"] = powers[powers.size() / 2];
  j["larmor_frequency_hz"] = c.omega() / (2.0 * std::numbers::pi);
  j["sample_rate"] = fs;
  j["averages"] = config.spectrum.averages;
  j["units"] = {{"peak_frequency", "Hz"}, {"sample_rate", "Hz"}};
  run.write_json("spectrum.json", j);
  return run.finish();
}

}  // namespace rfmag
