#include "rfmag/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "rfmag/errors.hpp"

namespace rfmag {

SnrResult snr(std::span<const double> signal, std::span<const double> reference) {
  if (signal.size() < 2 || reference.size() < 2) {
    throw std::invalid_argument("snr needs at least two shots per ensemble");
  }
  const SampleStats s = describe(signal);
  const SampleStats r = describe(reference);
  const double vs = *s.variance;
  const double vr = *r.variance;
  if (!(vs > 0.0)) throw NumericError("snr: signal ensemble has zero variance");

  SnrResult out;
  out.mean_difference = s.mean - r.mean;
  out.signal_std = std::sqrt(vs);
  out.value = std::abs(out.mean_difference) / out.signal_std;
  out.pooled = std::abs(out.mean_difference) / std::sqrt(0.5 * (vs + vr));
  const double ns = static_cast<double>(s.n);
  const double nr = static_cast<double>(r.n);
  const double var_diff = vs / ns + vr / nr;
  out.std_error = std::sqrt(var_diff / vs + out.value * out.value / (2.0 * (ns - 1.0)));
  return out;
}

double sensitivity(double b_rf, double snr_value, double time) {
  if (!(snr_value > 0.0)) throw std::invalid_argument("sensitivity: snr must be > 0");
  if (time < 0.0) throw std::invalid_argument("sensitivity: time must be >= 0");
  return b_rf * std::sqrt(time) / snr_value;
}

SensitivityReport sensitivity_report(const ExperimentConfig& config, double snr_value) {
  SensitivityReport r;
  r.snr = snr_value;
  r.b_min_effective = config.rf.amplitude / snr_value;
  r.sensitivity_tau = sensitivity(config.rf.amplitude, snr_value, config.rf.duration);
  r.cycle_time = config.pump_duration + config.probe2.duration + config.rf.duration;
  r.sensitivity_cycle = sensitivity(config.rf.amplitude, snr_value, r.cycle_time);
  r.bandwidth = config.rf.bandwidth();
  return r;
}

double epr_criterion(double var_y, double var_z, double pn_unit) {
  return (var_y + var_z) / (2.0 * pn_unit);
}

double simplified_total(double atomic_pn_units, double kappa_squared) {
  return 0.5 + kappa_squared * atomic_pn_units;
}

double exact_total(double atomic_pn_units, double kappa_squared, double xi_sq, double eta) {
  const double t2 = 1.0 - xi_sq * kappa_squared;
  return eta * t2 + (1.0 - eta) + eta * kappa_squared * atomic_pn_units;
}

NoiseBudget noise_budget(double total_shot_units, double kappa_squared, double xi_sq, double eta,
                         double tolerance) {
  if (!(kappa_squared > 0.0)) throw std::invalid_argument("noise_budget: kappa^2 must be > 0");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("noise_budget: eta must be in (0, 1]");
  if (total_shot_units < 0.5 - tolerance) {
    std::ostringstream msg;
    msg << "noise_budget: total " << total_shot_units
        << " is below the light noise 0.5; kappa^2 calibration inconsistent";
    throw NumericError(msg.str());
  }
  NoiseBudget b;
  b.total_shot_units = total_shot_units;
  b.kappa_squared_used = kappa_squared;
  b.light_contribution = 0.5;
  b.atomic_pn_units = std::max(0.0, (total_shot_units - 0.5) / kappa_squared);
  b.exact_light_contribution = eta * (1.0 - xi_sq * kappa_squared) + (1.0 - eta);
  b.exact_atomic_pn_units =
      std::max(0.0, (total_shot_units - b.exact_light_contribution) / (eta * kappa_squared));
  return b;
}

AtomicDisplacement displacement_calibration(double mean_s2c, double mean_s2s, double kappa,
                                            double eta, double photon_number, double spin_f,
                                            double n_atoms_per_cell) {
  const double gain = kappa * std::sqrt(eta);
  if (!(gain > 0.0)) throw std::invalid_argument("displacement_calibration: kappa sqrt(eta) = 0");
  if (!(photon_number > 0.0 && spin_f > 0.0 && n_atoms_per_cell > 0.0)) {
    throw std::invalid_argument("displacement_calibration: Phi, F and N_A must be > 0");
  }
  const double scale = std::sqrt(2.0 * spin_f * n_atoms_per_cell / photon_number) / gain;
  AtomicDisplacement d;
  d.j_z = mean_s2c * scale;
  d.j_y = mean_s2s * scale;
  const double pn = std::sqrt(spin_f * n_atoms_per_cell);
  d.z_pn = d.j_z / pn;
  d.y_pn = d.j_y / pn;
  return d;
}

double LinearPredictor::predict(std::span<const double> regressors) const {
  if (regressors.size() + 1 != coefficients.size()) {
    throw std::invalid_argument("LinearPredictor: regressor count mismatch");
  }
  double y = coefficients[0];
  for (std::size_t k = 0; k < regressors.size(); ++k) y += coefficients[k + 1] * regressors[k];
  return y;
}

LinearPredictor fit_linear_predictor(std::span<const double> target,
                                     const std::vector<std::vector<double>>& regressors) {
  const auto n = static_cast<Eigen::Index>(target.size());
  const auto k = static_cast<Eigen::Index>(regressors.size());
  if (n <= k + 1) throw std::invalid_argument("fit_linear_predictor: too few samples");
  Eigen::MatrixXd x(n, k + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    y(i) = target[i];
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    if (static_cast<Eigen::Index>(regressors[j].size()) != n) {
      throw std::invalid_argument("fit_linear_predictor: regressor length mismatch");
    }
    for (Eigen::Index i = 0; i < n; ++i) x(i, j + 1) = regressors[j][i];
  }
  const Eigen::VectorXd c = x.colPivHouseholderQr().solve(y);
  return {std::vector<double>(c.data(), c.data() + c.size())};
}

namespace {

SampleStats residual_stats(const LinearPredictor& p, std::span<const double> target,
                           const std::vector<double>& r1, const std::vector<double>& r2) {
  std::vector<double> res(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double x[2] = {r1[i], r2[i]};
    res[i] = target[i] - p.predict(x);
  }
  return describe(res);
}

}  // namespace

ConditionalNoise conditional_noise(const ShotEnsemble& fit, const ShotEnsemble& eval,
                                   const std::string& first, const std::string& second) {
  const std::vector<std::vector<double>> fit_x = {fit.values(first, true),
                                                  fit.values(first, false)};
  ConditionalNoise out;
  out.predictor_c = fit_linear_predictor(fit.values(second, true), fit_x);
  out.predictor_s = fit_linear_predictor(fit.values(second, false), fit_x);

  const auto e1c = eval.values(first, true);
  const auto e1s = eval.values(first, false);
  const SampleStats c = residual_stats(out.predictor_c, eval.values(second, true), e1c, e1s);
  const SampleStats s = residual_stats(out.predictor_s, eval.values(second, false), e1c, e1s);
  if (!c.variance || !s.variance) throw std::invalid_argument("conditional_noise: need >= 2 shots");
  out.var_c = *c.variance;
  out.var_s = *s.variance;
  out.var_c_stderr = *c.variance_stderr;
  out.var_s_stderr = *s.variance_stderr;
  return out;
}

SnrResult conditional_snr(const ShotEnsemble& signal, const ShotEnsemble& reference,
                          bool cos_quadrature, const std::string& first,
                          const std::string& second) {
  const std::vector<std::vector<double>> fit_x = {reference.values(first, true),
                                                  reference.values(first, false)};
  const LinearPredictor p =
      fit_linear_predictor(reference.values(second, cos_quadrature), fit_x);
  auto residuals = [&](const ShotEnsemble& e) {
    const auto y = e.values(second, cos_quadrature);
    const auto c = e.values(first, true);
    const auto s = e.values(first, false);
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double x[2] = {c[i], s[i]};
      r[i] = y[i] - p.predict(x);
    }
    return r;
  };
  const auto rs = residuals(signal);
  const auto rr = residuals(reference);
  return snr(rs, rr);
}

EntanglementReport entanglement_report(double var_c, double var_s, const ProbeParams& readout,
                                       const EnsembleParams& ensemble) {
  EntanglementReport r;
  r.var_c = var_c;
  r.var_s = var_s;
  const double kappa = coupling_constant(ensemble.gamma_swap, readout.duration, readout.xi_squared);
  r.kappa_squared = kappa * kappa;
  const double inf = std::numeric_limits<double>::infinity();
  r.atomic_z_pn = noise_budget(var_c / kVacuumVariance, r.kappa_squared, readout.xi_squared,
                               readout.eta_detection, inf).exact_atomic_pn_units;
  r.atomic_y_pn = noise_budget(var_s / kVacuumVariance, r.kappa_squared, readout.xi_squared,
                               readout.eta_detection, inf).exact_atomic_pn_units;
  r.sigma_epr = 0.5 * (r.atomic_z_pn + r.atomic_y_pn);
  r.reduction_db = 10.0 * std::log10(r.sigma_epr);
  return r;
}

EntanglementReport predicted_entanglement(const CompiledProtocol& protocol,
                                          const std::string& readout_id) {
  for (const auto& p : protocol.predict()) {
    if (p.pulse_id != readout_id) continue;
    for (const auto& s : protocol.steps()) {
      if (s.id == readout_id) {
        return entanglement_report(p.var_c, p.var_s, s.probe, protocol.config().ensemble);
      }
    }
  }
  throw std::invalid_argument("no probe with id '" + readout_id + "'");
}

LifetimeFit fit_exponential_lifetime(std::span<const double> delays,
                                     std::span<const double> variances,
                                     std::span<const double> weights) {
  const std::size_t n = delays.size();
  if (variances.size() != n) throw std::invalid_argument("fit_exponential_lifetime: size mismatch");
  if (!weights.empty() && weights.size() != n) {
    throw std::invalid_argument("fit_exponential_lifetime: weight count mismatch");
  }
  std::vector<double> sorted(delays.begin(), delays.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 3) throw std::invalid_argument("fit_exponential_lifetime: need >= 3 distinct delays");

  const auto [vmin, vmax] = std::minmax_element(variances.begin(), variances.end());
  const double scale = std::max(std::abs(*vmax), std::abs(*vmin));
  if (!(*vmax - *vmin > 1e-12 * std::max(scale, 1e-300))) {
    throw NumericError("fit_exponential_lifetime: degenerate (constant) data");
  }

  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  // For fixed T the model is linear in (floor, amplitude).
  auto solve = [&](double t_fit, double& floor, double& amplitude) {
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = -std::exp(-delays[i] / t_fit);
      s11 += w(i);
      s12 += w(i) * e;
      s22 += w(i) * e * e;
      b1 += w(i) * variances[i];
      b2 += w(i) * e * variances[i];
    }
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-300) {
      floor = b1 / s11;
      amplitude = 0.0;
    } else {
      floor = (s22 * b1 - s12 * b2) / det;
      amplitude = (s11 * b2 - s12 * b1) / det;
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = variances[i] - (floor - amplitude * std::exp(-delays[i] / t_fit));
      rss += w(i) * r * r;
    }
    return rss;
  };

  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sorted.size(); ++i) min_gap = std::min(min_gap, sorted[i] - sorted[i - 1]);
  const double span_t = sorted.back() - sorted.front();
  const double lo = std::log(min_gap * 1e-2);
  const double hi = std::log(span_t * 1e2);

  auto objective = [&](double log_t) {
    double f, a;
    return solve(std::exp(log_t), f, a);
  };
  constexpr int kGrid = 400;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    const double v = objective(lo + (hi - lo) * i / kGrid);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == 0 || best == kGrid) {
    throw NumericError("fit_exponential_lifetime: no interior minimum (fit did not converge)");
  }
  const double a = lo + (hi - lo) * (best - 1) / kGrid;
  const double b = lo + (hi - lo) * (best + 1) / kGrid;
  std::uintmax_t iters = 200;
  const auto [log_t, rss] = boost::math::tools::brent_find_minima(objective, a, b, 52, iters);
  if (iters >= 200) throw NumericError("fit_exponential_lifetime: Brent search did not converge");

  LifetimeFit fit;
  fit.t_fit = std::exp(log_t);
  solve(fit.t_fit, fit.floor, fit.amplitude);
  fit.residual_norm = std::sqrt(rss);
  return fit;
}

namespace {

const PulsePrediction& find_prediction(const std::vector<PulsePrediction>& p, const std::string& id) {
  for (const auto& x : p) {
    if (x.pulse_id == id) return x;
  }
  throw std::invalid_argument("no probe with id '" + id + "'");
}

ExperimentConfig without_rf(ExperimentConfig c) {
  c.rf.amplitude = 0.0;
  return c;
}

}  // namespace

double predicted_snr(const ExperimentConfig& config, ProtocolKind kind,
                     const std::string& readout_id) {
  const auto sig = CompiledProtocol(config, kind).predict();
  const auto ref = CompiledProtocol(without_rf(config), kind).predict();
  const PulsePrediction& p = find_prediction(sig, readout_id);
  const PulsePrediction& p0 = find_prediction(ref, readout_id);
  const double dc = p.mean_c - p0.mean_c;
  const double ds = p.mean_s - p0.mean_s;
  const double d = std::hypot(dc, ds);
  if (d == 0.0) return 0.0;
  const double uc = dc / d, us = ds / d;
  const double var = uc * uc * p.var_c + 2.0 * uc * us * p.cov_cs + us * us * p.var_s;
  return d / std::sqrt(var);
}

SnrResult monte_carlo_snr(const ExperimentConfig& config, ProtocolKind kind,
                          const std::string& readout_id, std::size_t n_shots,
                          std::uint64_t master_seed, int workers) {
  const CompiledProtocol sig(config, kind);
  const CompiledProtocol ref(without_rf(config), kind);
  const PulsePrediction& p = find_prediction(sig.predict(), readout_id);
  const PulsePrediction& p0 = find_prediction(ref.predict(), readout_id);
  const bool use_cos =
      config.rf.phase == 0.0 || std::abs(p.mean_c - p0.mean_c) >= std::abs(p.mean_s - p0.mean_s);
  const ShotEnsemble es = monte_carlo(sig, n_shots, master_seed, workers, 0);
  const ShotEnsemble er = monte_carlo(ref, n_shots, master_seed, workers, 1);
  const auto vs = es.values(readout_id, use_cos);
  const auto vr = er.values(readout_id, use_cos);
  return snr(vs, vr);
}

std::size_t argmax_smallest_gamma(const std::vector<ModeCurvePoint>& curve) {
  if (curve.empty()) throw std::invalid_argument("argmax over an empty curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& c = curve[i];
    const auto& b = curve[best];
    if (c.snr > b.snr || (c.snr == b.snr && c.gamma < b.gamma)) best = i;
  }
  return best;
}

ModeOptimization optimize_mode_gamma(const ExperimentConfig& config,
                                     std::span<const double> gamma_grid, std::size_t n_shots,
                                     std::uint64_t master_seed, int workers) {
  if (gamma_grid.empty()) throw ConfigError("optimize_mode_gamma: empty gamma grid");
  ModeOptimization out;
  for (double g : gamma_grid) {
    ExperimentConfig c = config;
    c.probe2.mode_gamma = g;
    ModeCurvePoint pt{g, 0.0, 0.0};
    if (n_shots == 0) {
      pt.snr = predicted_snr(c, ProtocolKind::pn, "readout");
    } else {
      const SnrResult r = monte_carlo_snr(c, ProtocolKind::pn, "readout", n_shots, master_seed, workers);
      pt.snr = r.value;
      pt.std_error = r.std_error;
    }
    out.curve.push_back(pt);
  }
  const std::size_t best = argmax_smallest_gamma(out.curve);
  out.gamma_opt = out.curve[best].gamma;
  out.snr_opt = out.curve[best].snr;
  return out;
}

}  // namespace rfmag
