#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rfmag/errors.hpp"
#include "rfmag/estimation.hpp"

using namespace rfmag;

namespace {

std::vector<double> gaussian_draws(std::uint64_t seed, std::size_t n, double mean, double sd) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = shot_rng(seed, i);
    v[i] = mean + sd * standard_normal(rng);
  }
  return v;
}

ExperimentConfig pn_config() {
  ExperimentConfig c;
  c.rf.amplitude = 36e-15;
  c.rf.duration = 15e-3;
  c.probe2.duration = 1.5e-3;
  return c;
}

}  // namespace

TEST(Snr, IdenticalEnsemblesGiveZero) {
  const auto a = gaussian_draws(1, 500, 0.3, 1.0);
  const auto r = snr(a, a);
  EXPECT_DOUBLE_EQ(r.value, 0.0);
  EXPECT_DOUBLE_EQ(r.mean_difference, 0.0);
}

TEST(Snr, UsesDisplacedEnsembleSpread) {
  const auto sig = gaussian_draws(2, 20000, 5.0, 2.0);
  const auto ref = gaussian_draws(3, 20000, 0.0, 1.0);
  const auto r = snr(sig, ref);
  EXPECT_NEAR(r.signal_std, 2.0, 0.05);
  EXPECT_NEAR(r.value, 2.5, 3 * r.std_error);
  EXPECT_NEAR(r.pooled, 5.0 / std::sqrt(2.5), 0.05);
  EXPECT_GT(r.std_error, 0.0);
}

TEST(Snr, Errors) {
  const std::vector<double> one{1.0};
  const std::vector<double> flat{2.0, 2.0, 2.0};
  const std::vector<double> ok{0.0, 1.0, 2.0};
  EXPECT_THROW(snr(one, ok), std::invalid_argument);
  EXPECT_THROW(snr(flat, ok), NumericError);
}

TEST(Sensitivity, RfPulseExamples) {
  EXPECT_NEAR(sensitivity(36e-15, 12.3, 15e-3), 3.6e-16, 0.05e-16);
  EXPECT_NEAR(sensitivity(36e-15, 6.15, 15e-3), 2 * sensitivity(36e-15, 12.3, 15e-3), 1e-30);
  EXPECT_THROW(sensitivity(36e-15, 0.0, 1e-3), std::invalid_argument);
}

TEST(Sensitivity, ReportUsesFullCycle) {
  auto c = pn_config();
  c.rf.duration = 22e-3;
  c.pump_duration = 6e-3;
  const auto r = sensitivity_report(c, 14.7);
  EXPECT_NEAR(r.cycle_time, 29.5e-3, 1e-12);
  EXPECT_NEAR(r.sensitivity_cycle, 4.2e-16, 0.1e-16);
  EXPECT_GE(r.sensitivity_cycle, r.sensitivity_tau);
  EXPECT_NEAR(r.b_min_effective, 36e-15 / 14.7, 1e-25);
  EXPECT_NEAR(r.bandwidth, 0.88 / 22e-3, 1e-9);
}

TEST(Epr, Examples) {
  EXPECT_DOUBLE_EQ(epr_criterion(0.5, 0.5), 1.0);
  EXPECT_NEAR(epr_criterion(0.16 * 0.5, 0.16 * 0.5), 0.16, 1e-15);
  EXPECT_NEAR(epr_criterion(0.55, 0.55), 1.10, 1e-15);
}

TEST(NoiseBudget, Examples) {
  EXPECT_NEAR(noise_budget(3.6, 3.1).atomic_pn_units, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(noise_budget(0.5, 2.0).atomic_pn_units, 0.0);
  EXPECT_DOUBLE_EQ(noise_budget(0.5, 7.0).atomic_pn_units, 0.0);
  const double k2 = 3.1;
  EXPECT_NEAR(noise_budget(0.5 + 0.7 * k2, k2).atomic_pn_units, 0.7, 1e-12);
}

TEST(NoiseBudget, InversionIsExact) {
  for (double a : {0.0, 0.3, 1.0, 2.5}) {
    for (double k2 : {0.5, 3.1, 10.0}) {
      const auto s = noise_budget(simplified_total(a, k2), k2);
      EXPECT_NEAR(s.atomic_pn_units, a, 1e-12);
      EXPECT_NEAR(s.light_contribution + k2 * s.atomic_pn_units, s.total_shot_units, 1e-12);
      const double xi2 = 1 / 6.3, eta = 0.8;
      if (xi2 * k2 >= 1.0) continue;
      const auto e = noise_budget(exact_total(a, k2, xi2, eta), k2, xi2, eta);
      EXPECT_NEAR(e.exact_atomic_pn_units, a, 1e-12);
    }
  }
}

TEST(NoiseBudget, CoherentAtomsMatchModel) {
  // Unit-variance atoms read with kappa^2 = 3.1 and perfect detection.
  EXPECT_NEAR(exact_total(1.0, 3.1, 1 / 6.3, 1.0), 3.608, 1e-3);
}

TEST(NoiseBudget, RejectsBelowShotNoise) {
  EXPECT_THROW(noise_budget(0.3, 3.1), NumericError);
  EXPECT_NO_THROW(noise_budget(0.45, 3.1, 0.0, 1.0, 0.1));
  EXPECT_THROW(noise_budget(1.0, 0.0), std::invalid_argument);
}

TEST(Displacement, ZeroMeansZeroDisplacement) {
  const auto d = displacement_calibration(0, 0, 1.76, 0.8, 1e13, 4, 7.2e11);
  EXPECT_EQ(d.z_pn, 0.0);
  EXPECT_EQ(d.y_pn, 0.0);
  EXPECT_THROW(displacement_calibration(1, 1, 0.0, 0.8, 1e13, 4, 7.2e11), std::invalid_argument);
}

TEST(Displacement, EtaScaling) {
  // At fixed displacement the mean scales with sqrt(eta): a sqrt(2) larger
  // mean at twice the efficiency reads back the same displacement.
  const auto a = displacement_calibration(1e5, 0, 1.7, 0.4, 1e13, 4, 7.2e11);
  const auto b = displacement_calibration(std::sqrt(2.0) * 1e5, 0, 1.7, 0.8, 1e13, 4, 7.2e11);
  EXPECT_NEAR(a.z_pn, b.z_pn, 1e-12 * std::abs(a.z_pn));
}

TEST(Displacement, RoundTripThroughSimulation) {
  auto c = pn_config();
  c.ensemble.t2_dark = 1e6;
  c.rf.amplitude = 0.2e-12;
  c.rf.phase = 0.4;
  const CompiledProtocol pn(c, ProtocolKind::pn);
  const auto s = summarize(monte_carlo(pn, 20000, 17, 1)).at("readout");
  const double root_phi = std::sqrt(c.probe2.photon_number);
  const double kappa = coupling_constant(c.ensemble.gamma_swap, c.probe2.duration, c.probe2.xi_squared);
  const auto d = displacement_calibration(s.s2c.mean * root_phi, s.s2s.mean * root_phi, kappa,
                                          c.probe2.eta_detection, c.probe2.photon_number,
                                          c.constants.spin_f, c.ensemble.n_atoms_per_cell);
  const auto truth = rf_displacement(c.rf, c.ensemble, c.constants);
  const double per_unit = std::sqrt(2.0) / (kappa * std::sqrt(c.probe2.eta_detection));
  EXPECT_NEAR(d.z_pn, std::sqrt(2.0) * truth.z, 3 * per_unit * *s.s2c.mean_stderr);
  EXPECT_NEAR(d.y_pn, std::sqrt(2.0) * truth.y, 3 * per_unit * *s.s2s.mean_stderr);
}

TEST(Regression, RecoversLinearModel) {
  const std::size_t n = 2000;
  std::vector<double> x1(n), x2(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = shot_rng(30, i);
    x1[i] = standard_normal(rng);
    x2[i] = standard_normal(rng);
    y[i] = 0.5 - 1.5 * x1[i] + 0.25 * x2[i];
  }
  const auto fit = fit_linear_predictor(y, {x1, x2});
  ASSERT_EQ(fit.coefficients.size(), 3u);
  EXPECT_NEAR(fit.coefficients[0], 0.5, 1e-10);
  EXPECT_NEAR(fit.coefficients[1], -1.5, 1e-10);
  EXPECT_NEAR(fit.coefficients[2], 0.25, 1e-10);
  const std::vector<double> point{1.0, 2.0};
  EXPECT_NEAR(fit.predict(point), 0.5 - 1.5 + 0.5, 1e-10);
}

TEST(Entanglement, ConditionalNoiseMatchesPrediction) {
  ExperimentConfig c;
  c.ensemble.n_atoms_per_cell = 3.6e11;
  c.ensemble.t2_dark = 16e-3;
  c.ensemble.gamma_swap = 112.9;
  c.ensemble.gamma_extra = 150.0;
  c.probe1.duration = 2e-3;
  c.probe1.mode_sign = ModeSign::rising;
  c.probe2.duration = 3e-3;
  c.rf.amplitude = 0.0;
  c.rf.duration = 0.44e-3;
  c.delay = 0.0;
  const CompiledProtocol ent(c, ProtocolKind::entangled);
  const auto fit = monte_carlo(ent, 20000, 40, 1, 1);
  const auto eval = monte_carlo(ent, 20000, 41, 1, 1);
  const auto noise = conditional_noise(fit, eval);
  const auto pred = predicted_entanglement(ent, "probe2");
  EXPECT_NEAR(noise.var_c, pred.var_c, 3 * noise.var_c_stderr);
  EXPECT_NEAR(noise.var_s, pred.var_s, 3 * noise.var_s_stderr);
  EXPECT_LT(pred.sigma_epr, 1.0);
  EXPECT_NEAR(pred.reduction_db, 10 * std::log10(pred.sigma_epr), 1e-12);
}

namespace {

// Variances written by the decoherence channel itself, starting from a
// conditionally squeezed state.
std::vector<double> generator_curve(const std::vector<double>& delays, double rate) {
  const auto labels = atomic_modes(CellConfig::two);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  Eigen::MatrixXd cov = 0.5 * Eigen::MatrixXd::Identity(4, 4);
  cov(0, 0) = 0.2;
  const auto start = QuadratureState::make(labels, mean, cov);
  std::vector<double> v;
  for (double t : delays) {
    const auto s = decoherence_channel(start, labels, rate, t, 0.55);
    v.push_back(s.cov()(0, 0));
  }
  return v;
}

}  // namespace

TEST(Lifetime, RecoversGeneratorRate) {
  const std::vector<double> delays{0.1e-3, 0.5e-3, 1e-3, 2e-3, 4e-3, 6e-3, 8e-3, 12e-3, 16e-3, 20e-3};
  const double t2 = 16e-3;
  const auto v = generator_curve(delays, 1.0 / t2);
  const auto fit = fit_exponential_lifetime(delays, v);
  // Variance relaxes at twice the amplitude rate.
  EXPECT_NEAR(fit.t_fit, t2 / 2, 0.1 * t2 / 2);
  EXPECT_NEAR(fit.floor, 0.55, 0.01);
  EXPECT_NEAR(fit.amplitude, 0.35, 0.01);

  std::vector<double> noisy = v;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    Rng rng = shot_rng(50, i);
    noisy[i] += 0.003 * standard_normal(rng);
  }
  EXPECT_NEAR(fit_exponential_lifetime(delays, noisy).t_fit, t2 / 2, 0.1 * t2 / 2);
  const std::vector<double> weights(delays.size(), 2.0);
  EXPECT_NEAR(fit_exponential_lifetime(delays, v, weights).t_fit, fit.t_fit, 1e-6 * fit.t_fit);
}

TEST(Lifetime, RejectsDegenerateInput) {
  const std::vector<double> d{1e-3, 2e-3, 3e-3, 4e-3};
  const std::vector<double> flat(4, 0.6);
  EXPECT_THROW(fit_exponential_lifetime(d, flat), NumericError);
  const std::vector<double> two{1e-3, 1e-3, 2e-3};
  const std::vector<double> v{0.3, 0.31, 0.4};
  EXPECT_THROW(fit_exponential_lifetime(two, v), std::invalid_argument);
}

TEST(ModeOptimization, ArgmaxTiesTowardSmallerGamma) {
  const std::vector<ModeCurvePoint> c{{100, 1.0, 0}, {200, 3.0, 0}, {300, 3.0, 0}, {400, 2.0, 0}};
  EXPECT_EQ(argmax_smallest_gamma(c), 1u);
  const std::vector<ModeCurvePoint> rev{{400, 3.0, 0}, {100, 3.0, 0}};
  EXPECT_EQ(argmax_smallest_gamma(rev), 1u);
  EXPECT_THROW(argmax_smallest_gamma({}), std::invalid_argument);
}

TEST(ModeOptimization, ArgmaxScaleInvariant) {
  std::vector<ModeCurvePoint> c;
  for (int i = 0; i < 20; ++i) {
    Rng rng = shot_rng(60, i);
    c.push_back({100.0 * (i + 1), std::abs(standard_normal(rng)), 0});
  }
  const auto k = argmax_smallest_gamma(c);
  for (double s : {1e-6, 0.5, 3.0, 1e6}) {
    auto scaled = c;
    for (auto& p : scaled) p.snr *= s;
    EXPECT_EQ(argmax_smallest_gamma(scaled), k);
  }
}

TEST(ModeOptimization, FlatWithoutCoupling) {
  auto c = pn_config();
  c.ensemble.gamma_swap = 0.0;
  c.probe2.readout = ReadoutModel::temporal;
  c.probe2.n_slices = 40;
  const std::vector<double> grid{200, 600, 1000, 1400, 1800};
  const auto analytic = optimize_mode_gamma(c, grid);
  for (const auto& p : analytic.curve) EXPECT_NEAR(p.snr, 0.0, 1e-9);
  const std::size_t n = 2000;
  const auto mc = optimize_mode_gamma(c, grid, n, 3, 1);
  for (const auto& p : mc.curve) EXPECT_LT(p.snr, 4.0 * std::sqrt(2.0 / n));
}

TEST(ModeOptimization, EmptyGridRejected) {
  EXPECT_THROW(optimize_mode_gamma(pn_config(), std::vector<double>{}), ConfigError);
}

TEST(Closure, PnSnrReproducesLimit) {
  auto c = pn_config();
  c.ensemble.beta0 = 0.0;
  const auto lim = pn_limited_sensitivity(c.ensemble, c.rf.duration, c.constants);
  const auto d = rf_displacement(c.rf, c.ensemble, c.constants);
  const double analytic = std::hypot(d.z, d.y) / std::sqrt(kVacuumVariance);
  EXPECT_NEAR(analytic, c.rf.amplitude / lim.b_min, 1e-9);
  EXPECT_NEAR(sensitivity(c.rf.amplitude, analytic, c.rf.duration), lim.sensitivity,
              1e-9 * lim.sensitivity);

  // Monte Carlo on the atomic quadrature itself, without light noise.
  const auto pumped = pumped_state(c.ensemble, CellConfig::two);
  const auto displaced = apply_rf_displacement(pumped, c.rf, c.ensemble, c.constants, CellConfig::two);
  const std::size_t n = 20000;
  std::vector<double> sig(n), ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng a = shot_rng(70, i, 0), b = shot_rng(70, i, 1);
    sig[i] = sample_outcome(displaced, modes::z_plus, a);
    ref[i] = sample_outcome(pumped, modes::z_plus, b);
  }
  const auto r = snr(sig, ref);
  EXPECT_NEAR(r.value, analytic, 3 * r.std_error);
}

TEST(Properties, EprAboveMeasurementFloor) {
  // eta = 1 and beta0 = 0: no state the simulator can produce beats xi^2.
  for (int i = 0; i < 30; ++i) {
    Rng rng = shot_rng(80, i);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ExperimentConfig c;
    c.ensemble.beta0 = 0.0;
    c.ensemble.gamma_swap = 50.0 + 8000.0 * u(rng);
    c.ensemble.gamma_extra = 300.0 * u(rng);
    c.ensemble.t2_dark = 1e-3 + 1.0 * u(rng);
    c.probe1.eta_detection = c.probe2.eta_detection = 1.0;
    c.probe1.xi_squared = c.probe2.xi_squared = 0.05 + 0.5 * u(rng);
    c.probe1.duration = 0.2e-3 + 3e-3 * u(rng);
    c.probe2.duration = 0.2e-3 + 3e-3 * u(rng);
    c.delay = 5e-3 * u(rng);
    c.rf.duration = 0.1e-3 + 2e-3 * u(rng);
    const auto r = predicted_entanglement(CompiledProtocol(c, ProtocolKind::entangled), "probe2");
    EXPECT_GE(r.sigma_epr, c.probe1.xi_squared - 1e-9) << "draw " << i;
  }
}
