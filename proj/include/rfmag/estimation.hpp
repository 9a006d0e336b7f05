#pragma once

// Figures of merit computed from shot ensembles or from the deterministic
// protocol prediction: SNR, sensitivity, EPR variance, noise budget,
// lifetime fit and readout-mode optimization.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfmag/protocol.hpp"

namespace rfmag {

struct SnrResult {
  double value = 0.0;   // |mean_sig - mean_ref| / std(signal)
  double std_error = 0.0;  // delta-method estimate
  double pooled = 0.0;  // same difference over the pooled standard deviation
  double mean_difference = 0.0;
  double signal_std = 0.0;
};

/// SNR with the displaced ensemble's standard deviation. Both inputs need at
/// least two shots; a zero-variance signal ensemble is rejected.
SnrResult snr(std::span<const double> signal, std::span<const double> reference);

/// b_rf * sqrt(time) / snr.
double sensitivity(double b_rf, double snr_value, double time);

struct SensitivityReport {
  double snr = 0.0;
  double b_min_effective = 0.0;  // T, b_rf / snr
  double sensitivity_tau = 0.0;  // T/sqrt(Hz)
  double sensitivity_cycle = 0.0;
  double bandwidth = 0.0;        // Hz
  double cycle_time = 0.0;       // s
};

/// cycle = pump + readout probe + tau.
SensitivityReport sensitivity_report(const ExperimentConfig& config, double snr_value);

/// (Var_y + Var_z) / (2 pn_unit); pn_unit is the coherent-state variance.
double epr_criterion(double var_y, double var_z, double pn_unit = kVacuumVariance);

/// Noise decomposition of a readout variance quoted in shot-noise units
/// (vacuum = 1). The simplified budget is total = 0.5 + kappa^2 * atomic;
/// the exact budget is total = eta t^2 + (1 - eta) + eta kappa^2 * atomic with
/// t^2 = 1 - xi^2 kappa^2.
struct NoiseBudget {
  double total_shot_units = 0.0;
  double light_contribution = 0.5;
  double atomic_pn_units = 0.0;
  double kappa_squared_used = 0.0;
  double exact_light_contribution = 0.0;
  double exact_atomic_pn_units = 0.0;
};

/// `tolerance` is how far below 0.5 the total may sit (statistical slack)
/// before it is reported as a calibration inconsistency.
NoiseBudget noise_budget(double total_shot_units, double kappa_squared, double xi_sq = 0.0,
                         double eta = 1.0, double tolerance = 0.0);

double simplified_total(double atomic_pn_units, double kappa_squared);
double exact_total(double atomic_pn_units, double kappa_squared, double xi_sq, double eta);

struct AtomicDisplacement {
  double j_y = 0.0;     // collective spin units
  double j_z = 0.0;
  double y_pn = 0.0;    // units of sqrt(F N_A)
  double z_pn = 0.0;
};

/// Inverts <S2_out> = kappa sqrt(eta) sqrt(Phi / 2 F N_A) <J> for mean Stokes
/// values in photon units; S2c reads J_z, S2s reads J_y. N_A is per cell.
AtomicDisplacement displacement_calibration(double mean_s2c, double mean_s2s, double kappa,
                                            double eta, double photon_number, double spin_f,
                                            double n_atoms_per_cell);

/// Ordinary least squares y ~ c0 + sum_k c_k x_k.
struct LinearPredictor {
  std::vector<double> coefficients;  // intercept first

  double predict(std::span<const double> regressors) const;
};

LinearPredictor fit_linear_predictor(std::span<const double> target,
                                     const std::vector<std::vector<double>>& regressors);

/// Probe2 residuals after subtracting the prediction from probe1's outcomes.
struct ConditionalNoise {
  double var_c = 0.0;  // shot-noise variance convention (vacuum 0.5)
  double var_s = 0.0;
  double var_c_stderr = 0.0;
  double var_s_stderr = 0.0;
  LinearPredictor predictor_c;
  LinearPredictor predictor_s;
};

/// Fits the predictors on `fit` and evaluates residual variances on `eval`
/// (pass the same ensemble for both to get in-sample numbers).
ConditionalNoise conditional_noise(const ShotEnsemble& fit, const ShotEnsemble& eval,
                                   const std::string& first = "probe1",
                                   const std::string& second = "probe2");

/// SNR of `second` after subtracting the linear prediction from `first`,
/// with the predictor fitted on the reference (B = 0) ensemble.
SnrResult conditional_snr(const ShotEnsemble& signal, const ShotEnsemble& reference,
                          bool cos_quadrature, const std::string& first = "probe1",
                          const std::string& second = "probe2");

/// Residual S2c/S2s variance of `second` after linear estimation from
/// `first`, taken from the protocol's exact prediction.
struct EntanglementReport {
  double var_c = 0.0;
  double var_s = 0.0;
  double kappa_squared = 0.0;
  double atomic_z_pn = 0.0;  // exact budget, PN units
  double atomic_y_pn = 0.0;
  double sigma_epr = 0.0;    // mean of the two
  double reduction_db = 0.0; // 10 log10(sigma_epr)
};

EntanglementReport entanglement_report(double var_c, double var_s, const ProbeParams& readout,
                                       const EnsembleParams& ensemble);

/// Analytic counterpart of conditional_noise for a readout pulse id.
EntanglementReport predicted_entanglement(const CompiledProtocol& protocol,
                                          const std::string& readout_id);

struct LifetimeFit {
  double t_fit = 0.0;
  double floor = 0.0;
  double amplitude = 0.0;
  double residual_norm = 0.0;
};

/// Least squares for V(t) = floor - amplitude exp(-t / T). Optional weights
/// (for example shot counts) scale each squared residual.
LifetimeFit fit_exponential_lifetime(std::span<const double> delays,
                                     std::span<const double> variances,
                                     std::span<const double> weights = {});

/// SNR along the displacement direction from the protocol prediction: the
/// signal-config mean minus the B = 0 mean, over the projected std.
double predicted_snr(const ExperimentConfig& config, ProtocolKind kind,
                     const std::string& readout_id);

/// Monte-Carlo SNR. The signal ensemble uses stream 0, the B = 0 reference
/// stream 1. The cos quadrature is used for phase 0 displacements, otherwise
/// the quadrature with the larger displacement.
SnrResult monte_carlo_snr(const ExperimentConfig& config, ProtocolKind kind,
                          const std::string& readout_id, std::size_t n_shots,
                          std::uint64_t master_seed, int workers);

struct ModeCurvePoint {
  double gamma = 0.0;
  double snr = 0.0;
  double std_error = 0.0;
};

struct ModeOptimization {
  double gamma_opt = 0.0;
  double snr_opt = 0.0;
  std::vector<ModeCurvePoint> curve;
};

/// Index of the maximum with ties broken toward the smaller gamma.
std::size_t argmax_smallest_gamma(const std::vector<ModeCurvePoint>& curve);

/// Scans the readout probe's mode_gamma. Analytic unless n_shots > 0, in which
/// case each grid point is a Monte-Carlo SNR with the given seed.
ModeOptimization optimize_mode_gamma(const ExperimentConfig& config,
                                     std::span<const double> gamma_grid,
                                     std::size_t n_shots = 0, std::uint64_t master_seed = 0,
                                     int workers = 1);

}  // namespace rfmag
