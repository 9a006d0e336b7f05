#pragma once

// Physics of the two-cell RF magnetometer expressed as Gaussian channels.
//
// Atomic quadratures are normalized per cell: x = J / sqrt(2 F N_cell), so a
// coherent spin state has variance 1/2 in every transverse quadrature, the
// same as the shot noise of a light mode. Light quadratures are Stokes
// components divided by sqrt(Phi).

#include <string>
#include <vector>

#include "rfmag/gaussian_state.hpp"

namespace rfmag {

namespace modes {
// Two-cell sectors: plus = cell1 + cell2, minus = cell1 - cell2.
inline const std::string z_plus = "atom.z_plus";
inline const std::string y_plus = "atom.y_plus";
inline const std::string y_minus = "atom.y_minus";
inline const std::string z_minus = "atom.z_minus";
// One-cell transverse pair.
inline const std::string z_single = "atom.z";
inline const std::string y_single = "atom.y";
inline const std::string s2c = "light.s2c";
inline const std::string s2s = "light.s2s";
inline const std::string s3c = "light.s3c";
}  // namespace modes

struct PhysicalConstants {
  double gamma_gyro = 2.2e10;  // rad / (s T)
  double spin_f = 4.0;

  void validate() const;
};

struct EnsembleParams {
  double n_atoms_per_cell = 7.2e11;
  int n_cells = 2;
  double t2_dark = 32e-3;      // s
  double gamma_swap = 430.0;   // 1/s
  double gamma_extra = 70.0;   // 1/s
  double beta0 = 0.10;         // initial variance = (1 + beta0) * PN
  double optical_depth = 75.0;

  double gamma_tot() const { return gamma_swap + gamma_extra; }
  double n_total() const { return n_cells * n_atoms_per_cell; }
  double jx_per_cell(const PhysicalConstants& c) const { return c.spin_f * n_atoms_per_cell; }
  double floor_variance() const { return (1.0 + beta0) * kVacuumVariance; }

  void validate() const;
};

enum class ModeSign { rising, falling };
enum class ReadoutModel { pulse, temporal };
enum class CellConfig { one, two };

struct ProbeParams {
  double photon_number = 1e13;     // per pulse
  double duration = 3e-3;          // s
  double detuning = 850e6;         // Hz, informational
  double xi_squared = 1.0 / 6.3;
  double eta_detection = 0.8;
  double mode_gamma = 1000.0;      // 1/s
  ModeSign mode_sign = ModeSign::falling;
  ReadoutModel readout = ReadoutModel::pulse;
  int n_slices = 400;              // temporal readout resolution
  double s3c_displacement = 0.0;   // input <S3c> in shot-noise units sqrt(Phi/2)

  void validate() const;
};

struct RFPulse {
  double amplitude = 36e-15;  // T
  double duration = 15e-3;    // s
  double phase = 0.0;         // rad, 0 displaces z only
  double carrier = 0.0;       // rad/s

  double bandwidth() const { return 0.88 / duration; }
  void validate() const;
};

double larmor_frequency(double b_dc, const PhysicalConstants& constants);

/// xi^2 = 14 a2/a1.
double xi_squared(double a2_over_a1);

/// kappa = xi^-1 sqrt(1 - exp(-2 gamma_swap T)).
double coupling_constant(double gamma_swap, double duration, double xi_sq);

struct PnLimit {
  double b_min;        // T
  double sensitivity;  // T / sqrt(Hz)
};

/// Projection-noise-limited minimal field for an RF pulse of length tau,
/// using the total atom number of all cells.
PnLimit pn_limited_sensitivity(const EnsembleParams& ensemble, double tau,
                               const PhysicalConstants& constants);

struct Displacement {
  double y;  // atom.y_plus (or atom.y)
  double z;  // atom.z_plus (or atom.z)
};

/// Mean transverse displacement after the RF pulse, in normalized units.
/// Its magnitude over the PN standard deviation sqrt(1/2) equals B_RF/B_min.
Displacement rf_displacement(const RFPulse& rf, const EnsembleParams& ensemble,
                             const PhysicalConstants& constants);

QuadratureState apply_rf_displacement(const QuadratureState& state, const RFPulse& rf,
                                      const EnsembleParams& ensemble,
                                      const PhysicalConstants& constants, CellConfig cells);

/// Atomic labels of a configuration, plus sector first.
std::vector<std::string> atomic_modes(CellConfig cells);
std::vector<std::string> light_modes();

/// Freshly pumped atoms: zero mean, variance (1 + beta0)/2.
QuadratureState pumped_state(const EnsembleParams& ensemble, CellConfig cells);

/// Damping towards `floor_variance` at amplitude rate `gamma` over `dt`.
QuadratureState decoherence_channel(const QuadratureState& state,
                                    const std::vector<std::string>& modes, double gamma,
                                    double dt, double floor_variance);

/// Beamsplitter admixture of vacuum with transmission eta.
QuadratureState detection_loss(const QuadratureState& state,
                               const std::vector<std::string>& modes, double eta);

/// Light-atom input-output map on `labels`, which must contain the atomic
/// modes of `cells` and the three light modes. Returns a square channel over `labels`.
AffineChannel faraday_channel(const std::vector<std::string>& labels, double kappa,
                              double xi_sq, CellConfig cells);

struct FaradayResult {
  QuadratureState state;
  std::vector<std::string> light_labels;
};

/// Appends vacuum light modes and applies the light-atom interaction with
/// coupling `kappa`. The s3c input is displaced by `s3c_displacement`
/// shot-noise units.
FaradayResult faraday_pass(const QuadratureState& state, double kappa, double xi_sq,
                           CellConfig cells, double s3c_displacement = 0.0);

FaradayResult faraday_pass(const QuadratureState& state, const EnsembleParams& ensemble,
                           const ProbeParams& probe, CellConfig cells);

/// Full probe pulse as one channel from `labels` to `labels` + light modes:
/// the light-atom interaction, residual decoherence at gamma_extra on the
/// atoms and detection loss on the light. `pulse` readout uses the closed
/// form with the natural falling mode; `temporal` resolves the pulse into
/// `n_slices` interactions and builds the light modes from the probe's
/// exponential mode function.
AffineChannel probe_channel(const std::vector<std::string>& labels,
                            const EnsembleParams& ensemble, const ProbeParams& probe,
                            CellConfig cells);

/// Normalized e^{+-gamma t} weights on the midpoints of n equal slices.
std::vector<double> slice_mode_weights(double gamma, ModeSign sign, double duration, int n);

}  // namespace rfmag
