#include "rfmag/magnetometer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rfmag/errors.hpp"

namespace rfmag {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool contains(const std::vector<std::string>& labels, const std::string& label) {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

Eigen::Index position(const std::vector<std::string>& labels, const std::string& label) {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::invalid_argument("missing mode '" + label + "'");
  return static_cast<Eigen::Index>(it - labels.begin());
}

// Linear map from an input state to a tracked set of variables, plus noise
// independent of the input: v = M x + c + w, Cov(w) = D.
struct TrackedMap {
  std::vector<std::string> labels;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;
  Eigen::MatrixXd noise;

  void apply(const AffineChannel& ch) {
    matrix = ch.matrix * matrix;
    offset = ch.matrix * offset + ch.offset;
    noise = ch.matrix * noise * ch.matrix.transpose() + ch.added_noise;
    if (!ch.output_labels.empty()) labels = ch.output_labels;
  }

  // Appends independent variables with the given mean and variance.
  void append(const std::vector<std::string>& extra, double variance) {
    const Eigen::Index n = matrix.rows();
    const auto k = static_cast<Eigen::Index>(extra.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + k, matrix.cols());
    m.topRows(n) = matrix;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n + k);
    c.head(n) = offset;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + k, n + k);
    d.topLeftCorner(n, n) = noise;
    d.bottomRightCorner(k, k).diagonal().setConstant(variance);
    matrix = std::move(m);
    offset = std::move(c);
    noise = std::move(d);
    labels.insert(labels.end(), extra.begin(), extra.end());
  }

  void damp(const std::vector<std::string>& targets, double factor, double added_variance) {
    AffineChannel ch = AffineChannel::identity(matrix.rows());
    for (const auto& t : targets) {
      const auto i = position(labels, t);
      ch.matrix(i, i) = factor;
      ch.added_noise(i, i) = added_variance;
    }
    apply(ch);
  }

  AffineChannel as_channel() const { return {matrix, offset, noise, labels}; }
};

std::vector<std::string> present_atoms(const std::vector<std::string>& labels, CellConfig cells) {
  std::vector<std::string> out;
  for (const auto& m : atomic_modes(cells)) {
    if (contains(labels, m)) out.push_back(m);
  }
  return out;
}

double transmission(double kappa, double xi_sq) {
  const double depletion = xi_sq * kappa * kappa;
  if (depletion > 1.0) {
    std::ostringstream msg;
    msg << "xi^2 kappa^2 = " << depletion << " exceeds 1";
    throw std::invalid_argument(msg.str());
  }
  return std::sqrt(1.0 - depletion);
}

}  // namespace

void PhysicalConstants::validate() const {
  require(gamma_gyro > 0.0, "constants.gamma_gyro must be > 0");
  require(spin_f >= 0.5, "constants.spin_f must be >= 1/2");
}

void EnsembleParams::validate() const {
  require(n_atoms_per_cell > 0.0, "ensemble.n_atoms_per_cell must be > 0");
  require(n_cells == 1 || n_cells == 2, "ensemble.n_cells must be 1 or 2");
  require(t2_dark > 0.0, "ensemble.t2_dark must be > 0");
  require(gamma_swap >= 0.0, "ensemble.gamma_swap must be >= 0");
  require(gamma_extra >= 0.0, "ensemble.gamma_extra must be >= 0");
  require(beta0 >= 0.0, "ensemble.beta0 must be >= 0");
  require(optical_depth >= 0.0, "ensemble.optical_depth must be >= 0");
}

void ProbeParams::validate() const {
  require(photon_number >= 0.0, "probe.photon_number must be >= 0");
  require(duration > 0.0, "probe.duration must be > 0");
  require(xi_squared > 0.0, "probe.xi_squared must be > 0");
  require(eta_detection >= 0.0 && eta_detection <= 1.0, "probe.eta_detection must be in [0, 1]");
  require(mode_gamma >= 0.0, "probe.mode_gamma must be >= 0");
  require(n_slices >= 1, "probe.n_slices must be >= 1");
  require(readout == ReadoutModel::pulse || s3c_displacement == 0.0,
          "probe.s3c_displacement requires the pulse readout model");
}

void RFPulse::validate() const {
  require(amplitude >= 0.0, "rf.amplitude must be >= 0");
  require(duration > 0.0, "rf.duration must be > 0");
  require(carrier >= 0.0, "rf.carrier must be >= 0");
}

double larmor_frequency(double b_dc, const PhysicalConstants& constants) {
  if (b_dc < 0.0) throw std::invalid_argument("dc field must be >= 0");
  return constants.gamma_gyro * b_dc;
}

double xi_squared(double a2_over_a1) {
  if (a2_over_a1 < 0.0) throw std::invalid_argument("polarizability ratio must be >= 0");
  return 14.0 * a2_over_a1;
}

double coupling_constant(double gamma_swap, double duration, double xi_sq) {
  if (gamma_swap < 0.0 || duration < 0.0) {
    throw std::invalid_argument("coupling_constant: rate and duration must be >= 0");
  }
  if (!(xi_sq > 0.0)) throw std::invalid_argument("coupling_constant: xi^2 must be > 0");
  return std::sqrt(-std::expm1(-2.0 * gamma_swap * duration) / xi_sq);
}

PnLimit pn_limited_sensitivity(const EnsembleParams& ensemble, double tau,
                               const PhysicalConstants& constants) {
  if (!(tau > 0.0)) throw std::invalid_argument("RF duration must be > 0");
  if (!(ensemble.t2_dark > 0.0)) throw std::invalid_argument("T2 must be > 0");
  const double t2 = ensemble.t2_dark;
  const double response = constants.gamma_gyro *
                          std::sqrt(constants.spin_f * ensemble.n_total() / 2.0) * t2 *
                          (-std::expm1(-tau / t2));
  const double b_min = 1.0 / response;
  return {b_min, b_min * std::sqrt(tau)};
}

Displacement rf_displacement(const RFPulse& rf, const EnsembleParams& ensemble,
                             const PhysicalConstants& constants) {
  const PnLimit limit = pn_limited_sensitivity(ensemble, rf.duration, constants);
  const double magnitude = rf.amplitude / limit.b_min * std::sqrt(kVacuumVariance);
  return {magnitude * std::sin(rf.phase), magnitude * std::cos(rf.phase)};
}

QuadratureState apply_rf_displacement(const QuadratureState& state, const RFPulse& rf,
                                      const EnsembleParams& ensemble,
                                      const PhysicalConstants& constants, CellConfig cells) {
  const Displacement d = rf_displacement(rf, ensemble, constants);
  const bool two = cells == CellConfig::two;
  QuadratureState out = displace(state, two ? modes::z_plus : modes::z_single, d.z);
  return displace(out, two ? modes::y_plus : modes::y_single, d.y);
}

std::vector<std::string> atomic_modes(CellConfig cells) {
  if (cells == CellConfig::two) {
    return {modes::z_plus, modes::y_plus, modes::y_minus, modes::z_minus};
  }
  return {modes::z_single, modes::y_single};
}

std::vector<std::string> light_modes() { return {modes::s2c, modes::s2s, modes::s3c}; }

QuadratureState pumped_state(const EnsembleParams& ensemble, CellConfig cells) {
  auto labels = atomic_modes(cells);
  const auto n = static_cast<Eigen::Index>(labels.size());
  return QuadratureState::make(std::move(labels), Eigen::VectorXd::Zero(n),
                               ensemble.floor_variance() * Eigen::MatrixXd::Identity(n, n));
}

QuadratureState decoherence_channel(const QuadratureState& state,
                                    const std::vector<std::string>& targets, double gamma,
                                    double dt, double floor_variance) {
  if (gamma < 0.0 || dt < 0.0) throw std::invalid_argument("decoherence: gamma, dt must be >= 0");
  AffineChannel ch = AffineChannel::identity(state.size());
  const double decay = std::exp(-gamma * dt);
  const double refill = -std::expm1(-2.0 * gamma * dt) * floor_variance;
  for (const auto& t : targets) {
    const auto i = state.index_of(t);
    ch.matrix(i, i) = decay;
    ch.added_noise(i, i) = refill;
  }
  return apply_channel(state, ch);
}

QuadratureState detection_loss(const QuadratureState& state,
                               const std::vector<std::string>& targets, double eta) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("detection efficiency must be in [0,1]");
  AffineChannel ch = AffineChannel::identity(state.size());
  for (const auto& t : targets) {
    const auto i = state.index_of(t);
    ch.matrix(i, i) = std::sqrt(eta);
    ch.added_noise(i, i) = (1.0 - eta) * kVacuumVariance;
  }
  return apply_channel(state, ch);
}

AffineChannel faraday_channel(const std::vector<std::string>& labels, double kappa,
                              double xi_sq, CellConfig cells) {
  const double t = transmission(kappa, xi_sq);
  const auto n = static_cast<Eigen::Index>(labels.size());
  AffineChannel ch = AffineChannel::identity(n);
  ch.output_labels = labels;
  auto& m = ch.matrix;

  const bool two = cells == CellConfig::two;
  const auto iz = position(labels, two ? modes::z_plus : modes::z_single);
  const auto iy = position(labels, two ? modes::y_plus : modes::y_single);
  const auto ic = position(labels, modes::s2c);
  const auto is = position(labels, modes::s2s);
  const auto i3 = position(labels, modes::s3c);

  // S2c <-> J_z, S2s <-> J_y: light picks up kappa x, atoms pick up -xi^2 kappa s.
  m(ic, ic) = t;
  m(ic, iz) = kappa;
  m(iz, iz) = t;
  m(iz, ic) = -xi_sq * kappa;
  m(is, is) = t;
  m(is, iy) = kappa;
  m(iy, iy) = t;
  m(iy, is) = -xi_sq * kappa;

  if (two) {
    if (contains(labels, modes::y_minus)) {
      const auto im = position(labels, modes::y_minus);
      m(im, im) = t;
      m(im, i3) = kappa;
      m(i3, i3) = t;
      m(i3, im) = -xi_sq * kappa;
    }
  } else {
    // Back-action of the unmeasured S3 components, mixed into both
    // rotating-frame quadratures by the Larmor precession.
    ch.added_noise(iz, iz) = kappa * kappa * kVacuumVariance;
    ch.added_noise(iy, iy) = kappa * kappa * kVacuumVariance;
  }
  return ch;
}

FaradayResult faraday_pass(const QuadratureState& state, double kappa, double xi_sq,
                           CellConfig cells, double s3c_displacement) {
  const auto light = light_modes();
  for (const auto& l : light) {
    if (state.has(l)) throw std::invalid_argument("state already holds light mode '" + l + "'");
  }
  QuadratureState with_light = append_vacuum(state, light);
  if (s3c_displacement != 0.0) {
    with_light = displace(with_light, modes::s3c, s3c_displacement * std::sqrt(kVacuumVariance));
  }
  const AffineChannel ch = faraday_channel(with_light.labels(), kappa, xi_sq, cells);
  return {apply_channel(with_light, ch), light};
}

FaradayResult faraday_pass(const QuadratureState& state, const EnsembleParams& ensemble,
                           const ProbeParams& probe, CellConfig cells) {
  const double kappa = coupling_constant(ensemble.gamma_swap, probe.duration, probe.xi_squared);
  return faraday_pass(state, kappa, probe.xi_squared, cells, probe.s3c_displacement);
}

std::vector<double> slice_mode_weights(double gamma, ModeSign sign, double duration, int n) {
  if (n < 1) throw std::invalid_argument("need at least one slice");
  const double dt = duration / n;
  const double s = sign == ModeSign::falling ? -1.0 : 1.0;
  // Referenced to the heaviest midpoint so large gamma * duration cannot
  // overflow or underflow every weight.
  const double t_ref = sign == ModeSign::falling ? 0.5 * dt : duration - 0.5 * dt;
  std::vector<double> w(static_cast<std::size_t>(n));
  double norm = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) * dt;
    w[k] = std::exp(s * gamma * (t - t_ref));
    norm += w[k] * w[k];
  }
  norm = std::sqrt(norm);
  for (auto& v : w) v /= norm;
  return w;
}

AffineChannel probe_channel(const std::vector<std::string>& labels,
                            const EnsembleParams& ensemble, const ProbeParams& probe,
                            CellConfig cells) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto light = light_modes();
  const auto atoms = present_atoms(labels, cells);
  const double floor = ensemble.floor_variance();
  const double xi_sq = probe.xi_squared;

  TrackedMap map{labels, Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n),
                 Eigen::MatrixXd::Zero(n, n)};

  if (probe.readout == ReadoutModel::pulse) {
    map.append(light, kVacuumVariance);
    map.offset(position(map.labels, modes::s3c)) =
        probe.s3c_displacement * std::sqrt(kVacuumVariance);
    const double kappa = coupling_constant(ensemble.gamma_swap, probe.duration, xi_sq);
    map.apply(faraday_channel(map.labels, kappa, xi_sq, cells));
    const double decay = std::exp(-ensemble.gamma_extra * probe.duration);
    map.damp(atoms, decay, -std::expm1(-2.0 * ensemble.gamma_extra * probe.duration) * floor);
  } else {
    if (probe.s3c_displacement != 0.0) {
      throw std::invalid_argument("temporal readout does not support displaced s3c input");
    }
    const std::vector<std::string> outputs = {"out.s2c", "out.s2s", "out.s3c"};
    map.append(outputs, 0.0);
    const int slices = probe.n_slices;
    const double dt = probe.duration / slices;
    const double t_slice = std::exp(-ensemble.gamma_swap * dt);
    const double kappa = std::sqrt((1.0 - t_slice * t_slice) / xi_sq);
    const double decay = std::exp(-ensemble.gamma_extra * dt);
    const double refill = -std::expm1(-2.0 * ensemble.gamma_extra * dt) * floor;
    const auto weights =
        slice_mode_weights(probe.mode_gamma, probe.mode_sign, probe.duration, slices);
    const Eigen::Index tracked = n + 3;

    for (int k = 0; k < slices; ++k) {
      map.append(light, kVacuumVariance);
      map.apply(faraday_channel(map.labels, kappa, xi_sq, cells));
      // Fold this slice of light into the output modes, then drop it.
      AffineChannel fold;
      fold.matrix = Eigen::MatrixXd::Zero(tracked, tracked + 3);
      fold.matrix.leftCols(tracked).setIdentity();
      for (int j = 0; j < 3; ++j) fold.matrix(n + j, tracked + j) = weights[k];
      fold.offset = Eigen::VectorXd::Zero(tracked);
      fold.added_noise = Eigen::MatrixXd::Zero(tracked, tracked);
      fold.output_labels.assign(map.labels.begin(), map.labels.begin() + tracked);
      map.apply(fold);
      map.damp(atoms, decay, refill);
    }
    for (int j = 0; j < 3; ++j) map.labels[n + j] = light[j];
  }

  map.damp(light, std::sqrt(probe.eta_detection), (1.0 - probe.eta_detection) * kVacuumVariance);
  map.noise = 0.5 * (map.noise + map.noise.transpose());
  return map.as_channel();
}

}  // namespace rfmag
