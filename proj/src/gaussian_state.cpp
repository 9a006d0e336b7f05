#include "rfmag/gaussian_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rfmag/errors.hpp"

namespace rfmag {
namespace {

constexpr double kSymmetryTolerance = 1e-10;
constexpr double kPsdTolerance = 1e-10;

// Symmetrizes, then enforces PSD up to -kPsdTolerance * trace and clips the
// remaining negative eigenvalues to zero.
Eigen::MatrixXd clean_covariance(const Eigen::MatrixXd& cov) {
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  if (sym.size() == 0) return sym;
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return sym;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& values = eig.eigenvalues();
  const double scale = std::max(sym.trace(), std::numeric_limits<double>::min());
  const double most_negative = values.minCoeff();
  if (most_negative < -kPsdTolerance * scale) {
    std::ostringstream msg;
    msg << "covariance is not positive semidefinite: most negative eigenvalue "
        << most_negative << " (trace " << sym.trace() << ")";
    throw NumericError(msg.str());
  }
  if (most_negative >= 0.0) return sym;
  Eigen::VectorXd clipped = values.cwiseMax(0.0);
  Eigen::MatrixXd rebuilt =
      eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (rebuilt + rebuilt.transpose());
}

void require_unique(const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) {
        throw std::invalid_argument("duplicate mode label '" + labels[i] + "'");
      }
    }
  }
}

QuadratureState select(const QuadratureState& state, const std::vector<Eigen::Index>& keep) {
  const auto n = static_cast<Eigen::Index>(keep.size());
  std::vector<std::string> labels;
  labels.reserve(keep.size());
  Eigen::VectorXd mean(n);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    labels.push_back(state.labels()[keep[a]]);
    mean(a) = state.mean()(keep[a]);
    for (Eigen::Index b = 0; b < n; ++b) cov(a, b) = state.cov()(keep[a], keep[b]);
  }
  return QuadratureState::make(std::move(labels), std::move(mean), std::move(cov));
}

}  // namespace

QuadratureState QuadratureState::make(std::vector<std::string> labels, Eigen::VectorXd mean,
                                      Eigen::MatrixXd cov) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (mean.size() != n || cov.rows() != n || cov.cols() != n) {
    std::ostringstream msg;
    msg << "dimension mismatch: " << n << " labels, mean of size " << mean.size()
        << ", covariance " << cov.rows() << "x" << cov.cols();
    throw std::invalid_argument(msg.str());
  }
  require_unique(labels);
  if (n > 0) {
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
      std::ostringstream msg;
      msg << "covariance is not symmetric (max asymmetry " << asym << ")";
      throw NumericError(msg.str());
    }
  }
  return QuadratureState(std::move(labels), std::move(mean), clean_covariance(cov));
}

QuadratureState QuadratureState::vacuum(std::vector<std::string> labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  return make(std::move(labels), Eigen::VectorXd::Zero(n),
              kVacuumVariance * Eigen::MatrixXd::Identity(n, n));
}

bool QuadratureState::has(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

Eigen::Index QuadratureState::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw std::out_of_range("unknown mode '" + std::string(label) + "'");
  return static_cast<Eigen::Index>(it - labels_.begin());
}

AffineChannel AffineChannel::identity(Eigen::Index n) {
  return {Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n),
          {}};
}

QuadratureState apply_channel(const QuadratureState& state, const AffineChannel& channel) {
  const Eigen::Index rows = channel.matrix.rows();
  if (channel.matrix.cols() != state.size()) {
    std::ostringstream msg;
    msg << "channel acts on " << channel.matrix.cols() << " modes, state has " << state.size();
    throw std::invalid_argument(msg.str());
  }
  if (channel.offset.size() != rows || channel.added_noise.rows() != rows ||
      channel.added_noise.cols() != rows) {
    throw std::invalid_argument("channel offset/noise dimensions do not match its matrix");
  }
  std::vector<std::string> labels = channel.output_labels;
  if (labels.empty()) {
    if (rows != state.size()) {
      throw std::invalid_argument("rectangular channel needs output labels");
    }
    labels = state.labels();
  } else if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw std::invalid_argument("channel output labels do not match its matrix");
  }
  Eigen::VectorXd mean = channel.matrix * state.mean() + channel.offset;
  Eigen::MatrixXd cov =
      channel.matrix * state.cov() * channel.matrix.transpose() + channel.added_noise;
  return QuadratureState::make(std::move(labels), std::move(mean), std::move(cov));
}

QuadratureState condition_on_outcome(const QuadratureState& state, std::string_view mode,
                                     double outcome) {
  const Eigen::Index m = state.index_of(mode);
  const double var_m = state.cov()(m, m);
  if (!(var_m > 0.0)) {
    throw NumericError("cannot condition on deterministic mode '" + std::string(mode) + "'");
  }
  std::vector<Eigen::Index> rest;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (i != m) rest.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(rest.size());
  std::vector<std::string> labels;
  Eigen::VectorXd mean(n), cross(n);
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    labels.push_back(state.labels()[rest[a]]);
    mean(a) = state.mean()(rest[a]);
    cross(a) = state.cov()(rest[a], m);
    for (Eigen::Index b = 0; b < n; ++b) cov(a, b) = state.cov()(rest[a], rest[b]);
  }
  const double innovation = outcome - state.mean()(m);
  mean += cross * (innovation / var_m);
  cov -= cross * cross.transpose() / var_m;
  return QuadratureState::make(std::move(labels), std::move(mean), std::move(cov));
}

double sample_outcome(const QuadratureState& state, std::string_view mode, Rng& rng) {
  const Eigen::Index m = state.index_of(mode);
  const double sd = std::sqrt(std::max(state.cov()(m, m), 0.0));
  return state.mean()(m) + sd * standard_normal(rng);
}

QuadratureState marginal(const QuadratureState& state, std::span<const std::string> modes) {
  std::vector<Eigen::Index> keep;
  keep.reserve(modes.size());
  for (const auto& label : modes) keep.push_back(state.index_of(label));
  return select(state, keep);
}

QuadratureState discard(const QuadratureState& state, std::span<const std::string> modes) {
  for (const auto& label : modes) (void)state.index_of(label);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (std::find(modes.begin(), modes.end(), state.labels()[i]) == modes.end()) keep.push_back(i);
  }
  return select(state, keep);
}

QuadratureState append_vacuum(const QuadratureState& state, std::span<const std::string> labels) {
  const Eigen::Index n = state.size();
  const auto k = static_cast<Eigen::Index>(labels.size());
  std::vector<std::string> all = state.labels();
  all.insert(all.end(), labels.begin(), labels.end());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n + k);
  mean.head(n) = state.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n + k, n + k);
  cov.topLeftCorner(n, n) = state.cov();
  cov.bottomRightCorner(k, k).diagonal().setConstant(kVacuumVariance);
  return QuadratureState::make(std::move(all), std::move(mean), std::move(cov));
}

QuadratureState displace(const QuadratureState& state, std::string_view mode, double shift) {
  Eigen::VectorXd mean = state.mean();
  mean(state.index_of(mode)) += shift;
  return QuadratureState::make(state.labels(), std::move(mean), state.cov());
}

QuadratureState swap_modes(const QuadratureState& state, std::string_view a, std::string_view b) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(state.size()));
  for (Eigen::Index i = 0; i < state.size(); ++i) order[i] = i;
  std::swap(order[state.index_of(a)], order[state.index_of(b)]);
  QuadratureState permuted = select(state, order);
  return QuadratureState::make(state.labels(), permuted.mean(), permuted.cov());
}

}  // namespace rfmag
