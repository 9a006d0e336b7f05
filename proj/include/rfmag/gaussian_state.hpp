#pragma once

// Multimode Gaussian states over labeled real quadratures.
//
// Units: every quadrature is normalized so that a coherent (vacuum) mode has
// variance exactly 1/2. Covariances are dense; the magnetometer never needs
// more than about ten modes at once.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rfmag/rng.hpp"

namespace rfmag {

inline constexpr double kVacuumVariance = 0.5;

class QuadratureState {
 public:
  /// Validates dimensions, symmetry and positive semidefiniteness. Throws
  /// NumericError naming the most negative eigenvalue for non-PSD input.
  static QuadratureState make(std::vector<std::string> labels, Eigen::VectorXd mean,
                              Eigen::MatrixXd cov);

  /// All modes in vacuum: zero mean, variance 1/2, no correlations.
  static QuadratureState vacuum(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  Eigen::Index size() const { return mean_.size(); }

  bool has(std::string_view label) const;
  /// Throws std::out_of_range for unknown labels.
  Eigen::Index index_of(std::string_view label) const;
  double mean_of(std::string_view label) const { return mean_(index_of(label)); }
  double variance(std::string_view label) const {
    auto i = index_of(label);
    return cov_(i, i);
  }
  double covariance(std::string_view a, std::string_view b) const {
    return cov_(index_of(a), index_of(b));
  }

 private:
  QuadratureState(std::vector<std::string> labels, Eigen::VectorXd mean, Eigen::MatrixXd cov)
      : labels_(std::move(labels)), mean_(std::move(mean)), cov_(std::move(cov)) {}

  std::vector<std::string> labels_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// x -> M x + c + noise(D). M may be rectangular; `output_labels` names the
/// rows and defaults to the input labels when M is square.
struct AffineChannel {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd offset;
  Eigen::MatrixXd added_noise;
  std::vector<std::string> output_labels;

  static AffineChannel identity(Eigen::Index n);
};

QuadratureState apply_channel(const QuadratureState& state, const AffineChannel& channel);

/// Homodyne conditioning on `mode` = `outcome`. The measured mode is removed.
QuadratureState condition_on_outcome(const QuadratureState& state, std::string_view mode,
                                     double outcome);

/// One draw from N(mean_m, Var_m). Always consumes exactly one normal deviate.
double sample_outcome(const QuadratureState& state, std::string_view mode, Rng& rng);

/// Restriction to `modes`, in the order given.
QuadratureState marginal(const QuadratureState& state, std::span<const std::string> modes);

/// Drops `modes` (the complement marginal). Unknown labels are an error.
QuadratureState discard(const QuadratureState& state, std::span<const std::string> modes);

/// Appends independent vacuum modes. Labels must not already exist.
QuadratureState append_vacuum(const QuadratureState& state, std::span<const std::string> labels);

/// Adds `shift` to the mean of one mode.
QuadratureState displace(const QuadratureState& state, std::string_view mode, double shift);

/// Exchanges the contents of two modes (labels stay in place).
QuadratureState swap_modes(const QuadratureState& state, std::string_view a, std::string_view b);

}  // namespace rfmag
