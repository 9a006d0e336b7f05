#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace rfmag {

/// Sample mean and unbiased variance with Gaussian standard errors. With a
/// single sample the variance and both standard errors are absent.
struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> variance;
  std::optional<double> mean_stderr;
  std::optional<double> variance_stderr;
};

SampleStats describe(std::span<const double> values);

}  // namespace rfmag
