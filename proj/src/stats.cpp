#include "rfmag/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace rfmag {

SampleStats describe(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("statistics of an empty sample");
  SampleStats s;
  s.n = values.size();
  // Two-pass for accuracy; ensembles are at most ~1e6 values.
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double var = ss / (s.n - 1);
  s.variance = var;
  s.mean_stderr = std::sqrt(var / s.n);
  s.variance_stderr = var * std::sqrt(2.0 / (s.n - 1));
  return s;
}

}  // namespace rfmag
