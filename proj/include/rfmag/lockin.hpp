#pragma once

// Time-domain photocurrent synthesis, lock-in demodulation with exponential
// temporal modes, and periodograms.
//
// A TimeSeries holds photocurrent in photons per sample. Shot noise of a
// photon rate R has variance R / (2 fs) per sample. `reference_rate` is the
// rate used to normalize demodulated quadratures so that pure shot noise at
// that rate gives variance 1/2; a signal quadrature of amplitude a in the
// mode appears as a after demodulation.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rfmag/magnetometer.hpp"
#include "rfmag/rng.hpp"

namespace rfmag {

struct TimeSeries {
  double sample_rate = 0.0;     // Hz
  double reference_rate = 1.0;  // photons / s
  std::vector<double> samples;

  double duration() const { return samples.size() / sample_rate; }
};

struct ModeFunction {
  double gamma = 0.0;  // 1/s
  ModeSign sign = ModeSign::falling;
  double duration = 0.0;  // s
};

/// Mode amplitudes on the grid t_k = k / fs, normalized so the trapezoid rule
/// gives integral f^2 dt = 1.
std::vector<double> sample_mode(const ModeFunction& mode, double sample_rate);

/// Demodulation weights sqrt(2) cos(Omega t) f(t) and sqrt(2) sin(Omega t) f(t)
/// on the sample grid. Built once and reused across shots.
struct LockinReference {
  double sample_rate = 0.0;
  double omega = 0.0;
  ModeFunction mode;
  std::vector<double> cos_weight;
  std::vector<double> sin_weight;

  static LockinReference make(double omega, const ModeFunction& mode, double sample_rate);
};

/// Per-shot atomic quadratures as they appear in the light mode: the c and s
/// amplitudes are drawn from N(mean, variance) once per shot.
struct AtomicSignal {
  double mean_y = 0.0;  // sin quadrature
  double mean_z = 0.0;  // cos quadrature
  double variance = 0.0;
  double variance_y = -1.0;  // < 0: same as variance
};

struct SynthesisParams {
  double omega = 0.0;        // rad/s
  double photon_rate = 0.0;  // photons/s
  double duration = 0.0;     // s
  double sample_rate = 0.0;  // Hz
  /// Temporal envelope carried by the signal; flat over `duration` when absent.
  std::optional<ModeFunction> envelope;
};

/// Throws ConfigError if the sample rate is below Nyquist for the carrier plus
/// `detection_bandwidth`.
void check_nyquist(double omega, double sample_rate, double detection_bandwidth = 0.0);

TimeSeries synthesize_photocurrent(const AtomicSignal& signal, const SynthesisParams& params,
                                   Rng& rng);

/// Same as above with precomputed envelope tables (envelope taken from `ref`).
TimeSeries synthesize_photocurrent(const AtomicSignal& signal, const LockinReference& ref,
                                   double photon_rate, Rng& rng);

struct Quadratures {
  double s2c = 0.0;
  double s2s = 0.0;
};

Quadratures lockin_demodulate(const TimeSeries& series, double omega, const ModeFunction& mode);
Quadratures lockin_demodulate(const TimeSeries& series, const LockinReference& ref);

struct SpectrumBin {
  double frequency;  // Hz
  double power;
};

/// One-sided periodogram. Powers sum to the sum of squared samples.
std::vector<SpectrumBin> power_spectrum(const TimeSeries& series);

/// Brick-wall band limit to [center - bandwidth, center + bandwidth] Hz.
TimeSeries band_limit(const TimeSeries& series, double center_hz, double bandwidth_hz);

void write_csv(std::ostream& out, const TimeSeries& series);
void write_csv(std::ostream& out, std::span<const SpectrumBin> spectrum);

}  // namespace rfmag
