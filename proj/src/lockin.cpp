#include "rfmag/lockin.hpp"

#include <cmath>
#include <complex>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

#include "rfmag/errors.hpp"

namespace rfmag {
namespace {

std::size_t sample_count(double duration, double sample_rate) {
  return static_cast<std::size_t>(std::llround(duration * sample_rate));
}

// FFTW planning is not thread safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::complex<double>> forward_fft(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<double> in(x);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

std::vector<double> inverse_fft(std::vector<std::complex<double>> spectrum, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(spectrum.data()), out.data(),
                                FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (auto& v : out) v /= n;
  return out;
}

}  // namespace

std::vector<double> sample_mode(const ModeFunction& mode, double sample_rate) {
  const std::size_t n = sample_count(mode.duration, sample_rate);
  if (n < 2) throw std::invalid_argument("mode function spans fewer than two samples");
  const double s = mode.sign == ModeSign::falling ? -1.0 : 1.0;
  const double t_ref = mode.sign == ModeSign::falling ? 0.0 : mode.duration;
  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) {
    f[k] = std::exp(s * mode.gamma * (k / sample_rate - t_ref));
  }
  double integral = 0.0;
  for (double v : f) integral += v * v;
  integral -= 0.5 * (f.front() * f.front() + f.back() * f.back());
  integral /= sample_rate;
  const double norm = 1.0 / std::sqrt(integral);
  for (auto& v : f) v *= norm;
  return f;
}

LockinReference LockinReference::make(double omega, const ModeFunction& mode,
                                      double sample_rate) {
  LockinReference ref;
  ref.sample_rate = sample_rate;
  ref.omega = omega;
  ref.mode = mode;
  const auto f = sample_mode(mode, sample_rate);
  ref.cos_weight.resize(f.size());
  ref.sin_weight.resize(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double phase = omega * (k / sample_rate);
    ref.cos_weight[k] = std::numbers::sqrt2 * std::cos(phase) * f[k];
    ref.sin_weight[k] = std::numbers::sqrt2 * std::sin(phase) * f[k];
  }
  return ref;
}

void check_nyquist(double omega, double sample_rate, double detection_bandwidth) {
  const double highest = omega / (2.0 * std::numbers::pi) + detection_bandwidth;
  if (!(sample_rate > 2.0 * highest)) {
    std::ostringstream msg;
    msg << "sample rate " << sample_rate << " Hz is below Nyquist for " << highest << " Hz";
    throw ConfigError(msg.str());
  }
}

TimeSeries synthesize_photocurrent(const AtomicSignal& signal, const LockinReference& ref,
                                   double photon_rate, Rng& rng) {
  if (photon_rate < 0.0) throw std::invalid_argument("photon rate must be >= 0");
  const double var_y = signal.variance_y < 0.0 ? signal.variance : signal.variance_y;
  const double z = signal.mean_z + std::sqrt(std::max(signal.variance, 0.0)) * standard_normal(rng);
  const double y = signal.mean_y + std::sqrt(std::max(var_y, 0.0)) * standard_normal(rng);

  TimeSeries out;
  out.sample_rate = ref.sample_rate;
  out.reference_rate = photon_rate > 0.0 ? photon_rate : 1.0;
  const std::size_t n = ref.cos_weight.size();
  out.samples.resize(n);
  const double noise_sd = std::sqrt(photon_rate / (2.0 * ref.sample_rate));
  const double scale = std::sqrt(out.reference_rate) / ref.sample_rate;
  for (std::size_t k = 0; k < n; ++k) {
    const double sig = scale * (z * ref.cos_weight[k] + y * ref.sin_weight[k]);
    out.samples[k] = sig + noise_sd * standard_normal(rng);
  }
  return out;
}

TimeSeries synthesize_photocurrent(const AtomicSignal& signal, const SynthesisParams& params,
                                   Rng& rng) {
  check_nyquist(params.omega, params.sample_rate);
  const ModeFunction envelope =
      params.envelope.value_or(ModeFunction{0.0, ModeSign::falling, params.duration});
  LockinReference ref = LockinReference::make(params.omega, envelope, params.sample_rate);
  const std::size_t n = sample_count(params.duration, params.sample_rate);
  // Envelope shorter than the record: signal is zero afterwards.
  ref.cos_weight.resize(n, 0.0);
  ref.sin_weight.resize(n, 0.0);
  return synthesize_photocurrent(signal, ref, params.photon_rate, rng);
}

Quadratures lockin_demodulate(const TimeSeries& series, const LockinReference& ref) {
  if (ref.sample_rate != series.sample_rate) {
    throw std::invalid_argument("lock-in reference and series sample rates differ");
  }
  const std::size_t n = ref.cos_weight.size();
  if (n > series.samples.size()) {
    std::ostringstream msg;
    msg << "mode duration " << ref.mode.duration << " s exceeds series duration "
        << series.duration() << " s";
    throw std::invalid_argument(msg.str());
  }
  double c = 0.0, s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    c += series.samples[k] * ref.cos_weight[k];
    s += series.samples[k] * ref.sin_weight[k];
  }
  const double norm = 1.0 / std::sqrt(series.reference_rate);
  return {c * norm, s * norm};
}

Quadratures lockin_demodulate(const TimeSeries& series, double omega, const ModeFunction& mode) {
  return lockin_demodulate(series, LockinReference::make(omega, mode, series.sample_rate));
}

std::vector<SpectrumBin> power_spectrum(const TimeSeries& series) {
  const std::size_t n = series.samples.size();
  if (n == 0) throw std::invalid_argument("power spectrum of an empty series");
  const auto fft = forward_fft(series.samples);
  std::vector<SpectrumBin> out(fft.size());
  for (std::size_t k = 0; k < fft.size(); ++k) {
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    const double p = std::norm(fft[k]) / static_cast<double>(n);
    out[k] = {k * series.sample_rate / n, unpaired ? p : 2.0 * p};
  }
  return out;
}

TimeSeries band_limit(const TimeSeries& series, double center_hz, double bandwidth_hz) {
  const std::size_t n = series.samples.size();
  if (n == 0) return series;
  auto fft = forward_fft(series.samples);
  for (std::size_t k = 0; k < fft.size(); ++k) {
    const double f = k * series.sample_rate / n;
    if (std::abs(f - center_hz) > bandwidth_hz) fft[k] = 0.0;
  }
  TimeSeries out = series;
  out.samples = inverse_fft(std::move(fft), static_cast<int>(n));
  return out;
}

void write_csv(std::ostream& out, const TimeSeries& series) {
  out << "t_or_f,value\n" << std::setprecision(12);
  for (std::size_t k = 0; k < series.samples.size(); ++k) {
    out << k / series.sample_rate << ',' << series.samples[k] << '\n';
  }
}

void write_csv(std::ostream& out, std::span<const SpectrumBin> spectrum) {
  out << "t_or_f,value\n" << std::setprecision(12);
  for (const auto& bin : spectrum) out << bin.frequency << ',' << bin.power << '\n';
}

}  // namespace rfmag
