#include "clockrand/spectrum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

namespace clockrand {
namespace {

// A frequency on a bin boundary belongs to the upper bin despite rounding.
std::size_t bin_of(double f_hz, double bin_hz) {
  return static_cast<std::size_t>(std::floor(f_hz / bin_hz * (1.0 + 1e-12)));
}

}  // namespace

double SpectrumHistogram::energy() const {
  double e = 0.0;
  for (double m : magnitudes) e += m * m;
  return e;
}

SpectrumHistogram fft_spectrum(const std::vector<Eigen::VectorXf>& traces, double sample_period_s, double bin_hz) {
  if (traces.empty()) throw std::invalid_argument("fft_spectrum: empty trace set");
  if (!(bin_hz > 0.0)) throw std::invalid_argument("fft_spectrum: bin width must be positive");
  if (!(sample_period_s > 0.0)) throw std::invalid_argument("fft_spectrum: sample period must be positive");
  Eigen::Index longest = 0;
  for (const auto& t : traces) longest = std::max(longest, t.size());
  if (longest < 2) throw std::invalid_argument("fft_spectrum: traces need at least two samples");

  SpectrumHistogram h;
  h.bin_hz = bin_hz;
  h.fft_length = std::bit_ceil(static_cast<std::size_t>(longest));
  h.sample_rate_hz = 1.0 / sample_period_s;
  h.resolution_hz = h.sample_rate_hz / static_cast<double>(h.fft_length);
  h.n_traces = traces.size();
  const std::size_t len = h.fft_length;
  const std::size_t half = len / 2;
  const auto n_bins = bin_of(static_cast<double>(half) * h.resolution_hz, bin_hz) + 1;
  std::vector<double> power(n_bins, 0.0);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> x(len);
  std::vector<std::complex<double>> spec;
  double energy = 0.0;
  for (const auto& t : traces) {
    const double mean = t.size() > 0 ? t.cast<double>().mean() : 0.0;
    std::fill(x.begin(), x.end(), 0.0);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      x[static_cast<std::size_t>(i)] = static_cast<double>(t[i]) - mean;
      energy += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    }
    fft.fwd(spec, x);
    for (std::size_t k = 0; k <= half; ++k) {
      double p = std::norm(spec[k]) / static_cast<double>(len);
      if (k != 0 && k != half) p *= 2.0;
      const auto b = std::min(n_bins - 1, bin_of(static_cast<double>(k) * h.resolution_hz, bin_hz));
      power[b] += p;
    }
  }
  const auto n = static_cast<double>(traces.size());
  h.time_energy = energy / n;
  h.magnitudes.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) h.magnitudes[b] = std::sqrt(power[b] / n);
  return h;
}

SpectrumHistogram fft_spectrum(const TraceSet& ts, double bin_hz) {
  std::vector<Eigen::VectorXf> traces;
  traces.reserve(ts.size());
  for (const auto& t : ts.traces) traces.push_back(t.samples);
  return fft_spectrum(traces, ts.sample_period_s, bin_hz);
}

std::vector<SpectralPeak> top_peaks(const SpectrumHistogram& h, std::size_t count) {
  std::vector<SpectralPeak> peaks;
  const auto& m = h.magnitudes;
  for (std::size_t b = 1; b < m.size(); ++b) {
    const double right = b + 1 < m.size() ? m[b + 1] : 0.0;
    if (m[b] > 0.0 && m[b] >= m[b - 1] && m[b] > right) peaks.push_back({b, h.bin_centre_hz(b), m[b]});
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const auto& a, const auto& b) { return a.magnitude > b.magnitude; });
  if (peaks.size() > count) peaks.resize(count);
  return peaks;
}

}  // namespace clockrand
