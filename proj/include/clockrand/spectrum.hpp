#pragma once

// Averaged power spectra of trace sets.
//
// Convention: every trace has its mean removed, is zero-padded to L, the next
// power of two >= the longest trace, and transformed with the unitary DFT
// X_k = L^-1/2 * sum_n x_n exp(-2 pi i k n / L). The one-sided power
// P_k = |X_k|^2, doubled for 0 < k < L/2, satisfies sum_k P_k = sum_n x_n^2.
// Power is summed into bins of width bin_hz (bin b covers [b, b+1) * bin_hz)
// and averaged over traces; a bin's magnitude is the square root of that mean
// power, so the sum of squared magnitudes equals the mean time-domain energy.

#include <Eigen/Core>
#include <vector>

#include "clockrand/trace.hpp"

namespace clockrand {

struct SpectrumHistogram {
  double bin_hz = 0.0;
  std::vector<double> magnitudes;
  double resolution_hz = 0.0;  // sample_rate / fft_length
  std::size_t fft_length = 0;
  double sample_rate_hz = 0.0;
  std::size_t n_traces = 0;
  double time_energy = 0.0;  // mean over traces of the mean-removed energy

  double bin_low_hz(std::size_t b) const { return static_cast<double>(b) * bin_hz; }
  double bin_centre_hz(std::size_t b) const { return (static_cast<double>(b) + 0.5) * bin_hz; }
  double energy() const;
};

/// Throws std::invalid_argument for an empty set or bin_hz <= 0.
SpectrumHistogram fft_spectrum(const std::vector<Eigen::VectorXf>& traces, double sample_period_s, double bin_hz);
SpectrumHistogram fft_spectrum(const TraceSet& ts, double bin_hz);

struct SpectralPeak {
  std::size_t bin = 0;
  double frequency_hz = 0.0;  // bin centre
  double magnitude = 0.0;
};

/// Local maxima of the histogram (DC bin excluded), strongest first.
std::vector<SpectralPeak> top_peaks(const SpectrumHistogram& h, std::size_t count = 10);

}  // namespace clockrand
