#include "clockrand/duplication.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "clockrand/attack.hpp"
#include "clockrand/clock.hpp"

namespace clockrand {
namespace {

BigInt power(std::size_t base, std::size_t exp) {
  BigInt r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

CandidateBound make_bound(double f_lo, double f_hi, std::size_t n_traces) {
  if (n_traces < 1) throw std::invalid_argument("candidate bound: n_traces must be >= 1");
  CandidateBound b;
  b.f_lo_hz = f_lo;
  b.f_hi_hz = f_hi;
  b.per_trace = candidates_from_ratio(f_hi / f_lo);
  b.total = power(b.per_trace, n_traces);
  return b;
}

void append_frequencies(const FrequencySet& fs, const BandParams& p, std::uint64_t seed, std::vector<double>& out) {
  const auto w = simulate_mux_clock(fs, p.cycles, seed);
  const double floor_s = p.error_threshold_cycles * fs.base_period();
  for (double period : extract_periods(w)) {
    if (period >= floor_s) out.push_back(1.0 / period);
  }
}

double quantile(const std::vector<double>& sorted, double q) {
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
  return sorted[idx];
}

}  // namespace

std::size_t candidates_from_ratio(double ratio) {
  if (!(ratio >= 1.0)) throw std::invalid_argument("candidates_from_ratio: ratio must be >= 1");
  const double c = std::ceil(ratio) + 1.0;
  return static_cast<std::size_t>(std::clamp(c, static_cast<double>(kMinCandidates), static_cast<double>(kMaxCandidates)));
}

CandidateBound fundamental_candidate_bound(const FrequencySet& fs1, const FrequencySet* fs2, std::size_t n_traces) {
  fs1.validate();
  double lo = fs1.min_fundamental(), hi = fs1.max_fundamental();
  if (fs2) {
    fs2->validate();
    lo = std::min(lo, fs2->min_fundamental());
    hi = std::max(hi, fs2->max_fundamental());
  }
  return make_bound(lo, hi, n_traces);
}

CandidateBound peak_permutation_bound(const FrequencySet& fs1, const std::optional<FrequencySet>& fs2,
                                      std::size_t n_traces, const BandParams& params) {
  if (!(params.lo_quantile >= 0.0 && params.lo_quantile < params.hi_quantile && params.hi_quantile <= 1.0)) {
    throw std::invalid_argument("peak_permutation_bound: need 0 <= lo_quantile < hi_quantile <= 1");
  }
  std::vector<double> freqs;
  append_frequencies(fs1, params, derive_seed(params.seed, 1), freqs);
  if (fs2) append_frequencies(*fs2, params, derive_seed(params.seed, 2), freqs);
  if (freqs.empty()) throw std::invalid_argument("peak_permutation_bound: no usable output periods");
  std::sort(freqs.begin(), freqs.end());
  return make_bound(quantile(freqs, params.lo_quantile), quantile(freqs, params.hi_quantile), n_traces);
}

OverlapReport overlap_exploit(const TraceSet& ts, const OverlapParams& params) {
  if (ts.core_count != 2) throw std::invalid_argument("overlap_exploit: needs a dual-core trace set");
  OverlapReport rep;
  rep.candidates = params.candidates ? *params.candidates : peak_permutation_bound(ts.fs, ts.fs2, 1).per_trace;
  rep.success_without = 1.0 / static_cast<double>(rep.candidates);

  const PeakParams pk{params.k_sigma, std::max<std::size_t>(1, ts.oversampling / 8)};
  std::vector<std::vector<std::size_t>> peaks;
  std::vector<std::size_t> used;
  std::vector<float> heights;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts.traces[i].failed) continue;
    used.push_back(i);
    peaks.push_back(detect_peaks(ts.traces[i].samples, pk));
    for (auto p : peaks.back()) heights.push_back(ts.traces[i].samples[static_cast<Eigen::Index>(p)]);
  }
  rep.traces = used.size();
  if (rep.traces == 0 || heights.empty()) return rep;

  auto mid = heights.begin() + static_cast<std::ptrdiff_t>(heights.size() / 2);
  std::nth_element(heights.begin(), mid, heights.end());
  rep.single_peak_level = *mid;
  // A triangular pulse of half-width oversampling/8 samples drops by d/h at
  // distance d, so two pulses d apart sum to (2 - d/h) times one pulse.
  const double h = 0.125 * static_cast<double>(ts.oversampling);
  rep.overlap_threshold = rep.single_peak_level * (2.0 - params.coincidence_samples / h);

  std::size_t any = 0, first = 0, flanking = 0;
  double reduced_sum = 0.0, success_sum = 0.0;
  for (std::size_t k = 0; k < used.size(); ++k) {
    const auto& s = ts.traces[used[k]].samples;
    const auto& pk_idx = peaks[k];
    bool has = false, flank = false;
    const std::size_t region_start = pk_idx.size() > rep.candidates ? pk_idx.size() - rep.candidates : 0;
    for (std::size_t q = 0; q < pk_idx.size(); ++q) {
      if (s[static_cast<Eigen::Index>(pk_idx[q])] <= rep.overlap_threshold) continue;
      has = true;
      if (q == 0) ++first;
      if (q + 1 >= region_start) flank = true;
    }
    any += has ? 1 : 0;
    if (flank) {
      ++flanking;
      const auto reduced = std::min<std::size_t>(rep.candidates, kMinCandidates);
      reduced_sum += static_cast<double>(reduced);
      success_sum += 1.0 / static_cast<double>(reduced);
    }
  }
  const auto n = static_cast<double>(used.size());
  rep.overlap_fraction = static_cast<double>(any) / n;
  rep.first_round_overlap_fraction = static_cast<double>(first) / n;
  rep.flanking_fraction = static_cast<double>(flanking) / n;
  if (flanking > 0) {
    rep.mean_reduced_candidates = reduced_sum / static_cast<double>(flanking);
    rep.success_with = success_sum / static_cast<double>(flanking);
  }
  return rep;
}

double first_round_coincidence(const TraceSet& ts) {
  std::size_t n = 0, hits = 0;
  for (const auto& t : ts.traces) {
    if (t.failed || t.cores.size() != 2) continue;
    ++n;
    const double d = std::abs(t.cores[0].round_edges_s[0] - t.cores[1].round_edges_s[0]);
    hits += d < 0.5 * t.sample_period_s ? 1 : 0;
  }
  return n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
}

}  // namespace clockrand
