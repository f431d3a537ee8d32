#pragma once

// Brute-force bound for the duplicated-core countermeasure and the overlap
// peaks that weaken it.
//
// With two cores on unrelated random clocks an attacker does not know which
// peak of a trace is the attacked core's last round; the number of plausible
// positions per trace is c = clamp(ceil(f_hi / f_lo) + 1, 2, 11), and n
// traces need c^n guesses. Two versions of (f_lo, f_hi) are offered:
//   * fundamental_candidate_bound: slowest and fastest fundamental;
//   * peak_permutation_bound: the 5th and 95th percentile of the simulated
//     output frequencies, ignoring periods below the encryption-error
//     threshold (those encryptions fail and never reach the attacker).

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>

#include "clockrand/frequency_set.hpp"
#include "clockrand/trace.hpp"

namespace clockrand {

using BigInt = boost::multiprecision::cpp_int;

inline constexpr std::size_t kMinCandidates = 2;
inline constexpr std::size_t kMaxCandidates = aes::kRounds + 1;

/// clamp(ceil(ratio) + 1, 2, 11). Throws for ratio < 1 or NaN.
std::size_t candidates_from_ratio(double ratio);

struct CandidateBound {
  std::size_t per_trace = kMinCandidates;
  BigInt total = 1;  // per_trace ^ n_traces
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;
};

CandidateBound fundamental_candidate_bound(const FrequencySet& fs1, const FrequencySet* fs2, std::size_t n_traces);

struct BandParams {
  std::size_t cycles = 32000;
  std::uint64_t seed = 1;
  double lo_quantile = 0.05;
  double hi_quantile = 0.95;
  double error_threshold_cycles = 0.25;
};

CandidateBound peak_permutation_bound(const FrequencySet& fs1, const std::optional<FrequencySet>& fs2,
                                      std::size_t n_traces, const BandParams& params = {});

struct OverlapParams {
  /// Candidate positions for the last peak; derived from the set when unset.
  std::optional<std::size_t> candidates;
  double k_sigma = 3.0;
  /// Distance in samples at which two coincident pulses still count as one
  /// overlap; the summed peak of two typical pulses this far apart sets the
  /// detection threshold.
  double coincidence_samples = 0.5;
};

struct OverlapReport {
  std::size_t traces = 0;                  // non-failed traces examined
  double overlap_fraction = 0.0;           // traces with any overlap peak
  double first_round_overlap_fraction = 0.0;
  double flanking_fraction = 0.0;          // overlap in or next to the candidate region
  std::size_t candidates = 0;
  double mean_reduced_candidates = 0.0;    // over flanking traces
  double success_without = 0.0;            // 1 / candidates
  double success_with = 0.0;               // mean over flanking traces
  double single_peak_level = 0.0;          // median detected peak height
  double overlap_threshold = 0.0;
};

/// Throws std::invalid_argument for single-core sets.
OverlapReport overlap_exploit(const TraceSet& ts, const OverlapParams& params = {});

/// Ground truth from in-memory timing: fraction of non-failed dual traces
/// whose first-round edges lie within half a sample of each other.
double first_round_coincidence(const TraceSet& ts);

}  // namespace clockrand
