#pragma once

// Filter -> synchronize -> CPA -> minimum-traces pipeline.
//
// The attack targets the last round. For byte j of the round-10 key the
// hypothesis of trace n is last_round_hypothesis(ct_n, shift_rows_source(j), g),
// i.e. the Hamming distance of the register byte overwritten by ciphertext
// byte shift_rows_source(j). A byte score is max |rho| over the window
// columns; the recovered master key comes from inverting the key schedule.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clockrand/aes.hpp"
#include "clockrand/trace.hpp"

namespace clockrand {

// ---------------------------------------------------------------------------
// Peaks and filtering

struct PeakParams {
  double k_sigma = 3.0;
  std::size_t min_separation = 4;  // samples
};

/// Local maxima above mean + k_sigma * stddev, taken greedily by amplitude
/// and kept at least min_separation apart. Ascending indices.
std::vector<std::size_t> detect_peaks(const Eigen::Ref<const Eigen::VectorXf>& x, const PeakParams& params);

enum class Removal : std::uint8_t { kept, failed, missed_window, extra_peaks, peaks_too_close, undersampled };
inline constexpr std::size_t kRemovalKinds = 6;
const char* to_string(Removal r);

struct FilterParams {
  double k_sigma = 3.0;
  std::size_t expected_peaks = aes::kRounds;
  /// Detection separation; defaults to max(1, oversampling / 8).
  std::optional<std::size_t> detection_separation;
  /// Adjacent peaks closer than this are rejected; defaults to oversampling / 4.
  std::optional<std::size_t> min_peak_separation;
  /// A period spanning fewer samples than this is under-sampled.
  double min_period_samples = 2.0;

  std::size_t detection_sep(std::size_t oversampling) const;
  std::size_t min_sep(std::size_t oversampling) const;
};

struct FilterResult {
  std::vector<std::size_t> kept;                // strictly increasing trace indices
  std::vector<std::vector<std::size_t>> peaks;  // peaks of each kept trace
  std::vector<Removal> reason;                  // one per input trace
  std::array<std::size_t, kRemovalKinds> counts{};
  std::size_t total = 0;
  double removed_fraction = 0.0;  // everything not kept, failures included
  double failed_fraction = 0.0;
};

FilterResult filter_traces(const TraceSet& ts, const FilterParams& params = {});

// ---------------------------------------------------------------------------
// Alignment

struct SyncParams {
  std::size_t round = aes::kRounds;  // 1..10
  /// Window columns before and after the anchor; default oversampling / 2.
  std::optional<std::size_t> before;
  std::optional<std::size_t> after;
};

struct AlignedMatrix {
  Eigen::MatrixXf rows;                   // traces x window
  std::size_t round_anchor = 0;           // column of the aligned peak
  std::vector<std::size_t> kept_indices;  // trace indices, strictly increasing
  std::vector<std::ptrdiff_t> shifts;     // peak offset relative to the first kept trace
  std::size_t dropped = 0;                // could not be shifted into the window
};

/// Places the round-th detected peak of every filtered trace on round_anchor.
AlignedMatrix synchronize(const TraceSet& ts, const FilterResult& filtered, const SyncParams& params = {});

/// Rows are the filtered traces as recorded, trigger-aligned, zero-padded to
/// the longest; round_anchor is unused (0).
AlignedMatrix unsynchronized(const TraceSet& ts, const FilterResult& filtered);

// ---------------------------------------------------------------------------
// Correlation

/// Pearson correlation with two-pass centring. Throws std::invalid_argument
/// unless the lengths match and are >= 2; returns nullopt when either input
/// is constant.
template <class DX, class DY>
std::optional<double> pearson(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson: need at least two samples");
  const auto xd = x.template cast<double>().eval();
  const auto yd = y.template cast<double>().eval();
  const auto n = static_cast<double>(xd.size());
  const auto dx = (xd.array() - xd.sum() / n).eval();
  const auto dy = (yd.array() - yd.sum() / n).eval();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return (dx * dy).sum() / std::sqrt(sxx * syy);
}

struct CpaParams {
  /// Column range [first, last) of the matrix to scan; whole width by default.
  std::optional<std::pair<std::size_t, std::size_t>> window;
  /// Master key; enables ranks.
  std::optional<aes::Key> true_key;
  /// Stop at the first byte whose true guess is not rank 1 (requires true_key).
  bool stop_on_failure = false;
};

struct CpaResult {
  std::array<std::array<float, 256>, 16> scores{};  // [round-10 key byte][guess]
  aes::Block last_round_key{};                      // argmax per byte
  aes::Key recovered_key{};
  std::array<bool, 16> undefined{};                 // hypothesis was constant for some guess
  std::optional<std::array<int, 16>> ranks;         // unset bytes are 0 after an early stop
  bool broken = false;                              // all 16 true bytes rank 1
  std::size_t n_traces = 0;
};

/// Rank of the true guess: 1 + number of other guesses scoring at least as high.
int rank_of(const std::array<float, 256>& scores, int true_guess);

CpaResult cpa_attack(const Eigen::Ref<const Eigen::MatrixXf>& samples, std::span<const aes::Block> ciphertexts,
                     const CpaParams& params = {});

inline CpaResult cpa_attack(const AlignedMatrix& am, std::span<const aes::Block> ciphertexts,
                            const CpaParams& params = {}) {
  return cpa_attack(am.rows, ciphertexts, params);
}

// ---------------------------------------------------------------------------
// Minimum traces

struct SearchResult {
  std::optional<std::size_t> min_traces;  // multiple of step
  std::size_t segment_start = 0;          // first row of the successful segment
  std::size_t attacks = 0;
};

/// Ascending grid N = step, 2*step, ... up to the row count; for each N the
/// contiguous segments [s, s+N) with s = 0, step, 2*step, ... are attacked in
/// order. The first success gives min_traces.
SearchResult min_traces_search(const Eigen::Ref<const Eigen::MatrixXf>& samples,
                               std::span<const aes::Block> ciphertexts, const aes::Key& true_key,
                               std::size_t step = 250, const CpaParams& cpa = {});

struct AttackParams {
  FilterParams filter;
  SyncParams sync;
  bool synchronize = true;
  std::size_t step = 250;
  std::optional<aes::Key> true_key;
  /// Run the grid search even if the attack on all aligned traces fails.
  bool search_when_full_fails = false;
};

struct AttackReport {
  std::size_t n_traces = 0;
  std::size_t n_kept = 0;     // after filtering
  std::size_t n_aligned = 0;  // after synchronization
  std::optional<std::size_t> min_traces;
  bool evaluated = false;  // a true key was available
  double removed_fraction = 0.0;
  double failed_fraction = 0.0;
  std::size_t max_delay_samples = 0;
  double max_delay_s = 0.0;
  std::array<std::size_t, kRemovalKinds> removal_counts{};
  bool synchronized = true;
  std::optional<CpaResult> full;  // attack on every aligned trace
  std::vector<std::string> notes;
};

AttackReport run_attack(const TraceSet& ts, const AttackParams& params);

}  // namespace clockrand
