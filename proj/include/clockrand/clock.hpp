#pragma once

// Randomized mux clock: waveform simulation, period statistics and the
// analytic edge-probability model.
//
// Time model. Every source clock i is free running with period T_i and has a
// rising edge at offset_i + k*T_i; it is high for the first duty*T_i of each
// period. The base clock has rising edges at base_offset + m*T_b. At every
// base edge the mux draws a source uniformly at random and holds it for the
// whole base cycle; the output is the level of the held source. Output rising
// edges are therefore
//   * every rising edge of the held source inside the cycle, and
//   * the base edge itself when the output was low just before it and the
//     newly held source is high at it.
// Missing edges (slow sources), double edges (fast sources) and switch edges
// all follow from this rule; none of them is special-cased.
//
// Source selection uses Rng::index(4) on a std::mt19937_64 stream.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "clockrand/frequency_set.hpp"
#include "clockrand/rng.hpp"

namespace clockrand {

/// Edges closer than this are considered the same instant.
inline constexpr double kCoincidenceTolerance = 1e-12;

struct ClockOptions {
  /// Source i has a rising edge at source_offset_s[i] + k * T_i.
  std::array<double, kSources> source_offset_s{};
  /// Base clock rising edges at base_offset_s + m * T_b.
  double base_offset_s = 0.0;
  /// Index m of the first simulated base cycle.
  std::int64_t first_cycle = 0;
  double coincidence_tol_s = kCoincidenceTolerance;
};

enum class EdgeOrigin : std::uint8_t {
  source,     // rising edge of the held source
  selection,  // base edge that switched a low output to a high source
};

struct OutputWaveform {
  std::vector<double> edges;  // strictly increasing, seconds
  std::vector<EdgeOrigin> origins;
  std::vector<std::uint8_t> source_per_cycle;
  std::size_t n_base_cycles = 0;
  double base_period_s = 0.0;
  double start_s = 0.0;  // time of the first simulated base edge

  double end_s() const { return start_s + static_cast<double>(n_base_cycles) * base_period_s; }
};

/// Cycle-by-cycle mux simulator. Holds the source levels and the previous
/// selection; the output is treated as low before the first simulated cycle.
class MuxClock {
 public:
  MuxClock(const FrequencySet& fs, const ClockOptions& opts);

  /// Simulates the next base cycle with a selection drawn from `rng`,
  /// appending its output edges. Returns the selected source.
  std::uint8_t step(Rng& rng, std::vector<double>& edges, std::vector<EdgeOrigin>* origins = nullptr);

  /// Same, with an explicit selection.
  void step_with(std::uint8_t source, std::vector<double>& edges, std::vector<EdgeOrigin>* origins = nullptr);

  std::int64_t next_cycle() const { return cycle_; }
  double cycle_start(std::int64_t m) const { return opts_.base_offset_s + static_cast<double>(m) * base_period_; }

  /// Level of source i at t, right-continuous (high at its own rising edge).
  bool source_high(std::size_t i, double t) const;
  /// Level of source i just before t.
  bool source_high_before(std::size_t i, double t) const;
  /// Number of rising edges of source i in [t0, t1).
  std::size_t source_edges_in(std::size_t i, double t0, double t1) const;

 private:
  double phase(std::size_t i, double t) const;

  std::array<double, kSources> period_{};
  double base_period_ = 0.0;
  double duty_ = 0.5;
  ClockOptions opts_;
  std::int64_t cycle_ = 0;
  std::optional<std::uint8_t> previous_;
};

/// Simulates n_base_cycles cycles starting at opts.first_cycle.
/// Throws std::invalid_argument for n_base_cycles == 0 or an invalid set.
OutputWaveform simulate_mux_clock(const FrequencySet& fs, std::size_t n_base_cycles, std::uint64_t seed,
                                  const ClockOptions& opts = {});

/// Output edges strictly after `trigger_s`, simulating from the base cycle
/// containing the trigger until `count` edges exist. Throws StalledClockError
/// when `cycle_cap` cycles pass without reaching `count`.
std::vector<double> edges_after(const FrequencySet& fs, const ClockOptions& opts, double trigger_s,
                                std::size_t count, Rng& rng, std::size_t cycle_cap);

/// Successive edge differences; empty when fewer than two edges exist.
std::vector<double> extract_periods(const OutputWaveform& w);

struct PeriodHistogram {
  double bin_width_s = 0.0;
  std::map<std::int64_t, std::uint64_t> bins;
  std::uint64_t total_periods = 0;
  std::uint64_t unique_bins = 0;
};

/// Bins periods at floor(period / bin_width_s). Throws for bin_width_s <= 0.
PeriodHistogram period_histogram(const std::vector<double>& periods, double bin_width_s);

/// Bin width used for unique-period counts: T_b / 1000.
inline double reference_bin_width(const FrequencySet& fs) { return fs.base_period() / 1000.0; }

// ---------------------------------------------------------------------------
// Analytic model

/// Probability that a source of period t_i has a rising edge inside one base
/// period t_b: t_b / t_i when t_i >= t_b, else 1.
double rising_edge_probability(double t_i, double t_b);

struct ClampedProbability {
  double value = 0.0;
  bool clamped = false;
};

/// Probability of a second source edge within one base period:
/// 0 when t_i > t_b, else (t_b - t_i) / t_i, clamped to 1 (and flagged)
/// once t_i < t_b / 2.
ClampedProbability double_edge_probability(double t_i, double t_b);

struct EdgeCountDistribution {
  std::array<double, kSources + 1> p{};  // P(exactly k of the 4 sources rise)
};

/// Distribution of the number of sources rising in one base period, given
/// independent per-source edge probabilities.
EdgeCountDistribution edge_count_distribution(const std::array<double, kSources>& p);

/// Distinct two-cycle permutations when n_missing sources have no rising
/// edge in the current base period (16 when none is missing).
int permutation_count(int n_missing);

/// Number of distinct completion times of `rounds` rounds clocked by
/// `n_freqs` frequencies: C(rounds + n_freqs - 1, rounds).
/// Throws std::overflow_error instead of wrapping.
std::uint64_t completion_time_count(std::uint64_t n_freqs, std::uint64_t rounds);

// ---------------------------------------------------------------------------
// Empirical counterparts of the analytic model

struct SourcePresence {
  std::array<std::uint64_t, kSources> cycles_selected{};
  std::array<std::uint64_t, kSources> cycles_with_edge{};
};

/// For each source, how many cycles held it and how many of those contain at
/// least one of its own rising edges on the output.
SourcePresence selected_edge_presence(const OutputWaveform& w);

/// Histogram over base cycles of how many of the four sources rise in the
/// cycle, for cycles [opts.first_cycle, opts.first_cycle + n_cycles).
std::array<std::uint64_t, kSources + 1> joint_edge_counts(const FrequencySet& fs, std::size_t n_cycles,
                                                          const ClockOptions& opts = {});

// ---------------------------------------------------------------------------
// Timing overhead and error risk

struct OverheadParams {
  std::size_t rounds = 10;
  std::size_t n_encryptions = 1000;
  std::uint64_t seed = 1;
  /// Periods shorter than error_threshold_cycles * T_b count as error risk.
  double error_threshold_cycles = 0.25;
  /// Encryptions start at a base edge drawn uniformly from this many cycles.
  std::uint64_t start_cycle_span = 1ULL << 20;
  std::size_t cycle_cap_per_round = 64;
};

struct OverheadReport {
  double mean_overhead = 0.0;
  double worst_overhead = 0.0;
  double max_delay_s = 0.0;
  double mean_delay_s = 0.0;
  double error_risk = 0.0;
  std::uint64_t short_periods = 0;
  std::uint64_t total_periods = 0;
  double error_threshold_s = 0.0;
};

/// Completion time of each run is the time of its rounds-th output edge after
/// the start edge; overheads are relative to rounds * T_b.
OverheadReport overhead_and_error(const FrequencySet& fs, const OverheadParams& params);

}  // namespace clockrand
