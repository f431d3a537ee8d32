#pragma once

// Synthetic power traces driven by the randomized clock.
//
// One trace covers one encryption. A trigger arrives at a base edge of core
// 1, chosen uniformly among `start_cycle_span` cycles of the free-running
// clocks, so source phases at the trigger differ from trace to trace. The
// plaintext is latched at the trigger; the next ten output edges clock rounds
// 1..10 and edge k deposits a pulse of height alpha * HD(states[k-1],
// states[k]) centred on the edge. Sampling starts `pretrigger` samples before
// the trigger with period T_b / oversampling and lasts `capture_cycles` base
// periods after it; pulses outside that window are lost, as on a scope with a
// fixed record length.
//
// A dual trace sums two cores that tap the same four source oscillators
// through separate muxes driven by different base clocks, both triggered by
// the same event. Noise is added once, after summation.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "clockrand/aes.hpp"
#include "clockrand/clock.hpp"
#include "clockrand/frequency_set.hpp"

namespace clockrand {

enum class PulseShape : std::uint8_t { triangular, rectangular, raised_cosine };

struct SynthParams {
  std::size_t oversampling = 32;  // samples per base period of core 1
  double noise_sigma = 0.0;
  double alpha = 1.0;
  PulseShape pulse = PulseShape::triangular;
  double pulse_half_width_cycles = 0.125;
  /// Any round period below this fraction of T_b fails the encryption.
  double error_threshold_cycles = 0.25;
  std::size_t capture_cycles = 24;
  /// Samples recorded before the trigger; defaults to oversampling / 2.
  std::optional<std::size_t> pretrigger_samples;
  std::uint64_t start_cycle_span = 1ULL << 20;
  std::size_t cycle_cap = 64 * aes::kRounds;
  /// Dual traces: both muxes select among the same physical oscillators.
  bool shared_sources = true;

  std::size_t pretrigger() const { return pretrigger_samples.value_or(oversampling / 2); }
  std::size_t sample_count() const { return pretrigger() + capture_cycles * oversampling; }
  void validate() const;
};

/// Ground truth of one core; kept in memory only, not serialized.
struct CoreTiming {
  std::array<double, aes::kRounds> round_edges_s{};  // relative to the trigger
  double base_hz = 0.0;
  aes::Block ciphertext{};  // true ciphertext of this core
  bool failed = false;      // a round period fell below the error threshold
  double min_period_s = 0.0;
};

struct PowerTrace {
  Eigen::VectorXf samples;
  double sample_period_s = 0.0;
  aes::Block plaintext{};
  aes::Block ciphertext{};  // returned by core 1; random when failed
  bool failed = false;
  std::uint8_t core_count = 1;
  std::vector<CoreTiming> cores;
};

struct TraceSet {
  std::vector<PowerTrace> traces;
  aes::Key key{};
  std::optional<aes::Key> key2;
  FrequencySet fs;
  std::optional<FrequencySet> fs2;
  std::uint32_t oversampling = 0;
  double noise_sigma = 0.0;
  double sample_period_s = 0.0;
  std::uint8_t core_count = 1;

  std::size_t size() const { return traces.size(); }
  double failed_fraction() const;
  /// Throws std::invalid_argument if the shared-field invariants are broken.
  void validate() const;
};

/// Equality over everything the binary format carries (not CoreTiming).
bool same_recorded_content(const TraceSet& a, const TraceSet& b);

/// Timing of one core's encryption after a trigger at absolute time trigger_s.
CoreTiming time_encryption(const FrequencySet& fs, const ClockOptions& clock, double trigger_s, Rng& rng,
                           const SynthParams& params);

/// Noiseless contribution of one core: pulses at the given round edges,
/// sampled on the trace grid of `sample_period_s`.
Eigen::VectorXf render_core(const CoreTiming& timing, const aes::RoundTrace& states, double base_period_s,
                            double sample_period_s, const SynthParams& params);

PowerTrace generate_trace(const FrequencySet& fs, const aes::Key& key, const aes::Block& plaintext,
                          const SynthParams& params, std::uint64_t seed);

/// Throws std::invalid_argument when the base frequencies coincide.
PowerTrace generate_dual_trace(const FrequencySet& fs1, const FrequencySet& fs2, const aes::Key& key1,
                               const aes::Key& key2, const aes::Block& plaintext, const SynthParams& params,
                               std::uint64_t seed);

enum class PlaintextMode : std::uint8_t { random, fixed };

struct SetSpec {
  FrequencySet fs;
  aes::Key key{};
  std::optional<FrequencySet> fs2;  // present for a dual-core set
  std::optional<aes::Key> key2;
  std::size_t n_traces = 0;
  PlaintextMode plaintext_mode = PlaintextMode::random;
  aes::Block fixed_plaintext{};
  std::uint64_t seed = 1;
};

/// Trace i uses seed derive_seed(spec.seed, i), independent of generation order.
TraceSet generate_set(const SetSpec& spec, const SynthParams& params);

}  // namespace clockrand
