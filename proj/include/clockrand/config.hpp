#pragma once

// Experiment configuration, INI syntax:
//
//   [experiment]
//   n_base_cycles = 32000
//   n_traces = 30000
//   noise_sigma = 2
//   oversampling = 32
//   seed = 1
//   core_count = 1              ; 2 needs key2 and base2_hz
//   key = 2b7e151628aed2a6abf7158809cf4f3c
//   reference_sets = true       ; adds the seven built-in groups
//
//   [set.1]
//   label = Previous work
//   base_hz = 10e6
//   f1 = 11.9713e6
//   ...
//
// Unknown sections and keys are errors. Sets are taken in the order of their
// [set.N] indices, after the built-in ones.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "clockrand/aes.hpp"
#include "clockrand/frequency_set.hpp"
#include "clockrand/trace.hpp"

namespace clockrand {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::vector<FrequencySet> sets;
  std::size_t n_base_cycles = 32000;
  std::size_t n_traces = 30000;
  std::size_t n_encryptions = 1000;
  double noise_sigma = 0.0;
  double alpha = 1.0;
  std::size_t oversampling = 32;
  std::size_t capture_cycles = 24;
  std::uint64_t seed = 1;
  int core_count = 1;
  std::optional<aes::Key> key;
  std::optional<aes::Key> key2;
  std::optional<double> base2_hz;  // base clock of the second core
  bool shared_sources = true;
  PlaintextMode plaintext_mode = PlaintextMode::random;
  aes::Block fixed_plaintext{};
  double error_threshold = 0.25;  // fraction of T_b
  double peak_k = 3.0;
  std::optional<std::size_t> min_peak_separation;
  std::size_t step = 250;
  std::optional<double> bin_hz;
  std::string output_dir = "out";

  SynthParams synth_params() const;
  /// Second-core frequency set for set i (same sources, base2_hz).
  FrequencySet second_core(const FrequencySet& fs) const;
};

/// Throws ConfigError naming the offending section/key or line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks the cross-field invariants; parse_config calls it.
void validate(const ExperimentConfig& cfg);

/// Normalised INI rendering; equal configs give equal text.
std::string canonical_text(const ExperimentConfig& cfg);

}  // namespace clockrand
