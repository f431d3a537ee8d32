#pragma once

#include <array>
#include <string>
#include <vector>

namespace clockrand {

inline constexpr std::size_t kSources = 4;

/// Configuration of the randomized clock: a base clock that triggers
/// reselection and the four free-running source clocks the mux picks from.
struct FrequencySet {
  std::string label;
  double base_hz = 0.0;
  std::array<double, kSources> fundamentals_hz{};
  double duty_cycle = 0.5;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  double base_period() const { return 1.0 / base_hz; }
  double period(std::size_t source) const { return 1.0 / fundamentals_hz.at(source); }
  double max_fundamental() const;
  double min_fundamental() const;

  friend bool operator==(const FrequencySet&, const FrequencySet&) = default;
};

/// The seven frequency groups characterised in the simulation and hardware
/// tables, base 10 MHz.
const std::vector<FrequencySet>& reference_sets();

/// Looks up a reference set by label; throws std::out_of_range.
const FrequencySet& reference_set(const std::string& label);

/// All four sources at the base frequency: the unrandomized clock.
FrequencySet fixed_clock(double base_hz);

}  // namespace clockrand
