#include "clockrand/frequency_set.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clockrand {

void FrequencySet::validate() const {
  if (!(std::isfinite(base_hz) && base_hz > 0.0)) {
    throw std::invalid_argument("frequency set '" + label + "': base_hz must be positive");
  }
  for (std::size_t i = 0; i < kSources; ++i) {
    const double f = fundamentals_hz[i];
    if (!(std::isfinite(f) && f > 0.0)) {
      throw std::invalid_argument("frequency set '" + label + "': f" + std::to_string(i + 1) +
                                  " must be positive");
    }
  }
  if (!(duty_cycle > 0.0 && duty_cycle < 1.0)) {
    throw std::invalid_argument("frequency set '" + label + "': duty_cycle must lie in (0, 1)");
  }
}

double FrequencySet::max_fundamental() const {
  return *std::max_element(fundamentals_hz.begin(), fundamentals_hz.end());
}

double FrequencySet::min_fundamental() const {
  return *std::min_element(fundamentals_hz.begin(), fundamentals_hz.end());
}

const std::vector<FrequencySet>& reference_sets() {
  static const std::vector<FrequencySet> sets = [] {
    constexpr double MHz = 1e6;
    auto make = [](std::string label, double f1, double f2, double f3, double f4) {
      return FrequencySet{std::move(label), 10.0 * MHz, {f1 * MHz, f2 * MHz, f3 * MHz, f4 * MHz}, 0.5};
    };
    return std::vector<FrequencySet>{
        make("Previous work", 11.9713, 7.7315, 9.2778, 12.6515),
        make("Two low, one above half, one lower than half", 9.5917, 9.0317, 6.2777, 4.0517),
        make("Two high, two lower than half", 3.6719, 4.4021, 12.9781, 14.4317),
        make("Three high, one lower than half", 4.7717, 11.5019, 12.0779, 13.5319),
        make("Three low, one lower than half", 9.2003, 9.3001, 9.4001, 4.4003),
        make("Three high, one above half", 5.9009, 11.5019, 12.0779, 13.5319),
        make("Two high, one above half, one lower than half", 11.8713, 10.6017, 5.1779, 3.6317),
    };
  }();
  return sets;
}

const FrequencySet& reference_set(const std::string& label) {
  for (const auto& s : reference_sets()) {
    if (s.label == label) return s;
  }
  throw std::out_of_range("no reference frequency set named '" + label + "'");
}

FrequencySet fixed_clock(double base_hz) {
  return FrequencySet{"Fixed clock", base_hz, {base_hz, base_hz, base_hz, base_hz}, 0.5};
}

}  // namespace clockrand
