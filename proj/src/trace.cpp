#include "clockrand/trace.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace clockrand {
namespace {

enum Stream : std::uint64_t { kClock1 = 1, kNoise = 2, kGarbage = 3, kClock2 = 4, kPlaintext = 5 };

double pulse_value(PulseShape shape, double u) {
  u = std::abs(u);
  if (u >= 1.0) return 0.0;
  switch (shape) {
    case PulseShape::triangular:
      return 1.0 - u;
    case PulseShape::rectangular:
      return 1.0;
    case PulseShape::raised_cosine:
      return 0.5 * (1.0 + std::cos(std::numbers::pi * u));
  }
  return 0.0;
}

void add_noise(Eigen::VectorXf& samples, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  Rng rng(seed);
  for (Eigen::Index j = 0; j < samples.size(); ++j) samples[j] += static_cast<float>(sigma * rng.normal());
}

double trigger_time(const FrequencySet& fs, Rng& rng, const SynthParams& params) {
  const auto m0 = rng.index(params.start_cycle_span);
  return static_cast<double>(m0) * fs.base_period();
}

}  // namespace

void SynthParams::validate() const {
  if (oversampling < 2) throw std::invalid_argument("oversampling must be >= 2");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (!(pulse_half_width_cycles > 0.0)) throw std::invalid_argument("pulse half-width must be positive");
  if (!(error_threshold_cycles >= 0.0)) throw std::invalid_argument("error threshold must be >= 0");
  if (capture_cycles < 1) throw std::invalid_argument("capture_cycles must be >= 1");
  if (start_cycle_span < 1) throw std::invalid_argument("start_cycle_span must be >= 1");
}

double TraceSet::failed_fraction() const {
  if (traces.empty()) return 0.0;
  std::size_t failed = 0;
  for (const auto& t : traces) failed += t.failed ? 1 : 0;
  return static_cast<double>(failed) / static_cast<double>(traces.size());
}

void TraceSet::validate() const {
  if (core_count != 1 && core_count != 2) throw std::invalid_argument("core_count must be 1 or 2");
  if (key2.has_value() != (core_count == 2)) throw std::invalid_argument("key2 must be present iff core_count == 2");
  if (fs2.has_value() != (core_count == 2)) throw std::invalid_argument("fs2 must be present iff core_count == 2");
  for (const auto& t : traces) {
    if (t.sample_period_s != sample_period_s) throw std::invalid_argument("traces must share sample_period_s");
    if (t.core_count != core_count) throw std::invalid_argument("traces must share core_count");
    if (!t.failed && t.samples.size() == 0) throw std::invalid_argument("non-failed trace without samples");
  }
}

bool same_recorded_content(const TraceSet& a, const TraceSet& b) {
  if (a.key != b.key || a.key2 != b.key2 || a.fs != b.fs || a.fs2 != b.fs2 || a.oversampling != b.oversampling ||
      a.noise_sigma != b.noise_sigma || a.sample_period_s != b.sample_period_s || a.core_count != b.core_count ||
      a.traces.size() != b.traces.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    const auto& x = a.traces[i];
    const auto& y = b.traces[i];
    if (x.failed != y.failed || x.plaintext != y.plaintext || x.ciphertext != y.ciphertext ||
        x.samples.size() != y.samples.size() || x.samples != y.samples) {
      return false;
    }
  }
  return true;
}

CoreTiming time_encryption(const FrequencySet& fs, const ClockOptions& clock, double trigger_s, Rng& rng,
                           const SynthParams& params) {
  const auto edges = edges_after(fs, clock, trigger_s, aes::kRounds, rng, params.cycle_cap);
  CoreTiming t;
  t.base_hz = fs.base_hz;
  t.min_period_s = INFINITY;
  for (std::size_t k = 0; k < aes::kRounds; ++k) {
    t.round_edges_s[k] = edges[k] - trigger_s;
    if (k > 0) t.min_period_s = std::min(t.min_period_s, edges[k] - edges[k - 1]);
  }
  t.failed = t.min_period_s < params.error_threshold_cycles * fs.base_period();
  return t;
}

Eigen::VectorXf render_core(const CoreTiming& timing, const aes::RoundTrace& states, double base_period_s,
                            double sample_period_s, const SynthParams& params) {
  const auto n = static_cast<Eigen::Index>(params.sample_count());
  const double pre = static_cast<double>(params.pretrigger());
  const double half_width = params.pulse_half_width_cycles * base_period_s;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < aes::kRounds; ++k) {
    const double amplitude = params.alpha * aes::hamming_distance(states.states[k], states.states[k + 1]);
    double centre = timing.round_edges_s[k] / sample_period_s + pre;  // in samples
    // An edge within the coincidence tolerance of a sample instant is on it.
    if (std::abs(centre - std::round(centre)) * sample_period_s < kCoincidenceTolerance) centre = std::round(centre);
    const double reach = half_width / sample_period_s;
    const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(centre - reach)));
    const auto hi = std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(std::floor(centre + reach)));
    for (Eigen::Index j = lo; j <= hi; ++j) {
      acc[j] += amplitude * pulse_value(params.pulse, (static_cast<double>(j) - centre) / reach);
    }
  }
  return acc.cast<float>();
}

PowerTrace generate_trace(const FrequencySet& fs, const aes::Key& key, const aes::Block& plaintext,
                          const SynthParams& params, std::uint64_t seed) {
  fs.validate();
  params.validate();
  Rng clock_rng(derive_seed(seed, kClock1));
  const double trigger = trigger_time(fs, clock_rng, params);
  CoreTiming timing = time_encryption(fs, ClockOptions{}, trigger, clock_rng, params);
  const auto states = aes::encrypt_with_states(key, plaintext);
  timing.ciphertext = states.ciphertext;

  PowerTrace trace;
  trace.sample_period_s = fs.base_period() / static_cast<double>(params.oversampling);
  trace.plaintext = plaintext;
  trace.failed = timing.failed;
  trace.ciphertext = timing.failed ? Rng(derive_seed(seed, kGarbage)).bytes<16>() : states.ciphertext;
  trace.samples = render_core(timing, states, fs.base_period(), trace.sample_period_s, params);
  add_noise(trace.samples, params.noise_sigma, derive_seed(seed, kNoise));
  trace.cores.push_back(timing);
  return trace;
}

PowerTrace generate_dual_trace(const FrequencySet& fs1, const FrequencySet& fs2, const aes::Key& key1,
                               const aes::Key& key2, const aes::Block& plaintext, const SynthParams& params,
                               std::uint64_t seed) {
  fs1.validate();
  fs2.validate();
  params.validate();
  if (fs1.base_hz == fs2.base_hz) throw std::invalid_argument("dual-core clocks need distinct base frequencies");

  Rng rng1(derive_seed(seed, kClock1));
  Rng rng2(derive_seed(seed, kClock2));
  const double trigger = trigger_time(fs1, rng1, params);
  ClockOptions clock2;
  if (!params.shared_sources) {
    for (std::size_t i = 0; i < kSources; ++i) clock2.source_offset_s[i] = rng2.uniform() * fs2.period(i);
  }
  CoreTiming t1 = time_encryption(fs1, ClockOptions{}, trigger, rng1, params);
  CoreTiming t2 = time_encryption(fs2, clock2, trigger, rng2, params);
  const auto s1 = aes::encrypt_with_states(key1, plaintext);
  const auto s2 = aes::encrypt_with_states(key2, plaintext);
  t1.ciphertext = s1.ciphertext;
  t2.ciphertext = s2.ciphertext;

  PowerTrace trace;
  trace.core_count = 2;
  trace.sample_period_s = fs1.base_period() / static_cast<double>(params.oversampling);
  trace.plaintext = plaintext;
  trace.failed = t1.failed;
  trace.ciphertext = t1.failed ? Rng(derive_seed(seed, kGarbage)).bytes<16>() : s1.ciphertext;
  trace.samples = render_core(t1, s1, fs1.base_period(), trace.sample_period_s, params) +
                  render_core(t2, s2, fs2.base_period(), trace.sample_period_s, params);
  add_noise(trace.samples, params.noise_sigma, derive_seed(seed, kNoise));
  trace.cores = {t1, t2};
  return trace;
}

TraceSet generate_set(const SetSpec& spec, const SynthParams& params) {
  spec.fs.validate();
  params.validate();
  if (spec.n_traces < 1) throw std::invalid_argument("generate_set: n_traces must be >= 1");
  const bool dual = spec.fs2.has_value();
  if (dual != spec.key2.has_value()) throw std::invalid_argument("a dual-core set needs both fs2 and key2");

  TraceSet ts;
  ts.key = spec.key;
  ts.key2 = spec.key2;
  ts.fs = spec.fs;
  ts.fs2 = spec.fs2;
  ts.oversampling = static_cast<std::uint32_t>(params.oversampling);
  ts.noise_sigma = params.noise_sigma;
  ts.sample_period_s = spec.fs.base_period() / static_cast<double>(params.oversampling);
  ts.core_count = dual ? 2 : 1;
  ts.traces.reserve(spec.n_traces);
  for (std::size_t i = 0; i < spec.n_traces; ++i) {
    const std::uint64_t seed = derive_seed(spec.seed, i);
    const aes::Block pt = spec.plaintext_mode == PlaintextMode::fixed
                              ? spec.fixed_plaintext
                              : Rng(derive_seed(seed, kPlaintext)).bytes<16>();
    ts.traces.push_back(dual ? generate_dual_trace(spec.fs, *spec.fs2, spec.key, *spec.key2, pt, params, seed)
                             : generate_trace(spec.fs, spec.key, pt, params, seed));
  }
  return ts;
}

}  // namespace clockrand
