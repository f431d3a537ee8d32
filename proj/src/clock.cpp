#include "clockrand/clock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "clockrand/errors.hpp"

namespace clockrand {

MuxClock::MuxClock(const FrequencySet& fs, const ClockOptions& opts)
    : base_period_(fs.base_period()), duty_(fs.duty_cycle), opts_(opts), cycle_(opts.first_cycle) {
  fs.validate();
  for (std::size_t i = 0; i < kSources; ++i) period_[i] = fs.period(i);
}

// Fraction of the current period of source i elapsed at t, in [0, 1), with
// values within the coincidence tolerance of an edge snapped onto it.
double MuxClock::phase(std::size_t i, double t) const {
  const double T = period_[i];
  const double x = (t - opts_.source_offset_s[i]) / T;
  double ph = x - std::floor(x);
  const double tol = opts_.coincidence_tol_s;
  if (ph * T < tol || (1.0 - ph) * T < tol) return 0.0;
  if (std::abs(ph - duty_) * T < tol) return duty_;
  return ph;
}

bool MuxClock::source_high(std::size_t i, double t) const { return phase(i, t) < duty_; }

bool MuxClock::source_high_before(std::size_t i, double t) const {
  const double ph = phase(i, t);
  return ph > 0.0 && ph <= duty_;
}

std::size_t MuxClock::source_edges_in(std::size_t i, double t0, double t1) const {
  const double T = period_[i];
  const double off = opts_.source_offset_s[i];
  const double tol = opts_.coincidence_tol_s;
  // Edges in [t0, t1) with tolerance: first k with off + kT >= t0 - tol.
  auto k = static_cast<std::int64_t>(std::ceil((t0 - tol - off) / T));
  std::size_t n = 0;
  for (double te = off + static_cast<double>(k) * T; te < t1 - tol; te = off + static_cast<double>(++k) * T) {
    if (te >= t0 - tol) ++n;
  }
  return n;
}

void MuxClock::step_with(std::uint8_t s, std::vector<double>& edges, std::vector<EdgeOrigin>* origins) {
  const double t0 = cycle_start(cycle_);
  const double t1 = cycle_start(cycle_ + 1);
  const double tol = opts_.coincidence_tol_s;
  auto emit = [&](double t, EdgeOrigin o) {
    edges.push_back(t);
    if (origins) origins->push_back(o);
  };

  const bool was_high = previous_ ? source_high_before(*previous_, t0) : false;
  if (!was_high && source_high(s, t0)) {
    emit(t0, phase(s, t0) == 0.0 ? EdgeOrigin::source : EdgeOrigin::selection);
  }

  const double T = period_[s];
  const double off = opts_.source_offset_s[s];
  auto k = static_cast<std::int64_t>(std::floor((t0 - off) / T)) + 1;
  double te = off + static_cast<double>(k) * T;
  while (te <= t0 + tol) te = off + static_cast<double>(++k) * T;
  while (te < t1 - tol) {
    emit(te, EdgeOrigin::source);
    te = off + static_cast<double>(++k) * T;
  }

  previous_ = s;
  ++cycle_;
}

std::uint8_t MuxClock::step(Rng& rng, std::vector<double>& edges, std::vector<EdgeOrigin>* origins) {
  const auto s = static_cast<std::uint8_t>(rng.index(kSources));
  step_with(s, edges, origins);
  return s;
}

OutputWaveform simulate_mux_clock(const FrequencySet& fs, std::size_t n_base_cycles, std::uint64_t seed,
                                  const ClockOptions& opts) {
  if (n_base_cycles == 0) throw std::invalid_argument("simulate_mux_clock: n_base_cycles must be >= 1");
  MuxClock clock(fs, opts);
  Rng rng(seed);
  OutputWaveform w;
  w.n_base_cycles = n_base_cycles;
  w.base_period_s = fs.base_period();
  w.start_s = clock.cycle_start(opts.first_cycle);
  w.source_per_cycle.reserve(n_base_cycles);
  for (std::size_t m = 0; m < n_base_cycles; ++m) {
    w.source_per_cycle.push_back(clock.step(rng, w.edges, &w.origins));
  }
  return w;
}

std::vector<double> edges_after(const FrequencySet& fs, const ClockOptions& opts, double trigger_s,
                                std::size_t count, Rng& rng, std::size_t cycle_cap) {
  ClockOptions local = opts;
  const double T = fs.base_period();
  local.first_cycle = static_cast<std::int64_t>(std::floor((trigger_s - opts.base_offset_s) / T + 1e-9));
  MuxClock clock(fs, local);
  std::vector<double> edges;
  std::vector<double> out;
  out.reserve(count);
  const double after = trigger_s + opts.coincidence_tol_s;
  for (std::size_t c = 0; c < cycle_cap && out.size() < count; ++c) {
    edges.clear();
    clock.step(rng, edges);
    for (double e : edges) {
      if (e > after && out.size() < count) out.push_back(e);
    }
  }
  if (out.size() < count) {
    throw StalledClockError("clock produced " + std::to_string(out.size()) + " of " + std::to_string(count) +
                            " edges within " + std::to_string(cycle_cap) + " base cycles");
  }
  return out;
}

std::vector<double> extract_periods(const OutputWaveform& w) {
  std::vector<double> periods;
  if (w.edges.size() < 2) return periods;
  periods.resize(w.edges.size() - 1);
  std::adjacent_difference(w.edges.begin() + 1, w.edges.end(), periods.begin());
  periods.front() = w.edges[1] - w.edges[0];
  return periods;
}

PeriodHistogram period_histogram(const std::vector<double>& periods, double bin_width_s) {
  if (!(bin_width_s > 0.0)) throw std::invalid_argument("period_histogram: bin width must be positive");
  PeriodHistogram h;
  h.bin_width_s = bin_width_s;
  for (double p : periods) {
    // The small bias keeps exact multiples of the width in their own bin.
    const auto bin = static_cast<std::int64_t>(std::floor(p / bin_width_s + 1e-9));
    ++h.bins[bin];
  }
  h.total_periods = periods.size();
  h.unique_bins = h.bins.size();
  return h;
}

namespace {

void require_positive_periods(double t_i, double t_b, const char* who) {
  if (!(t_i > 0.0) || !(t_b > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": periods must be positive");
  }
}

}  // namespace

double rising_edge_probability(double t_i, double t_b) {
  require_positive_periods(t_i, t_b, "rising_edge_probability");
  return t_i >= t_b ? t_b / t_i : 1.0;
}

ClampedProbability double_edge_probability(double t_i, double t_b) {
  require_positive_periods(t_i, t_b, "double_edge_probability");
  if (t_i > t_b) return {0.0, false};
  const double p = (t_b - t_i) / t_i;
  if (p > 1.0) return {1.0, true};
  return {p, false};
}

EdgeCountDistribution edge_count_distribution(const std::array<double, kSources>& p) {
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("edge_count_distribution: probability outside [0, 1]");
  }
  const auto [p1, p2, p3, p4] = p;
  const double q1 = 1 - p1, q2 = 1 - p2, q3 = 1 - p3, q4 = 1 - p4;
  EdgeCountDistribution d;
  d.p[0] = q1 * q2 * q3 * q4;
  d.p[1] = p1 * q2 * q3 * q4 + p2 * q1 * q3 * q4 + p3 * q1 * q2 * q4 + p4 * q1 * q2 * q3;
  d.p[2] = p1 * p2 * q3 * q4 + p1 * p3 * q2 * q4 + p1 * p4 * q2 * q3 + p2 * p3 * q1 * q4 + p2 * p4 * q1 * q3 +
           p3 * p4 * q1 * q2;
  d.p[3] = p2 * p3 * p4 * q1 + p1 * p3 * p4 * q2 + p1 * p2 * p4 * q3 + p1 * p2 * p3 * q4;
  d.p[4] = p1 * p2 * p3 * p4;
  return d;
}

int permutation_count(int n_missing) {
  if (n_missing < 0 || n_missing > static_cast<int>(kSources)) {
    throw std::invalid_argument("permutation_count: n_missing must be in 0..4");
  }
  if (n_missing == 0) return 16;
  const int n = static_cast<int>(kSources);
  return n * ((n - n_missing) + n) - n * n_missing;
}

std::uint64_t completion_time_count(std::uint64_t n_freqs, std::uint64_t rounds) {
  if (n_freqs < 1 || rounds < 1) throw std::invalid_argument("completion_time_count: arguments must be >= 1");
  // C(rounds + n - 1, k) with k = min(rounds, n - 1); running value C(m + i, i)
  // stays integral at every step.
  const std::uint64_t m = rounds + n_freqs - 1;
  const std::uint64_t k = std::min(rounds, n_freqs - 1);
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // c * (m - k + i) is divisible by i; after removing gcd(c, i) from both,
    // the remaining divisor is coprime to c and must divide the numerator.
    const std::uint64_t g = std::gcd(c, i);
    const std::uint64_t num = (m - k + i) / (i / g);
    if (__builtin_mul_overflow(c / g, num, &c)) {
      throw std::overflow_error("completion_time_count: result exceeds 64 bits");
    }
  }
  return c;
}

SourcePresence selected_edge_presence(const OutputWaveform& w) {
  SourcePresence out;
  std::size_t e = 0;
  for (std::size_t m = 0; m < w.n_base_cycles; ++m) {
    const double t0 = w.start_s + static_cast<double>(m) * w.base_period_s;
    const double t1 = t0 + w.base_period_s;
    const auto s = w.source_per_cycle[m];
    ++out.cycles_selected[s];
    bool any = false;
    while (e < w.edges.size() && w.edges[e] < t1 - kCoincidenceTolerance) {
      if (w.edges[e] >= t0 - kCoincidenceTolerance && w.origins[e] == EdgeOrigin::source) any = true;
      ++e;
    }
    if (any) ++out.cycles_with_edge[s];
  }
  return out;
}

std::array<std::uint64_t, kSources + 1> joint_edge_counts(const FrequencySet& fs, std::size_t n_cycles,
                                                          const ClockOptions& opts) {
  MuxClock clock(fs, opts);
  std::array<std::uint64_t, kSources + 1> counts{};
  for (std::size_t c = 0; c < n_cycles; ++c) {
    const std::int64_t m = opts.first_cycle + static_cast<std::int64_t>(c);
    const double t0 = clock.cycle_start(m);
    const double t1 = clock.cycle_start(m + 1);
    std::size_t rising = 0;
    for (std::size_t i = 0; i < kSources; ++i) {
      if (clock.source_edges_in(i, t0, t1) > 0) ++rising;
    }
    ++counts[rising];
  }
  return counts;
}

OverheadReport overhead_and_error(const FrequencySet& fs, const OverheadParams& params) {
  fs.validate();
  if (params.rounds < 1) throw std::invalid_argument("overhead_and_error: rounds must be >= 1");
  if (params.n_encryptions < 1) throw std::invalid_argument("overhead_and_error: n_encryptions must be >= 1");
  const double T = fs.base_period();
  const double reference = static_cast<double>(params.rounds) * T;
  OverheadReport r;
  r.error_threshold_s = params.error_threshold_cycles * T;
  double sum = 0.0;
  for (std::size_t run = 0; run < params.n_encryptions; ++run) {
    Rng rng(derive_seed(params.seed, run));
    const auto m0 = static_cast<std::int64_t>(rng.index(params.start_cycle_span));
    const double start = static_cast<double>(m0) * T;
    const auto edges =
        edges_after(fs, ClockOptions{}, start, params.rounds, rng, params.rounds * params.cycle_cap_per_round);
    const double completion = edges.back() - start;
    sum += completion;
    r.max_delay_s = std::max(r.max_delay_s, completion);
    for (std::size_t k = 1; k < edges.size(); ++k) {
      ++r.total_periods;
      if (edges[k] - edges[k - 1] < r.error_threshold_s) ++r.short_periods;
    }
  }
  r.mean_delay_s = sum / static_cast<double>(params.n_encryptions);
  r.mean_overhead = r.mean_delay_s / reference - 1.0;
  r.worst_overhead = r.max_delay_s / reference - 1.0;
  r.error_risk = r.total_periods ? static_cast<double>(r.short_periods) / static_cast<double>(r.total_periods) : 0.0;
  return r;
}

}  // namespace clockrand
