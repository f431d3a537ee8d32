#include "clockrand/attack.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace clockrand {

std::vector<std::size_t> detect_peaks(const Eigen::Ref<const Eigen::VectorXf>& x, const PeakParams& params) {
  const auto n = x.size();
  if (n < 1) return {};
  const double mean = x.cast<double>().mean();
  const double var = (x.cast<double>().array() - mean).square().mean();
  const double threshold = mean + params.k_sigma * std::sqrt(var);

  std::vector<std::size_t> candidates;
  constexpr float lowest = -std::numeric_limits<float>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const float left = i > 0 ? x[i - 1] : lowest;
    const float right = i + 1 < n ? x[i + 1] : lowest;
    if (x[i] > threshold && x[i] >= left && x[i] > right) candidates.push_back(static_cast<std::size_t>(i));
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return x[static_cast<Eigen::Index>(a)] > x[static_cast<Eigen::Index>(b)]; });

  std::vector<std::size_t> accepted;
  for (auto c : candidates) {
    const bool clear = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t a) {
      return (a > c ? a - c : c - a) >= params.min_separation;
    });
    if (clear) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

const char* to_string(Removal r) {
  switch (r) {
    case Removal::kept: return "kept";
    case Removal::failed: return "failed_encryption";
    case Removal::missed_window: return "missed_window";
    case Removal::extra_peaks: return "extra_peaks";
    case Removal::peaks_too_close: return "peaks_too_close";
    case Removal::undersampled: return "undersampled";
  }
  return "unknown";
}

std::size_t FilterParams::detection_sep(std::size_t oversampling) const {
  return detection_separation.value_or(std::max<std::size_t>(1, oversampling / 8));
}

std::size_t FilterParams::min_sep(std::size_t oversampling) const {
  return min_peak_separation.value_or(oversampling / 4);
}

FilterResult filter_traces(const TraceSet& ts, const FilterParams& params) {
  FilterResult out;
  out.total = ts.size();
  out.reason.reserve(ts.size());
  const PeakParams peak{params.k_sigma, params.detection_sep(ts.oversampling)};
  const std::size_t min_sep = params.min_sep(ts.oversampling);

  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& t = ts.traces[i];
    Removal why = Removal::kept;
    std::vector<std::size_t> peaks;
    if (t.failed) {
      why = Removal::failed;
    } else {
      peaks = detect_peaks(t.samples, peak);
      if (peaks.size() < params.expected_peaks) {
        why = Removal::missed_window;
      } else if (peaks.size() > params.expected_peaks) {
        why = Removal::extra_peaks;
      } else {
        std::size_t narrowest = std::numeric_limits<std::size_t>::max();
        for (std::size_t k = 1; k < peaks.size(); ++k) narrowest = std::min(narrowest, peaks[k] - peaks[k - 1]);
        if (static_cast<double>(narrowest) < params.min_period_samples) {
          why = Removal::undersampled;
        } else if (narrowest < min_sep) {
          why = Removal::peaks_too_close;
        }
      }
    }
    out.reason.push_back(why);
    ++out.counts[static_cast<std::size_t>(why)];
    if (why == Removal::kept) {
      out.kept.push_back(i);
      out.peaks.push_back(std::move(peaks));
    }
  }
  if (out.total > 0) {
    const auto total = static_cast<double>(out.total);
    out.removed_fraction = static_cast<double>(out.total - out.kept.size()) / total;
    out.failed_fraction = static_cast<double>(out.counts[static_cast<std::size_t>(Removal::failed)]) / total;
  }
  return out;
}

AlignedMatrix synchronize(const TraceSet& ts, const FilterResult& filtered, const SyncParams& params) {
  if (params.round < 1 || params.round > aes::kRounds) throw std::invalid_argument("synchronize: round must be in 1..10");
  const std::size_t before = params.before.value_or(ts.oversampling / 2);
  const std::size_t after = params.after.value_or(ts.oversampling / 2);
  const std::size_t width = before + after + 1;

  std::vector<std::size_t> rows;  // positions in filtered.kept
  std::vector<std::size_t> anchors;
  AlignedMatrix am;
  for (std::size_t k = 0; k < filtered.kept.size(); ++k) {
    const auto& peaks = filtered.peaks[k];
    const auto& samples = ts.traces[filtered.kept[k]].samples;
    if (peaks.size() < params.round) {
      ++am.dropped;
      continue;
    }
    const std::size_t p = peaks[params.round - 1];
    if (p < before || p + after >= static_cast<std::size_t>(samples.size())) {
      ++am.dropped;
      continue;
    }
    rows.push_back(k);
    anchors.push_back(p);
  }

  am.round_anchor = before;
  am.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto idx = filtered.kept[rows[r]];
    am.rows.row(static_cast<Eigen::Index>(r)) =
        ts.traces[idx].samples.segment(static_cast<Eigen::Index>(anchors[r] - before), static_cast<Eigen::Index>(width)).transpose();
    am.kept_indices.push_back(idx);
    am.shifts.push_back(static_cast<std::ptrdiff_t>(anchors[r]) - static_cast<std::ptrdiff_t>(anchors.front()));
  }
  return am;
}

AlignedMatrix unsynchronized(const TraceSet& ts, const FilterResult& filtered) {
  Eigen::Index width = 0;
  for (auto idx : filtered.kept) width = std::max(width, ts.traces[idx].samples.size());
  AlignedMatrix am;
  am.rows = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(filtered.kept.size()), width);
  for (std::size_t r = 0; r < filtered.kept.size(); ++r) {
    const auto& s = ts.traces[filtered.kept[r]].samples;
    am.rows.row(static_cast<Eigen::Index>(r)).head(s.size()) = s.transpose();
    am.kept_indices.push_back(filtered.kept[r]);
    am.shifts.push_back(0);
  }
  return am;
}

int rank_of(const std::array<float, 256>& scores, int true_guess) {
  const float s = scores[static_cast<std::size_t>(true_guess)];
  int rank = 1;
  for (int g = 0; g < 256; ++g) rank += (g != true_guess && scores[static_cast<std::size_t>(g)] >= s) ? 1 : 0;
  return rank;
}

CpaResult cpa_attack(const Eigen::Ref<const Eigen::MatrixXf>& samples, std::span<const aes::Block> ciphertexts,
                     const CpaParams& params) {
  const Eigen::Index n = samples.rows();
  if (static_cast<std::size_t>(n) != ciphertexts.size()) throw std::invalid_argument("cpa_attack: one ciphertext per row required");
  if (n < 2) throw std::invalid_argument("cpa_attack: need at least two traces");
  std::size_t first = 0, last = static_cast<std::size_t>(samples.cols());
  if (params.window) std::tie(first, last) = *params.window;
  if (first >= last || last > static_cast<std::size_t>(samples.cols())) throw std::invalid_argument("cpa_attack: degenerate window");
  const auto width = static_cast<Eigen::Index>(last - first);

  // Centred samples and inverse column norms.
  Eigen::MatrixXf t = samples.middleCols(static_cast<Eigen::Index>(first), width);
  Eigen::RowVectorXf inv_t(width);
  for (Eigen::Index w = 0; w < width; ++w) {
    const double mean = t.col(w).cast<double>().mean();
    t.col(w).array() -= static_cast<float>(mean);
    const double ss = t.col(w).cast<double>().squaredNorm();
    inv_t[w] = ss > 0.0 ? static_cast<float>(1.0 / std::sqrt(ss)) : 0.0f;
  }

  std::optional<aes::Block> k10;
  if (params.true_key) k10 = aes::expand_key(*params.true_key).round_keys[aes::kRounds];

  CpaResult res;
  res.n_traces = static_cast<std::size_t>(n);
  if (k10) res.ranks.emplace();
  Eigen::MatrixXf h(n, 256);
  Eigen::VectorXf inv_h(256);
  bool all_rank1 = true;
  for (std::size_t j = 0; j < 16; ++j) {
    const std::size_t pos = aes::shift_rows_source(j);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& ct = ciphertexts[static_cast<std::size_t>(r)];
      const std::uint8_t before = ct[pos];
      for (int g = 0; g < 256; ++g) {
        h(r, g) = static_cast<float>(aes::hamming_distance(before, aes::inv_sbox(static_cast<std::uint8_t>(ct[j] ^ g))));
      }
    }
    for (Eigen::Index g = 0; g < 256; ++g) {
      const double mean = h.col(g).cast<double>().mean();
      h.col(g).array() -= static_cast<float>(mean);
      const double ss = h.col(g).cast<double>().squaredNorm();
      if (ss == 0.0) res.undefined[j] = true;
      inv_h[g] = ss > 0.0 ? static_cast<float>(1.0 / std::sqrt(ss)) : 0.0f;
    }
    const Eigen::MatrixXf c = h.transpose() * t;  // 256 x width
    int best = 0;
    for (Eigen::Index g = 0; g < 256; ++g) {
      const float s = (c.row(g).array().abs() * inv_t.array()).maxCoeff() * inv_h[g];
      res.scores[j][static_cast<std::size_t>(g)] = s;
      if (s > res.scores[j][static_cast<std::size_t>(best)]) best = static_cast<int>(g);
    }
    res.last_round_key[j] = static_cast<std::uint8_t>(best);
    if (k10) {
      (*res.ranks)[j] = rank_of(res.scores[j], (*k10)[j]);
      all_rank1 = all_rank1 && (*res.ranks)[j] == 1;
      if (params.stop_on_failure && !all_rank1) break;
    }
  }
  res.recovered_key = aes::invert_key_schedule(res.last_round_key);
  res.broken = k10.has_value() && all_rank1;
  return res;
}

SearchResult min_traces_search(const Eigen::Ref<const Eigen::MatrixXf>& samples,
                               std::span<const aes::Block> ciphertexts, const aes::Key& true_key, std::size_t step,
                               const CpaParams& cpa) {
  if (step < 2) throw std::invalid_argument("min_traces_search: step must be >= 2");
  const auto rows = static_cast<std::size_t>(samples.rows());
  CpaParams p = cpa;
  p.true_key = true_key;
  p.stop_on_failure = true;
  SearchResult out;
  for (std::size_t n = step; n <= rows; n += step) {
    for (std::size_t s = 0; s + n <= rows; s += step) {
      ++out.attacks;
      const auto r = cpa_attack(samples.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(n)),
                                ciphertexts.subspan(s, n), p);
      if (r.broken) {
        out.min_traces = n;
        out.segment_start = s;
        return out;
      }
    }
  }
  return out;
}

AttackReport run_attack(const TraceSet& ts, const AttackParams& params) {
  AttackReport rep;
  rep.n_traces = ts.size();
  rep.synchronized = params.synchronize;
  rep.evaluated = params.true_key.has_value();
  const FilterResult filtered = filter_traces(ts, params.filter);
  rep.n_kept = filtered.kept.size();
  rep.removal_counts = filtered.counts;
  rep.failed_fraction = filtered.failed_fraction;

  const std::size_t pretrigger = ts.oversampling / 2;
  for (const auto& peaks : filtered.peaks) {
    if (!peaks.empty() && peaks.back() > pretrigger) rep.max_delay_samples = std::max(rep.max_delay_samples, peaks.back() - pretrigger);
  }
  rep.max_delay_s = static_cast<double>(rep.max_delay_samples) * ts.sample_period_s;

  const AlignedMatrix am = params.synchronize ? synchronize(ts, filtered, params.sync) : unsynchronized(ts, filtered);
  rep.n_aligned = am.kept_indices.size();
  if (rep.n_traces > 0) {
    rep.removed_fraction = static_cast<double>(rep.n_traces - rep.n_aligned) / static_cast<double>(rep.n_traces);
  }
  if (am.dropped > 0) rep.notes.push_back(std::to_string(am.dropped) + " traces dropped: peak outside the alignment window");
  if (rep.n_aligned < 2) {
    rep.notes.push_back("too few traces survive filtering to attack");
    return rep;
  }

  std::vector<aes::Block> cts;
  cts.reserve(rep.n_aligned);
  for (auto idx : am.kept_indices) cts.push_back(ts.traces[idx].ciphertext);

  CpaParams cpa;
  cpa.true_key = params.true_key;
  rep.full = cpa_attack(am, cts, cpa);
  if (!params.true_key) return rep;

  if (rep.full->broken || params.search_when_full_fails) {
    const auto found = min_traces_search(am.rows, cts, *params.true_key, params.step);
    rep.min_traces = found.min_traces;
  } else {
    rep.notes.push_back("attack on all aligned traces failed; grid search skipped");
  }
  return rep;
}

}  // namespace clockrand
