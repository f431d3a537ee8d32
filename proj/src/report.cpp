#include "clockrand/report.hpp"

#include <charconv>
#include <ostream>

namespace clockrand {

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return s;
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Json meta_json(const RunMeta& meta) {
  return Json{{"tool", "clockrand"},
              {"version", kVersion},
              {"command", meta.command},
              {"config_digest", meta.config_digest},
              {"seed", meta.seed}};
}

std::string csv_header(const RunMeta& meta) {
  return std::string("# clockrand ") + kVersion + " command=" + meta.command + " config_digest=" + meta.config_digest +
         " seed=" + std::to_string(meta.seed) + "\n";
}

Json to_json(const FrequencySet& fs) {
  return Json{{"label", fs.label},
              {"base_hz", fs.base_hz},
              {"fundamentals_hz", fs.fundamentals_hz},
              {"duty_cycle", fs.duty_cycle}};
}

Json to_json(const PeriodHistogram& h, bool with_bins) {
  Json j{{"bin_width_s", h.bin_width_s}, {"total_periods", h.total_periods}, {"unique_bins", h.unique_bins}};
  if (with_bins) {
    Json bins = Json::array();
    for (const auto& [b, c] : h.bins) bins.push_back(Json::array({b, c}));
    j["bins"] = std::move(bins);
  }
  return j;
}

Json to_json(const OverheadReport& r) {
  return Json{{"mean_overhead", r.mean_overhead}, {"worst_overhead", r.worst_overhead},
              {"max_delay_s", r.max_delay_s},     {"mean_delay_s", r.mean_delay_s},
              {"error_risk", r.error_risk},       {"short_periods", r.short_periods},
              {"total_periods", r.total_periods}, {"error_threshold_s", r.error_threshold_s}};
}

Json to_json(const EdgeCountDistribution& d) { return Json(d.p); }

Json to_json(const CpaResult& r) {
  Json j{{"n_traces", r.n_traces},
         {"broken", r.broken},
         {"recovered_key", aes::to_hex(r.recovered_key)},
         {"last_round_key", aes::to_hex(r.last_round_key)}};
  Json best = Json::array();
  for (std::size_t b = 0; b < 16; ++b) best.push_back(r.scores[b][r.last_round_key[b]]);
  j["best_scores"] = std::move(best);
  j["undefined_bytes"] = r.undefined;
  if (r.ranks) j["ranks"] = *r.ranks;
  return j;
}

Json to_json(const AttackReport& r) {
  Json counts = Json::object();
  for (std::size_t k = 0; k < kRemovalKinds; ++k) counts[to_string(static_cast<Removal>(k))] = r.removal_counts[k];
  Json j{{"n_traces", r.n_traces},
         {"n_kept", r.n_kept},
         {"n_aligned", r.n_aligned},
         {"synchronized", r.synchronized},
         {"evaluated", r.evaluated}};
  if (r.evaluated) {
    j["min_traces"] = r.min_traces ? Json(*r.min_traces) : Json("not broken");
  } else {
    j["min_traces"] = nullptr;
  }
  j["removed_fraction"] = r.removed_fraction;
  j["failed_fraction"] = r.failed_fraction;
  j["max_delay_samples"] = r.max_delay_samples;
  j["max_delay_s"] = r.max_delay_s;
  j["removal_counts"] = std::move(counts);
  if (r.full) j["cpa_all_traces"] = to_json(*r.full);
  j["notes"] = r.notes;
  return j;
}

Json to_json(const SpectrumHistogram& h, const std::vector<SpectralPeak>& peaks) {
  Json top = Json::array();
  for (const auto& p : peaks) top.push_back(Json{{"bin", p.bin}, {"frequency_hz", p.frequency_hz}, {"magnitude", p.magnitude}});
  return Json{{"bin_hz", h.bin_hz},
              {"fft_length", h.fft_length},
              {"resolution_hz", h.resolution_hz},
              {"sample_rate_hz", h.sample_rate_hz},
              {"n_traces", h.n_traces},
              {"spectrum_energy", h.energy()},
              {"time_energy", h.time_energy},
              {"top_peaks", std::move(top)}};
}

Json to_json(const CandidateBound& b) {
  return Json{{"per_trace_candidates", b.per_trace},
              {"total", b.total.str()},
              {"f_lo_hz", b.f_lo_hz},
              {"f_hi_hz", b.f_hi_hz}};
}

Json to_json(const OverlapReport& r) {
  return Json{{"traces", r.traces},
              {"overlap_fraction", r.overlap_fraction},
              {"first_round_overlap_fraction", r.first_round_overlap_fraction},
              {"flanking_fraction", r.flanking_fraction},
              {"candidates", r.candidates},
              {"mean_reduced_candidates", r.mean_reduced_candidates},
              {"success_without", r.success_without},
              {"success_with", r.success_with},
              {"single_peak_level", r.single_peak_level},
              {"overlap_threshold", r.overlap_threshold}};
}

void write_histogram_csv(std::ostream& out, const PeriodHistogram& h, const RunMeta& meta) {
  out << csv_header(meta) << "bin_index,period_low_s,count\n";
  for (const auto& [b, c] : h.bins) out << b << ',' << fmt(static_cast<double>(b) * h.bin_width_s) << ',' << c << '\n';
}

void write_spectrum_csv(std::ostream& out, const SpectrumHistogram& h, const RunMeta& meta) {
  out << csv_header(meta) << "bin_low_hz,magnitude\n";
  for (std::size_t b = 0; b < h.magnitudes.size(); ++b) out << fmt(h.bin_low_hz(b)) << ',' << fmt(h.magnitudes[b]) << '\n';
}

void write_attack_csv(std::ostream& out, const AttackReport& r, const RunMeta& meta) {
  out << csv_header(meta)
      << "nr_traces,failed_enc,removed_traces,max_delay_samples,max_delay_s,n_traces,n_kept,n_aligned,synchronized\n";
  out << (r.evaluated ? (r.min_traces ? std::to_string(*r.min_traces) : std::string("not broken")) : std::string("n/a"))
      << ',' << fmt(r.failed_fraction) << ',' << fmt(r.removed_fraction) << ',' << r.max_delay_samples << ','
      << fmt(r.max_delay_s) << ',' << r.n_traces << ',' << r.n_kept << ',' << r.n_aligned << ','
      << (r.synchronized ? "yes" : "no") << '\n';
}

void write_cpa_csv(std::ostream& out, const CpaResult& r, const std::optional<aes::Key>& true_key, const RunMeta& meta) {
  std::optional<aes::Block> k10;
  if (true_key) k10 = aes::expand_key(*true_key).round_keys[aes::kRounds];
  out << csv_header(meta) << "key_byte,recovered,best_score,true_byte,true_score,rank\n";
  for (std::size_t j = 0; j < 16; ++j) {
    const auto rec = r.last_round_key[j];
    out << j << ',' << static_cast<int>(rec) << ',' << fmt(r.scores[j][rec]) << ',';
    if (k10) {
      out << static_cast<int>((*k10)[j]) << ',' << fmt(r.scores[j][(*k10)[j]]) << ','
          << (r.ranks ? (*r.ranks)[j] : 0) << '\n';
    } else {
      out << ",,\n";
    }
  }
}

}  // namespace clockrand
