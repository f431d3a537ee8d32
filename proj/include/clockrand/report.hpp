#pragma once

// JSON and CSV renderings of results. Every artifact starts with a header
// naming the tool version, the command, the config digest and the seed; no
// timestamps, so identical inputs give byte-identical files.

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <string_view>

#include "clockrand/attack.hpp"
#include "clockrand/clock.hpp"
#include "clockrand/duplication.hpp"
#include "clockrand/spectrum.hpp"

namespace clockrand {

inline constexpr const char* kVersion = "1.0.0";

using Json = nlohmann::ordered_json;

struct RunMeta {
  std::string command;
  std::string config_digest;  // 16 hex digits, or "none"
  std::uint64_t seed = 0;
};

/// 64-bit FNV-1a of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

Json meta_json(const RunMeta& meta);
/// "# clockrand <version> command=<c> config_digest=<d> seed=<s>\n"
std::string csv_header(const RunMeta& meta);

Json to_json(const FrequencySet& fs);
Json to_json(const PeriodHistogram& h, bool with_bins = false);
Json to_json(const OverheadReport& r);
Json to_json(const EdgeCountDistribution& d);
Json to_json(const CpaResult& r);
Json to_json(const AttackReport& r);
Json to_json(const SpectrumHistogram& h, const std::vector<SpectralPeak>& peaks);
Json to_json(const CandidateBound& b);
Json to_json(const OverlapReport& r);

/// bin_index,period_low_s,count
void write_histogram_csv(std::ostream& out, const PeriodHistogram& h, const RunMeta& meta);
/// bin_low_hz,magnitude
void write_spectrum_csv(std::ostream& out, const SpectrumHistogram& h, const RunMeta& meta);
/// One row of table columns.
void write_attack_csv(std::ostream& out, const AttackReport& r, const RunMeta& meta);
/// key_byte,recovered,best_score,true_byte,true_score,rank
void write_cpa_csv(std::ostream& out, const CpaResult& r, const std::optional<aes::Key>& true_key, const RunMeta& meta);

/// Number formatting shared by the CSV writers (shortest round-trip form).
std::string fmt(double v);

}  // namespace clockrand
