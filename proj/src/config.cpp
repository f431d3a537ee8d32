#include "clockrand/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "clockrand/report.hpp"

namespace clockrand {
namespace {

namespace pt = boost::property_tree;

const std::set<std::string> kExperimentKeys = {
    "n_base_cycles", "n_traces", "n_encryptions", "noise_sigma", "alpha", "oversampling", "capture_cycles",
    "seed", "core_count", "key", "key2", "base2_hz", "shared_sources", "plaintext_mode", "fixed_plaintext",
    "error_threshold", "peak_k", "min_peak_separation", "step", "bin_hz", "output_dir", "reference_sets"};
const std::set<std::string> kSetKeys = {"label", "base_hz", "f1", "f2", "f3", "f4", "duty_cycle"};

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

double to_double(const std::string& where, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) fail(where, "expected a number, got '" + s + "'");
  return v;
}

std::uint64_t to_uint(const std::string& where, const std::string& s) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(where, "expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& where, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(where, "expected true or false, got '" + s + "'");
}

aes::Block to_block(const std::string& where, const std::string& s) {
  try {
    return aes::from_hex(s);
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

void read_experiment(const pt::ptree& sec, ExperimentConfig& cfg, bool& with_reference) {
  for (const auto& [key, node] : sec) {
    const std::string where = "[experiment] " + key;
    if (!kExperimentKeys.count(key)) fail(where, "unknown key");
    const std::string v = node.data();
    if (key == "n_base_cycles") cfg.n_base_cycles = to_uint(where, v);
    else if (key == "n_traces") cfg.n_traces = to_uint(where, v);
    else if (key == "n_encryptions") cfg.n_encryptions = to_uint(where, v);
    else if (key == "noise_sigma") cfg.noise_sigma = to_double(where, v);
    else if (key == "alpha") cfg.alpha = to_double(where, v);
    else if (key == "oversampling") cfg.oversampling = to_uint(where, v);
    else if (key == "capture_cycles") cfg.capture_cycles = to_uint(where, v);
    else if (key == "seed") cfg.seed = to_uint(where, v);
    else if (key == "core_count") cfg.core_count = static_cast<int>(to_uint(where, v));
    else if (key == "key") cfg.key = to_block(where, v);
    else if (key == "key2") cfg.key2 = to_block(where, v);
    else if (key == "base2_hz") cfg.base2_hz = to_double(where, v);
    else if (key == "shared_sources") cfg.shared_sources = to_bool(where, v);
    else if (key == "plaintext_mode") {
      if (v == "random") cfg.plaintext_mode = PlaintextMode::random;
      else if (v == "fixed") cfg.plaintext_mode = PlaintextMode::fixed;
      else fail(where, "expected random or fixed");
    } else if (key == "fixed_plaintext") cfg.fixed_plaintext = to_block(where, v);
    else if (key == "error_threshold") cfg.error_threshold = to_double(where, v);
    else if (key == "peak_k") cfg.peak_k = to_double(where, v);
    else if (key == "min_peak_separation") cfg.min_peak_separation = to_uint(where, v);
    else if (key == "step") cfg.step = to_uint(where, v);
    else if (key == "bin_hz") cfg.bin_hz = to_double(where, v);
    else if (key == "output_dir") cfg.output_dir = v;
    else if (key == "reference_sets") with_reference = to_bool(where, v);
  }
}

FrequencySet read_set(const std::string& name, const pt::ptree& sec) {
  FrequencySet fs;
  std::set<std::string> seen;
  for (const auto& [key, node] : sec) {
    const std::string where = "[" + name + "] " + key;
    if (!kSetKeys.count(key)) fail(where, "unknown key");
    seen.insert(key);
    const std::string v = node.data();
    if (key == "label") fs.label = v;
    else if (key == "base_hz") fs.base_hz = to_double(where, v);
    else if (key == "duty_cycle") fs.duty_cycle = to_double(where, v);
    else fs.fundamentals_hz[static_cast<std::size_t>(key[1] - '1')] = to_double(where, v);
  }
  for (const char* k : {"base_hz", "f1", "f2", "f3", "f4"}) {
    if (!seen.count(k)) fail("[" + name + "]", std::string("missing key ") + k);
  }
  if (fs.label.empty()) fs.label = name;
  try {
    fs.validate();
  } catch (const std::invalid_argument& e) {
    fail("[" + name + "]", e.what());
  }
  return fs;
}

}  // namespace

SynthParams ExperimentConfig::synth_params() const {
  SynthParams p;
  p.oversampling = oversampling;
  p.noise_sigma = noise_sigma;
  p.alpha = alpha;
  p.error_threshold_cycles = error_threshold;
  p.capture_cycles = capture_cycles;
  p.shared_sources = shared_sources;
  return p;
}

FrequencySet ExperimentConfig::second_core(const FrequencySet& fs) const {
  FrequencySet fs2 = fs;
  fs2.base_hz = base2_hz.value_or(0.0);
  fs2.label = fs.label + " (core 2)";
  return fs2;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_base_cycles < 1) fail("[experiment] n_base_cycles", "must be >= 1");
  if (cfg.n_traces < 1) fail("[experiment] n_traces", "must be >= 1");
  if (cfg.n_encryptions < 1) fail("[experiment] n_encryptions", "must be >= 1");
  if (!(cfg.noise_sigma >= 0.0)) fail("[experiment] noise_sigma", "must be >= 0");
  if (!(cfg.alpha > 0.0)) fail("[experiment] alpha", "must be > 0");
  if (cfg.oversampling < 2) fail("[experiment] oversampling", "must be >= 2");
  if (cfg.capture_cycles < 1) fail("[experiment] capture_cycles", "must be >= 1");
  if (cfg.core_count != 1 && cfg.core_count != 2) fail("[experiment] core_count", "must be 1 or 2");
  if (cfg.core_count == 2) {
    if (!cfg.key2) fail("[experiment] key2", "required when core_count = 2");
    if (!cfg.base2_hz) fail("[experiment] base2_hz", "required when core_count = 2");
    if (!(*cfg.base2_hz > 0.0)) fail("[experiment] base2_hz", "must be > 0");
    for (const auto& fs : cfg.sets) {
      if (fs.base_hz == *cfg.base2_hz) fail("[experiment] base2_hz", "equals the base of set '" + fs.label + "'");
    }
  } else if (cfg.key2 || cfg.base2_hz) {
    fail("[experiment] key2/base2_hz", "only valid when core_count = 2");
  }
  if (!(cfg.error_threshold >= 0.0)) fail("[experiment] error_threshold", "must be >= 0");
  if (!(cfg.peak_k > 0.0)) fail("[experiment] peak_k", "must be > 0");
  if (cfg.step < 2) fail("[experiment] step", "must be >= 2");
  if (cfg.bin_hz && !(*cfg.bin_hz > 0.0)) fail("[experiment] bin_hz", "must be > 0");
  if (cfg.output_dir.empty()) fail("[experiment] output_dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig cfg;
  bool with_reference = false;
  std::map<std::uint64_t, FrequencySet> numbered;
  for (const auto& [name, sec] : tree) {
    if (!sec.data().empty()) fail(name, "key outside of any section");
    if (name == "experiment") {
      read_experiment(sec, cfg, with_reference);
    } else if (name.rfind("set.", 0) == 0) {
      const auto idx = to_uint("[" + name + "]", name.substr(4));
      numbered.emplace(idx, read_set(name, sec));
    } else {
      fail("[" + name + "]", "unknown section");
    }
  }
  if (with_reference) cfg.sets = reference_sets();
  for (auto& [idx, fs] : numbered) cfg.sets.push_back(std::move(fs));
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "[experiment]\n"
    << "n_base_cycles=" << cfg.n_base_cycles << "\nn_traces=" << cfg.n_traces << "\nn_encryptions=" << cfg.n_encryptions
    << "\nnoise_sigma=" << fmt(cfg.noise_sigma) << "\nalpha=" << fmt(cfg.alpha) << "\noversampling=" << cfg.oversampling
    << "\ncapture_cycles=" << cfg.capture_cycles << "\nseed=" << cfg.seed << "\ncore_count=" << cfg.core_count
    << "\nshared_sources=" << cfg.shared_sources
    << "\nplaintext_mode=" << (cfg.plaintext_mode == PlaintextMode::fixed ? "fixed" : "random")
    << "\nfixed_plaintext=" << aes::to_hex(cfg.fixed_plaintext) << "\nerror_threshold=" << fmt(cfg.error_threshold)
    << "\npeak_k=" << fmt(cfg.peak_k) << "\nstep=" << cfg.step << "\noutput_dir=" << cfg.output_dir << "\n";
  // Unset optional keys are left out.
  if (cfg.key) o << "key=" << aes::to_hex(*cfg.key) << "\n";
  if (cfg.key2) o << "key2=" << aes::to_hex(*cfg.key2) << "\n";
  if (cfg.base2_hz) o << "base2_hz=" << fmt(*cfg.base2_hz) << "\n";
  if (cfg.min_peak_separation) o << "min_peak_separation=" << *cfg.min_peak_separation << "\n";
  if (cfg.bin_hz) o << "bin_hz=" << fmt(*cfg.bin_hz) << "\n";
  for (std::size_t i = 0; i < cfg.sets.size(); ++i) {
    const auto& fs = cfg.sets[i];
    o << "[set." << i + 1 << "]\nlabel=" << fs.label << "\nbase_hz=" << fmt(fs.base_hz);
    for (std::size_t k = 0; k < kSources; ++k) o << "\nf" << k + 1 << '=' << fmt(fs.fundamentals_hz[k]);
    o << "\nduty_cycle=" << fmt(fs.duty_cycle) << "\n";
  }
  return o.str();
}

}  // namespace clockrand
