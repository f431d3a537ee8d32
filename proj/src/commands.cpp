#include "clockrand/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <bit>
#include <fstream>
#include <ostream>

#include "clockrand/errors.hpp"
#include "clockrand/trace_io.hpp"

namespace clockrand {
namespace fs = std::filesystem;

namespace {

enum SeedTag : std::uint64_t { kWaveform = 1, kOverhead = 2, kTraces = 3, kBand = 4 };

std::uint64_t set_seed(const ExperimentConfig& cfg, std::size_t set, SeedTag tag) {
  return derive_seed(derive_seed(cfg.seed, set), tag);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw TraceFormatError(TraceFormatError::Kind::io, "cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const Json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

FilterParams filter_params(const ExperimentConfig* cfg) {
  FilterParams p;
  if (cfg) {
    p.k_sigma = cfg->peak_k;
    p.min_peak_separation = cfg->min_peak_separation;
  }
  return p;
}

void require_sets(const ExperimentConfig& cfg, std::size_t n, const char* command) {
  if (cfg.sets.size() < n) {
    throw UsageError(std::string(command) + ": config must define at least " + std::to_string(n) + " frequency set" +
                     (n > 1 ? "s" : ""));
  }
}

SetSpec set_spec(const ExperimentConfig& cfg, std::size_t i) {
  if (!cfg.key) throw ConfigError("config: [experiment] key: required to generate traces");
  SetSpec spec;
  spec.fs = cfg.sets[i];
  spec.key = *cfg.key;
  if (cfg.core_count == 2) {
    spec.fs2 = cfg.second_core(cfg.sets[i]);
    spec.key2 = cfg.key2;
  }
  spec.n_traces = cfg.n_traces;
  spec.plaintext_mode = cfg.plaintext_mode;
  spec.fixed_plaintext = cfg.fixed_plaintext;
  spec.seed = set_seed(cfg, i, kTraces);
  return spec;
}

struct SetStats {
  std::size_t total_edges = 0;
  PeriodHistogram histogram;
  OverheadReport overhead;
  CandidateBound bound;
  Json analytic;
};

SetStats simulate_set(const ExperimentConfig& cfg, std::size_t i) {
  const FrequencySet& fs = cfg.sets[i];
  SetStats s;
  const auto w = simulate_mux_clock(fs, cfg.n_base_cycles, set_seed(cfg, i, kWaveform));
  s.total_edges = w.edges.size();
  s.histogram = period_histogram(extract_periods(w), reference_bin_width(fs));

  OverheadParams op;
  op.n_encryptions = cfg.n_encryptions;
  op.seed = set_seed(cfg, i, kOverhead);
  op.error_threshold_cycles = cfg.error_threshold;
  s.overhead = overhead_and_error(fs, op);

  BandParams bp;
  bp.cycles = cfg.n_base_cycles;
  bp.seed = set_seed(cfg, i, kBand);
  bp.error_threshold_cycles = cfg.error_threshold;
  std::optional<FrequencySet> fs2;
  if (cfg.core_count == 2) fs2 = cfg.second_core(fs);
  s.bound = peak_permutation_bound(fs, fs2, 1, bp);

  const auto presence = selected_edge_presence(w);
  std::array<double, kSources> p{};
  Json sources = Json::array();
  for (std::size_t k = 0; k < kSources; ++k) {
    p[k] = rising_edge_probability(fs.period(k), fs.base_period());
    const auto dbl = double_edge_probability(fs.period(k), fs.base_period());
    const auto sel = presence.cycles_selected[k];
    sources.push_back(Json{{"source", k + 1},
                           {"frequency_hz", fs.fundamentals_hz[k]},
                           {"rising_edge_probability", p[k]},
                           {"double_edge_probability", dbl.value},
                           {"double_edge_clamped", dbl.clamped},
                           {"cycles_selected", sel},
                           {"empirical_edge_presence",
                            sel ? static_cast<double>(presence.cycles_with_edge[k]) / static_cast<double>(sel) : 0.0}});
  }
  const auto counts = joint_edge_counts(fs, cfg.n_base_cycles);
  std::array<double, kSources + 1> empirical{};
  for (std::size_t k = 0; k <= kSources; ++k) {
    empirical[k] = static_cast<double>(counts[k]) / static_cast<double>(cfg.n_base_cycles);
  }
  s.analytic = Json{{"sources", std::move(sources)},
                    {"edge_count_distribution", to_json(edge_count_distribution(p))},
                    {"edge_count_empirical", empirical}};
  return s;
}

}  // namespace

void cmd_simulate(const ExperimentConfig& cfg, const RunMeta& meta, const fs::path& out_dir, std::ostream& log) {
  require_sets(cfg, 1, "simulate");
  fs::create_directories(out_dir);
  auto summary = open_out(out_dir / "simulate_summary.csv");
  summary << csv_header(meta)
          << "set,label,base_hz,f1_hz,f2_hz,f3_hz,f4_hz,cycles,total_edges,unique_bins,bin_width_s,mean_overhead,"
             "worst_overhead,max_delay_s,error_risk,candidates_per_trace\n";
  Json sets = Json::array();
  for (std::size_t i = 0; i < cfg.sets.size(); ++i) {
    const auto& fs = cfg.sets[i];
    const SetStats s = simulate_set(cfg, i);
    {
      auto h = open_out(out_dir / ("histogram_set" + std::to_string(i + 1) + ".csv"));
      write_histogram_csv(h, s.histogram, meta);
    }
    summary << i + 1 << ",\"" << fs.label << "\"," << fmt(fs.base_hz);
    for (double f : fs.fundamentals_hz) summary << ',' << fmt(f);
    summary << ',' << cfg.n_base_cycles << ',' << s.total_edges << ',' << s.histogram.unique_bins << ','
            << fmt(s.histogram.bin_width_s) << ',' << fmt(s.overhead.mean_overhead) << ','
            << fmt(s.overhead.worst_overhead) << ',' << fmt(s.overhead.max_delay_s) << ','
            << fmt(s.overhead.error_risk) << ',' << s.bound.per_trace << '\n';
    sets.push_back(Json{{"set", i + 1},
                        {"frequency_set", to_json(fs)},
                        {"cycles", cfg.n_base_cycles},
                        {"total_edges", s.total_edges},
                        {"histogram", to_json(s.histogram)},
                        {"analytic", s.analytic},
                        {"overhead", to_json(s.overhead)},
                        {"candidate_bound", to_json(s.bound)}});
    log << "set " << i + 1 << " (" << fs.label << "): " << s.total_edges << " edges, " << s.histogram.unique_bins
        << " unique periods, mean overhead " << fmt(s.overhead.mean_overhead) << ", error risk "
        << fmt(s.overhead.error_risk) << '\n';
  }
  write_json(out_dir / "simulate.json", Json{{"meta", meta_json(meta)}, {"sets", std::move(sets)}});
}

void cmd_gen(const ExperimentConfig& cfg, const RunMeta& meta, const fs::path& out_dir, std::ostream& log) {
  require_sets(cfg, 1, "gen");
  fs::create_directories(out_dir);
  const SynthParams sp = cfg.synth_params();
  Json files = Json::array();
  for (std::size_t i = 0; i < cfg.sets.size(); ++i) {
    const TraceSet ts = generate_set(set_spec(cfg, i), sp);
    const std::string name = "traces_set" + std::to_string(i + 1) + ".bin";
    write_trace_set(ts, out_dir / name);
    files.push_back(Json{{"set", i + 1},
                         {"label", cfg.sets[i].label},
                         {"file", name},
                         {"n_traces", ts.size()},
                         {"core_count", ts.core_count},
                         {"failed_fraction", ts.failed_fraction()}});
    log << "set " << i + 1 << " (" << cfg.sets[i].label << "): wrote " << name << ", " << ts.size()
        << " traces, failed-encryption fraction " << fmt(ts.failed_fraction()) << '\n';
  }
  write_json(out_dir / "gen.json", Json{{"meta", meta_json(meta)}, {"files", std::move(files)}});
}

void cmd_attack(const ExperimentConfig* cfg, const AttackOptions& opts, const RunMeta& meta, const fs::path& out_dir,
                std::ostream& log) {
  const TraceSet ts = read_trace_set(opts.trace_file);
  AttackParams ap;
  ap.filter = filter_params(cfg);
  ap.synchronize = !opts.no_sync;
  ap.step = opts.step.value_or(cfg ? cfg->step : 250);
  if (ap.step < 2) throw UsageError("--step must be >= 2");
  ap.true_key = opts.evaluate_key;
  const AttackReport rep = run_attack(ts, ap);

  fs::create_directories(out_dir);
  write_json(out_dir / "attack.json", Json{{"meta", meta_json(meta)},
                                           {"trace_file", opts.trace_file.filename().string()},
                                           {"frequency_set", to_json(ts.fs)},
                                           {"step", ap.step},
                                           {"report", to_json(rep)}});
  {
    auto f = open_out(out_dir / "attack.csv");
    write_attack_csv(f, rep, meta);
  }
  if (rep.full) {
    auto f = open_out(out_dir / "cpa.csv");
    write_cpa_csv(f, *rep.full, ap.true_key, meta);
  }
  log << "kept " << rep.n_aligned << " of " << rep.n_traces << " traces (removed " << fmt(rep.removed_fraction)
      << ", failed " << fmt(rep.failed_fraction) << ")\n";
  if (rep.evaluated) {
    log << "min traces: " << (rep.min_traces ? std::to_string(*rep.min_traces) : std::string("not broken")) << '\n';
  } else if (rep.full) {
    log << "recovered key: " << aes::to_hex(rep.full->recovered_key) << '\n';
  }
}

void cmd_fft(const ExperimentConfig* cfg, const FftOptions& opts, const RunMeta& meta, const fs::path& out_dir,
             std::ostream& log) {
  std::optional<double> bin = opts.bin_hz;
  if (!bin && cfg) bin = cfg->bin_hz;
  if (bin && !(*bin > 0.0)) throw UsageError("--bin must be > 0");
  const TraceSet ts = read_trace_set(opts.trace_file);
  if (ts.size() == 0) throw TraceFormatError(TraceFormatError::Kind::invalid, "trace file holds no traces");
  if (!bin) {
    // Native resolution of the padded transform.
    Eigen::Index longest = 0;
    for (const auto& t : ts.traces) longest = std::max(longest, t.samples.size());
    bin = 1.0 / (ts.sample_period_s * static_cast<double>(std::bit_ceil(static_cast<std::size_t>(std::max<Eigen::Index>(2, longest)))));
  }
  const auto h = fft_spectrum(ts, *bin);
  const auto peaks = top_peaks(h, 10);
  fs::create_directories(out_dir);
  {
    auto f = open_out(out_dir / "spectrum.csv");
    write_spectrum_csv(f, h, meta);
  }
  Json j{{"meta", meta_json(meta)},
         {"trace_file", opts.trace_file.filename().string()},
         {"core_count", ts.core_count},
         {"spectrum", to_json(h, peaks)}};
  if (ts.core_count == 2) j["overlap"] = to_json(overlap_exploit(ts));
  write_json(out_dir / "spectrum.json", j);
  log << "spectrum of " << h.n_traces << " traces, bin " << fmt(h.bin_hz) << " Hz";
  if (!peaks.empty()) log << ", top peak " << fmt(peaks.front().frequency_hz) << " Hz";
  log << '\n';
}

void cmd_compare(const ExperimentConfig& cfg, const RunMeta& meta, const fs::path& out_dir, std::ostream& log) {
  require_sets(cfg, 2, "compare");
  struct Row {
    std::size_t set;
    SetStats stats;
    AttackReport attack;
  };
  std::vector<Row> rows;
  const SynthParams sp = cfg.synth_params();
  for (std::size_t i = 0; i < cfg.sets.size(); ++i) {
    Row r{i, simulate_set(cfg, i), {}};
    const TraceSet ts = generate_set(set_spec(cfg, i), sp);
    AttackParams ap;
    ap.filter = filter_params(&cfg);
    ap.step = cfg.step;
    ap.true_key = cfg.key;
    r.attack = run_attack(ts, ap);
    log << "set " << i + 1 << " (" << cfg.sets[i].label << "): min traces "
        << (r.attack.min_traces ? std::to_string(*r.attack.min_traces) : std::string("not broken")) << '\n';
    rows.push_back(std::move(r));
  }
  // Most traces to break first ("not broken" ranks highest); ties go to the
  // lower mean overhead, then to configuration order.
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    const auto ma = a.attack.min_traces.value_or(SIZE_MAX), mb = b.attack.min_traces.value_or(SIZE_MAX);
    if (ma != mb) return ma > mb;
    return a.stats.overhead.mean_overhead < b.stats.overhead.mean_overhead;
  });

  fs::create_directories(out_dir);
  auto csv = open_out(out_dir / "compare.csv");
  csv << csv_header(meta)
      << "rank,set,label,nr_traces,failed_enc,removed_traces,max_delay_samples,worst_overhead,mean_overhead,"
         "error_risk,total_edges,unique_bins,candidates_per_trace\n";
  Json table = Json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const auto& fs = cfg.sets[r.set];
    const std::string nr = r.attack.min_traces ? std::to_string(*r.attack.min_traces) : "not broken";
    csv << k + 1 << ',' << r.set + 1 << ",\"" << fs.label << "\"," << nr << ',' << fmt(r.attack.failed_fraction) << ','
        << fmt(r.attack.removed_fraction) << ',' << r.attack.max_delay_samples << ','
        << fmt(r.stats.overhead.worst_overhead) << ',' << fmt(r.stats.overhead.mean_overhead) << ','
        << fmt(r.stats.overhead.error_risk) << ',' << r.stats.total_edges << ',' << r.stats.histogram.unique_bins << ','
        << r.stats.bound.per_trace << '\n';
    table.push_back(Json{{"rank", k + 1},
                         {"set", r.set + 1},
                         {"frequency_set", to_json(fs)},
                         {"attack", to_json(r.attack)},
                         {"overhead", to_json(r.stats.overhead)},
                         {"total_edges", r.stats.total_edges},
                         {"unique_bins", r.stats.histogram.unique_bins},
                         {"candidate_bound", to_json(r.stats.bound)}});
  }
  write_json(out_dir / "compare.json",
             Json{{"meta", meta_json(meta)},
                  {"ordering", "min_traces descending, then mean_overhead ascending"},
                  {"rows", std::move(table)}});
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized-clock side-channel laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string config_path, out_dir, evaluate_hex, trace_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> step;
  std::optional<double> bin;
  bool no_sync = false;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", config_path, "experiment config (INI)");
    if (config_required) c->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "clock statistics per frequency set");
  add_common(simulate, true);
  auto* gen = app.add_subcommand("gen", "generate trace files");
  add_common(gen, true);
  auto* attack = app.add_subcommand("attack", "attack a trace file");
  add_common(attack, false);
  attack->add_option("trace_file", trace_file, "trace file")->required();
  attack->add_option("--evaluate", evaluate_hex, "true key (hex), enables minimum-traces search");
  attack->add_flag("--no-sync", no_sync, "skip synchronization");
  attack->add_option("--step", step, "minimum-traces grid step");
  auto* fft = app.add_subcommand("fft", "averaged spectrum of a trace file");
  add_common(fft, false);
  fft->add_option("trace_file", trace_file, "trace file")->required();
  fft->add_option("--bin", bin, "bin width in Hz");
  auto* compare = app.add_subcommand("compare", "rank frequency sets");
  add_common(compare, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    std::optional<ExperimentConfig> cfg;
    RunMeta meta;
    meta.config_digest = "none";
    if (!config_path.empty()) {
      cfg = load_config(config_path);
      if (seed) cfg->seed = *seed;
      meta.config_digest = fnv1a_hex(canonical_text(*cfg));
      meta.seed = cfg->seed;
    } else if (seed) {
      meta.seed = *seed;
    }
    const fs::path dir = !out_dir.empty() ? fs::path(out_dir) : fs::path(cfg ? cfg->output_dir : "out");
    const ExperimentConfig* cfgp = cfg ? &*cfg : nullptr;

    if (simulate->parsed()) {
      meta.command = "simulate";
      cmd_simulate(*cfg, meta, dir, out);
    } else if (gen->parsed()) {
      meta.command = "gen";
      cmd_gen(*cfg, meta, dir, out);
    } else if (attack->parsed()) {
      meta.command = "attack";
      AttackOptions o;
      o.trace_file = trace_file;
      if (attack->count("--evaluate")) {
        try {
          o.evaluate_key = aes::from_hex(evaluate_hex);
        } catch (const std::invalid_argument& e) {
          throw UsageError(std::string("--evaluate: ") + e.what());
        }
      }
      o.no_sync = no_sync;
      o.step = step;
      cmd_attack(cfgp, o, meta, dir, out);
    } else if (fft->parsed()) {
      meta.command = "fft";
      cmd_fft(cfgp, FftOptions{trace_file, bin}, meta, dir, out);
    } else if (compare->parsed()) {
      meta.command = "compare";
      cmd_compare(*cfg, meta, dir, out);
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const TraceFormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const StalledClockError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace clockrand
