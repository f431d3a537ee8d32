#pragma once

// Command-line front end. Subcommands:
//   simulate  per-set clock statistics, analytic tables, overhead
//   gen       synthetic trace files
//   attack    filter -> synchronize -> CPA -> minimum traces on a trace file
//   fft       averaged spectrum of a trace file
//   compare   simulate + gen + attack per set, ranked
// Exit codes: 0 success, 2 usage or config error, 3 data error, 4 internal.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "clockrand/config.hpp"
#include "clockrand/report.hpp"

namespace clockrand {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitInternal = 4 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AttackOptions {
  std::filesystem::path trace_file;
  std::optional<aes::Key> evaluate_key;
  bool no_sync = false;
  std::optional<std::size_t> step;
};

struct FftOptions {
  std::filesystem::path trace_file;
  std::optional<double> bin_hz;
};

/// Each command writes its artifacts under out_dir and a short summary to
/// `log`. `cfg` may be null for attack and fft.
void cmd_simulate(const ExperimentConfig& cfg, const RunMeta& meta, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_gen(const ExperimentConfig& cfg, const RunMeta& meta, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_attack(const ExperimentConfig* cfg, const AttackOptions& opts, const RunMeta& meta,
                const std::filesystem::path& out_dir, std::ostream& log);
void cmd_fft(const ExperimentConfig* cfg, const FftOptions& opts, const RunMeta& meta,
             const std::filesystem::path& out_dir, std::ostream& log);
void cmd_compare(const ExperimentConfig& cfg, const RunMeta& meta, const std::filesystem::path& out_dir, std::ostream& log);

/// Parses argv and dispatches; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clockrand
