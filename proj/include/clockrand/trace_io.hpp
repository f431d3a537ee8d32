#pragma once

// Binary trace files. Little-endian throughout:
//
//   "CLKBTRC1"  magic, 8 bytes
//   u32         version (1)
//   u64 n_traces, u32 core_count, f64 sample_period_s, u32 oversampling,
//   f64 noise_sigma, key[16], key2[16] (dual only)
//   FrequencySet fs, then fs2 (dual only), each as
//     u32 label length, label bytes, f64 base_hz, f64 f1..f4, f64 duty_cycle
//   per trace: u8 failed, plaintext[16], ciphertext[16], u64 sample_count,
//              sample_count * f32 samples
//
// Per-core timing ground truth is not stored.

#include <filesystem>
#include <iosfwd>

#include "clockrand/errors.hpp"
#include "clockrand/trace.hpp"

namespace clockrand {

inline constexpr char kTraceMagic[8] = {'C', 'L', 'K', 'B', 'T', 'R', 'C', '1'};
inline constexpr std::uint32_t kTraceFormatVersion = 1;

void write_trace_set(const TraceSet& ts, std::ostream& out);
void write_trace_set(const TraceSet& ts, const std::filesystem::path& path);

/// Throws TraceFormatError with the kind of the first problem found.
TraceSet read_trace_set(std::istream& in);
TraceSet read_trace_set(const std::filesystem::path& path);

}  // namespace clockrand
