#include "clockrand/trace_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

static_assert(std::endian::native == std::endian::little, "trace I/O assumes a little-endian host");

namespace clockrand {
namespace {

using Kind = TraceFormatError::Kind;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_bytes(std::ostream& out, const aes::Block& b) { out.write(reinterpret_cast<const char*>(b.data()), 16); }

void put_set(std::ostream& out, const FrequencySet& fs) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fs.label.size()));
  out.write(fs.label.data(), static_cast<std::streamsize>(fs.label.size()));
  put(out, fs.base_hz);
  for (double f : fs.fundamentals_hz) put(out, f);
  put(out, fs.duty_cycle);
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void raw(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw TraceFormatError(Kind::truncated, std::string("trace file truncated while reading ") + what);
    }
  }

  template <class T>
  T get(const char* what) {
    T v;
    raw(&v, sizeof v, what);
    return v;
  }

  aes::Block block(const char* what) {
    aes::Block b;
    raw(b.data(), 16, what);
    return b;
  }

  FrequencySet set() {
    FrequencySet fs;
    const auto len = get<std::uint32_t>("label length");
    if (len > (1u << 20)) throw TraceFormatError(Kind::invalid, "implausible label length");
    fs.label.resize(len);
    raw(fs.label.data(), len, "label");
    fs.base_hz = get<double>("base frequency");
    for (double& f : fs.fundamentals_hz) f = get<double>("fundamental frequency");
    fs.duty_cycle = get<double>("duty cycle");
    try {
      fs.validate();
    } catch (const std::invalid_argument& e) {
      throw TraceFormatError(Kind::invalid, std::string("invalid frequency set: ") + e.what());
    }
    return fs;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_trace_set(const TraceSet& ts, std::ostream& out) {
  ts.validate();
  out.write(kTraceMagic, sizeof kTraceMagic);
  put(out, kTraceFormatVersion);
  put<std::uint64_t>(out, ts.traces.size());
  put<std::uint32_t>(out, ts.core_count);
  put(out, ts.sample_period_s);
  put(out, ts.oversampling);
  put(out, ts.noise_sigma);
  put_bytes(out, ts.key);
  if (ts.core_count == 2) put_bytes(out, *ts.key2);
  put_set(out, ts.fs);
  if (ts.core_count == 2) put_set(out, *ts.fs2);
  for (const auto& t : ts.traces) {
    put<std::uint8_t>(out, t.failed ? 1 : 0);
    put_bytes(out, t.plaintext);
    put_bytes(out, t.ciphertext);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.samples.size()));
    out.write(reinterpret_cast<const char*>(t.samples.data()),
              static_cast<std::streamsize>(t.samples.size() * sizeof(float)));
  }
  if (!out) throw TraceFormatError(Kind::io, "failed to write trace data");
}

void write_trace_set(const TraceSet& ts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceFormatError(Kind::io, "cannot open " + path.string() + " for writing");
  write_trace_set(ts, out);
  out.close();
  if (!out) throw TraceFormatError(Kind::io, "failed to write " + path.string());
}

TraceSet read_trace_set(std::istream& in) {
  Reader r(in);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kTraceMagic, 8) != 0) {
    throw TraceFormatError(Kind::bad_magic, "not a trace file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kTraceFormatVersion) {
    throw TraceFormatError(Kind::bad_version, "unsupported trace format version " + std::to_string(version));
  }
  TraceSet ts;
  const auto n = r.get<std::uint64_t>("trace count");
  const auto cores = r.get<std::uint32_t>("core count");
  if (cores != 1 && cores != 2) throw TraceFormatError(Kind::invalid, "core count must be 1 or 2");
  ts.core_count = static_cast<std::uint8_t>(cores);
  ts.sample_period_s = r.get<double>("sample period");
  ts.oversampling = r.get<std::uint32_t>("oversampling");
  ts.noise_sigma = r.get<double>("noise sigma");
  if (!(ts.sample_period_s > 0.0) && n > 0) throw TraceFormatError(Kind::invalid, "sample period must be positive");
  ts.key = r.block("key");
  if (cores == 2) ts.key2 = r.block("key2");
  ts.fs = r.set();
  if (cores == 2) ts.fs2 = r.set();

  ts.traces.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
  for (std::uint64_t i = 0; i < n; ++i) {
    PowerTrace t;
    t.core_count = ts.core_count;
    t.sample_period_s = ts.sample_period_s;
    const auto failed = r.get<std::uint8_t>("failed flag");
    if (failed > 1) throw TraceFormatError(Kind::invalid, "failed flag must be 0 or 1");
    t.failed = failed == 1;
    t.plaintext = r.block("plaintext");
    t.ciphertext = r.block("ciphertext");
    const auto count = r.get<std::uint64_t>("sample count");
    if (count > (std::uint64_t{1} << 32)) throw TraceFormatError(Kind::invalid, "implausible sample count");
    t.samples.resize(static_cast<Eigen::Index>(count));
    r.raw(t.samples.data(), count * sizeof(float), "samples");
    ts.traces.push_back(std::move(t));
  }
  return ts;
}

TraceSet read_trace_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceFormatError(Kind::io, "cannot open " + path.string());
  return read_trace_set(in);
}

}  // namespace clockrand
