#pragma once

#include <stdexcept>
#include <string>

namespace clockrand {

/// The clock did not produce the required number of edges within its cycle cap.
class StalledClockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed trace file. `kind` distinguishes the failure for callers.
class TraceFormatError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, invalid };

  TraceFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace clockrand
