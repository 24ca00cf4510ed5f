#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace playclone {

// Kinds map one-to-one onto CLI exit codes (10 + position).
enum class ErrorKind {
  InvalidArgument,
  InvalidState,
  Uninitialized,
  UnknownTask,
  WidthMismatch,
  NonFinite,
  Io,
  VersionMismatch,
  Truncated,
  Checksum,
  Schema,
  NoEligible,
  Divergence,
  MissingArtifact,
  Busy,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent per-episode / per-trial seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

constexpr int kControlHz = 30;

// Diagnostics channel. The default sink writes "warning: ..." lines to stderr.
enum class LogLevel { Info, Warn };
using LogSink = std::function<void(LogLevel, const std::string&)>;
// Passing an empty sink restores the default. Returns the previous sink.
LogSink set_log_sink(LogSink sink);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace playclone
