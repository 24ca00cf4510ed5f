#include <iostream>
#include <mutex>

#include "playclone/common.hpp"

namespace playclone {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::InvalidState: return "invalid_state";
    case ErrorKind::Uninitialized: return "uninitialized";
    case ErrorKind::UnknownTask: return "unknown_task";
    case ErrorKind::WidthMismatch: return "width_mismatch";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Io: return "io";
    case ErrorKind::VersionMismatch: return "version_mismatch";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::NoEligible: return "no_eligible_episode";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::MissingArtifact: return "missing_artifact";
    case ErrorKind::Busy: return "busy";
  }
  return "unknown";
}

namespace {

std::mutex g_log_mutex;
LogSink g_sink;

}  // namespace

LogSink set_log_sink(LogSink sink) {
  std::lock_guard lock(g_log_mutex);
  LogSink prev = std::move(g_sink);
  g_sink = std::move(sink);
  return prev;
}

static void emit(LogLevel level, const std::string& msg) {
  std::lock_guard lock(g_log_mutex);
  if (g_sink) {
    g_sink(level, msg);
    return;
  }
  std::cerr << (level == LogLevel::Warn ? "warning: " : "") << msg << '\n';
}

void log_info(const std::string& msg) { emit(LogLevel::Info, msg); }
void log_warn(const std::string& msg) { emit(LogLevel::Warn, msg); }

}  // namespace playclone
