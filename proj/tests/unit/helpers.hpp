#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "playclone/common.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("playclone_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// Captures log output for the lifetime of the object.
class LogCapture {
 public:
  LogCapture() {
    prev_ = playclone::set_log_sink([this](playclone::LogLevel l, const std::string& m) {
      (l == playclone::LogLevel::Warn ? warnings : infos) += m + "\n";
    });
  }
  ~LogCapture() { playclone::set_log_sink(std::move(prev_)); }
  std::string warnings, infos;

 private:
  playclone::LogSink prev_;
};

}  // namespace testutil
