#pragma once

#include <chrono>
#include <cstdio>
#include <mutex>
#include <string>

namespace mragp {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

namespace detail {
inline LogLevel& log_threshold() {
  static LogLevel level = LogLevel::kInfo;
  return level;
}
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

inline void set_log_level(LogLevel level) { detail::log_threshold() = level; }

inline void log_msg(LogLevel level, const std::string& msg) {
  if (level < detail::log_threshold()) return;
  static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  double secs = std::chrono::duration<double>(clock::now() - t0).count();
  std::lock_guard<std::mutex> lock(detail::log_mutex());
  std::fprintf(stderr, "[%9.3f] %-5s %s\n", secs, names[static_cast<int>(level)], msg.c_str());
}

inline void log_info(const std::string& msg) { log_msg(LogLevel::kInfo, msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::kWarn, msg); }
inline void log_error(const std::string& msg) { log_msg(LogLevel::kError, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::kDebug, msg); }

}  // namespace mragp
