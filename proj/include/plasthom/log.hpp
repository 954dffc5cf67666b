#ifndef PLASTHOM_LOG_HPP
#define PLASTHOM_LOG_HPP

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace plasthom {

enum class LogLevel : int { error = 0, info = 1, debug = 2 };

// Level comes from PLASTHOM_LOG in {error, info, debug}; default error.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("PLASTHOM_LOG");
    if (env == nullptr) return LogLevel::error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

inline void log_msg(LogLevel at, const std::string& msg) {
  if (static_cast<int>(at) <= static_cast<int>(log_level())) {
    const char* tag = at == LogLevel::error  ? "error"
                      : at == LogLevel::info ? "info"
                                             : "debug";
    std::fprintf(stderr, "[plasthom %s] %s\n", tag, msg.c_str());
  }
}

inline void log_info(const std::string& msg) { log_msg(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::debug, msg); }
inline void log_error(const std::string& msg) { log_msg(LogLevel::error, msg); }

}  // namespace plasthom

#endif
