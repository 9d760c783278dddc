#pragma once

namespace pseopt {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Active level, read once from PSEOPT_LOG (error|warn|info|debug).
/// Defaults to warn.
LogLevel log_level();

void log_message(LogLevel level, const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 2, 3)))
#endif
    ;

}  // namespace pseopt

#define PSEOPT_ERROR(...) ::pseopt::log_message(::pseopt::LogLevel::kError, __VA_ARGS__)
#define PSEOPT_WARN(...) ::pseopt::log_message(::pseopt::LogLevel::kWarn, __VA_ARGS__)
#define PSEOPT_INFO(...) ::pseopt::log_message(::pseopt::LogLevel::kInfo, __VA_ARGS__)
#define PSEOPT_DEBUG(...) ::pseopt::log_message(::pseopt::LogLevel::kDebug, __VA_ARGS__)
