#ifndef ANISOVA_LOG_HPP_
#define ANISOVA_LOG_HPP_

#include <string>

namespace anisova {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

void SetLogLevel(LogLevel level);
LogLevel GetLogLevel();
void LogWarning(const std::string& msg);
void LogInfo(const std::string& msg);

}  // namespace anisova

#endif  // ANISOVA_LOG_HPP_
