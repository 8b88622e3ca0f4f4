#include "anisova/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace anisova {
namespace {

std::atomic<LogLevel> g_level{LogLevel::kWarning};
std::mutex g_mutex;

}  // namespace

void SetLogLevel(LogLevel level) { g_level = level; }
LogLevel GetLogLevel() { return g_level; }

void LogWarning(const std::string& msg) {
  if (g_level.load() < LogLevel::kWarning) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "warning: " << msg << '\n';
}

void LogInfo(const std::string& msg) {
  if (g_level.load() < LogLevel::kInfo) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << msg << '\n';
}

}  // namespace anisova
