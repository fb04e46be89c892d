#include "handkin/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace handkin::log {
namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mutex;
Sink g_sink;

void emit(Level lvl, const char* tag, std::string_view msg) {
  if (lvl < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(lvl, msg);
    return;
  }
  std::cerr << '[' << tag << "] " << msg << '\n';
}
}  // namespace

void set_level(Level lvl) { g_level = lvl; }
Level level() { return g_level.load(); }

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  std::swap(sink, g_sink);
  return sink;
}

void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void warn(std::string_view msg) { emit(Level::warn, "warn", msg); }

}  // namespace handkin::log
