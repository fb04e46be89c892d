#pragma once

#include <functional>
#include <string_view>

namespace handkin::log {

enum class Level { debug = 0, info = 1, warn = 2, quiet = 3 };

void set_level(Level level);

// Replaces the stderr writer; an empty function restores it. Returns the previous sink.
using Sink = std::function<void(Level, std::string_view)>;
Sink set_sink(Sink sink);
Level level();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);

}  // namespace handkin::log
