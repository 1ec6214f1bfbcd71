#pragma once

#include <functional>
#include <string>

namespace pduu::log {

enum class Level { Debug = 0, Info = 1, Warning = 2, Silent = 3 };

void set_level(Level level);
Level level();

/// Replace the sink (default: stderr). Passing an empty function restores the default.
void set_sink(std::function<void(Level, const std::string&)> sink);

void debug(const std::string& msg);
void info(const std::string& msg);
void warning(const std::string& msg);

}  // namespace pduu::log
