#pragma once

#include <sstream>
#include <string>

namespace sdot::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Off = 3 };

/// Current threshold. Initialized from SDOT_LOG (debug|info|warn|off),
/// defaulting to `warn`.
Level level();
void set_level(Level level);
/// Parses a level name; returns false on unknown names.
bool parse_level(const std::string& name, Level& out);

void write(Level level, const std::string& message);

template <typename... Args>
void emit(Level lvl, const Args&... args) {
  if (lvl < level()) return;
  std::ostringstream os;
  (os << ... << args);
  write(lvl, os.str());
}

template <typename... Args>
void debug(const Args&... args) { emit(Level::Debug, args...); }
template <typename... Args>
void info(const Args&... args) { emit(Level::Info, args...); }
template <typename... Args>
void warn(const Args&... args) { emit(Level::Warn, args...); }

}  // namespace sdot::log
