#include "sdot/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace sdot::log {

namespace {

Level initial_level() {
  Level lvl = Level::Warn;
  if (const char* env = std::getenv("SDOT_LOG")) parse_level(env, lvl);
  return lvl;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{initial_level()};
  return lvl;
}

}  // namespace

Level level() { return current().load(std::memory_order_relaxed); }

void set_level(Level lvl) { current().store(lvl, std::memory_order_relaxed); }

bool parse_level(const std::string& name, Level& out) {
  if (name == "debug") out = Level::Debug;
  else if (name == "info") out = Level::Info;
  else if (name == "warn") out = Level::Warn;
  else if (name == "off") out = Level::Off;
  else return false;
  return true;
}

void write(Level lvl, const std::string& message) {
  static std::mutex mutex;
  static const char* names[] = {"debug", "info", "warn", "off"};
  std::lock_guard lock(mutex);
  std::cerr << "[sdot " << names[static_cast<int>(lvl)] << "] " << message << '\n';
}

}  // namespace sdot::log
