#include "cid/log.hpp"

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace cid::log {

namespace {

spdlog::level::level_enum to_spdlog(Level level) {
  switch (level) {
    case Level::kError: return spdlog::level::err;
    case Level::kInfo: return spdlog::level::info;
    case Level::kDebug: return spdlog::level::debug;
  }
  return spdlog::level::err;
}

struct State {
  std::shared_ptr<spdlog::logger> logger;
  Level level = Level::kError;

  State() : logger(std::make_shared<spdlog::logger>(
                "cid", std::make_shared<spdlog::sinks::stderr_sink_mt>())) {
    logger->set_pattern("[%H:%M:%S.%e] [%l] %v");
    if (const char* env = std::getenv("CID_LOG_LEVEL")) {
      Level parsed;
      if (parse_level(env, parsed)) {
        level = parsed;
      } else {
        logger->warn("ignoring unrecognized CID_LOG_LEVEL '{}'", env);
      }
    }
    logger->set_level(to_spdlog(level));
  }
};

State& state() {
  static State s;
  return s;
}

}  // namespace

bool parse_level(std::string_view name, Level& level) noexcept {
  if (name == "error") {
    level = Level::kError;
  } else if (name == "info") {
    level = Level::kInfo;
  } else if (name == "debug") {
    level = Level::kDebug;
  } else {
    return false;
  }
  return true;
}

Level level() noexcept { return state().level; }

void set_level(Level level) {
  state().level = level;
  state().logger->set_level(to_spdlog(level));
}

void error(std::string_view message) { state().logger->error("{}", message); }
void info(std::string_view message) { state().logger->info("{}", message); }
void debug(std::string_view message) { state().logger->debug("{}", message); }

}  // namespace cid::log
