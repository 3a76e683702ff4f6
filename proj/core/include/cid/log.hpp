#pragma once

// Diagnostics on standard error. The level comes from the CID_LOG_LEVEL
// environment variable (error, info or debug; default error).

#include <string_view>

namespace cid::log {

enum class Level { kError, kInfo, kDebug };

/// Parse a level name; returns false for an unrecognized name.
bool parse_level(std::string_view name, Level& level) noexcept;

/// Level currently in effect, initialized from CID_LOG_LEVEL on first use.
Level level() noexcept;
void set_level(Level level);

void error(std::string_view message);
void info(std::string_view message);
void debug(std::string_view message);

}  // namespace cid::log
