#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace latentprobe {

using UtcInstant = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DDTHH:MM[:SS]Z" (trailing Z optional). Throws ValidationError.
UtcInstant parse_utc(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_utc(UtcInstant t);

}  // namespace latentprobe
