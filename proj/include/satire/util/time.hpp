#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace satire {

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM:SS[.frac](Z|+hh:mm|-hh:mm)`. Fractional seconds
/// are truncated. Throws ParseError.
Timestamp parse_rfc3339(std::string_view text);

/// Always renders UTC with a `Z` suffix and whole seconds.
std::string format_rfc3339(Timestamp ts);

Timestamp now_utc();

}  // namespace satire
