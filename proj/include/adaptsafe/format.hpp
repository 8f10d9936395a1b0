#pragma once

#include <charconv>
#include <string>

namespace adaptsafe {

/// Shortest round-trip decimal form, locale independent.
inline std::string format_number(double value)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

} // namespace adaptsafe
