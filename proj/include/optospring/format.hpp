#pragma once

#include <charconv>
#include <string>

namespace optospring {

/// Shortest round-trip decimal, independent of the C/C++ locale.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace optospring
