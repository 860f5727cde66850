#pragma once

#include <cstdio>
#include <string>

namespace optospring {

/// Scientific notation with 9 significant digits, '.' separator.
inline std::string sci9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8e", v == 0.0 ? 0.0 : v);
    return buf;
}

}  // namespace optospring
