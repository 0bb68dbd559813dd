#pragma once

#include <string>

namespace cavity {

/// Shortest-round-trip-safe text for a double: 17 significant digits, locale free.
std::string format_double(double value);

}  // namespace cavity
