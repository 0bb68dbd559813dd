#pragma once

#include <string>

namespace cavity {

/// Project version as configured by the build.
std::string version_string();

}  // namespace cavity
