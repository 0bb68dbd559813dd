#include "cavity/version.hpp"

#ifndef CAVITY_VERSION
#define CAVITY_VERSION "unknown"
#endif

namespace cavity {

std::string version_string() { return CAVITY_VERSION; }

}  // namespace cavity
