#pragma once

#include "cavity/experiments.hpp"

#include <cstddef>

namespace cavity::cli {

/// Hardware concurrency, at least 1.
std::size_t default_jobs();

/// ParallelFor over `jobs` threads pulling indices from a shared counter.
/// The first exception thrown by any item is rethrown after all threads join.
ParallelFor thread_pool_for(std::size_t jobs);

}  // namespace cavity::cli
