#include "cavity/cli/pool.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cavity::cli {

std::size_t default_jobs() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ParallelFor thread_pool_for(std::size_t jobs) {
    jobs = std::max<std::size_t>(1, jobs);
    return [jobs](std::size_t count, const std::function<void(std::size_t)>& body) {
        const std::size_t workers = std::min(jobs, count);
        if (workers <= 1) {
            for (std::size_t i = 0; i < count; ++i) body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto work = [&]() {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        };
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);
        threads.clear();
        if (failure) std::rethrow_exception(failure);
    };
}

}  // namespace cavity::cli
