#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace blowup {

// Worker count from BLOWUP_PROFILER_JOBS, 1 when unset or malformed.
int default_jobs();

// Runs body(i) for i in [0, n) on up to `jobs` threads with a static
// partition. Each index must write only its own output slot, which keeps the
// result independent of the worker count. The first exception is rethrown.
template <class Body>
void parallel_for(std::size_t n, int jobs, Body&& body)
{
    const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace blowup
