#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ehsim {

// Deterministic fan-out of n independent work items. Each item writes only
// to its own index, so results are identical for any worker count; workers
// pull indices from a shared counter. The first exception wins and is
// rethrown on the calling thread after all workers join.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
    if (n == 0)
        return;
    const std::size_t thread_count =
        std::min<std::size_t>(n, workers > 1 ? static_cast<std::size_t>(workers) : 1);
    if (thread_count <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t)
        pool.emplace_back(run);
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

// Compensated (Kahan) accumulator for long Monte Carlo sums.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum; }
};

} // namespace ehsim
