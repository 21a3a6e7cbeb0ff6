#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace srf {

// Runs fn(0..n-1) on up to `jobs` threads. Tasks write to their own slots, so output
// order never depends on completion order. The first exception is rethrown after all workers stop.
inline void parallel_for(long n, int jobs, const std::function<void(long)>& fn)
{
    const long workers = std::clamp<long>(jobs, 1, std::max<long>(n, 1));
    if (workers == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex mu;
    auto work = [&] {
        for (long i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (long w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace srf
