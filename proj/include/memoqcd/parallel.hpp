#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace memoqcd {

/// Number of hardware threads, never less than 1.
inline int hardware_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Resolve a requested worker count: a positive request wins, otherwise the
/// MEMOQCD_THREADS environment variable, otherwise 1.  The result is clamped
/// to the hardware thread count.
inline int resolve_threads(int requested = 0) {
    int n = requested;
    if (n <= 0) {
        if (const char* env = std::getenv("MEMOQCD_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && *end == '\0' && v > 0) n = static_cast<int>(v);
        }
    }
    if (n <= 0) n = 1;
    return std::min(n, hardware_threads());
}

/// Run fn(begin, end) over contiguous index chunks covering [0, n) on up to
/// `threads` workers.  Each index is processed exactly once, so results
/// written to per-index slots are identical for any worker count; callers
/// that accumulate must reduce their slots sequentially afterwards.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    threads = std::max(1, threads);
    if (threads == 1 || n == 1) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = std::max<std::size_t>(1, n / (4 * static_cast<std::size_t>(threads)));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n || failed.load()) return;
            std::size_t end = std::min(n, begin + chunk);
            try {
                fn(begin, end);
            } catch (...) {
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads) - 1);
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error("parallel_for: a worker threw an exception");
}

}  // namespace memoqcd
