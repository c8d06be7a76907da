#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace maxgrad::par {

// Worker count: MAXGRAD_WORKERS env var if set (clamped to [1, 256]),
// otherwise std::thread::hardware_concurrency().
int worker_count();

// Evaluates fn(i) for i in [0, n) on a pool of `workers` threads and returns
// the results in index order. Each index is computed independently, so the
// output is identical for any worker count.
template <class T, class F>
std::vector<T> map_indexed(std::int64_t n, F&& fn, int workers = worker_count()) {
    std::vector<T> out(static_cast<std::size_t>(n));
    if (n <= 0) return out;
    if (workers <= 1 || n == 1) {
        for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
        return out;
    }
    if (workers > n) workers = static_cast<int>(n);

    constexpr std::int64_t kChunk = 8;
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto body = [&] {
        try {
            for (;;) {
                const std::int64_t begin = next.fetch_add(kChunk, std::memory_order_relaxed);
                if (begin >= n || failed.load(std::memory_order_relaxed)) break;
                const std::int64_t end = begin + kChunk < n ? begin + kChunk : n;
                for (std::int64_t i = begin; i < end; ++i)
                    out[static_cast<std::size_t>(i)] = fn(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            failed.store(true, std::memory_order_relaxed);
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

}  // namespace maxgrad::par
