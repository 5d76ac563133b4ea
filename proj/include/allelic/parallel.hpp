#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace allelic {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Fans body(i) over i = 0..count-1. Each task must write only to its own
// slot; merged results are then independent of the worker count.
template <typename F>
void parallel_replicates(std::int64_t count, int threads, F&& body) {
    const int workers = std::min<std::int64_t>(resolve_threads(threads), count > 0 ? count : 1);
    if (workers <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace allelic
