#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace probeset {

// Runs f(i) for i in [0, count) on up to `jobs` threads (0 = hardware
// concurrency). Work items must not share mutable state; results should go
// into preassigned slots so reductions stay deterministic.
template <typename F>
void parallel_for(std::int64_t count, int jobs, F&& f) {
    if (jobs == 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 1 || count <= 1) {
        for (std::int64_t i = 0; i < count; ++i) f(i);
        return;
    }
    int workers = static_cast<int>(std::min<std::int64_t>(jobs, count));
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                f(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace probeset
