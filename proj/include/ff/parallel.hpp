#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ff {

// Worker count: FF_THREADS if set, else hardware concurrency.
inline int thread_count() {
    if (const char* env = std::getenv("FF_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Runs f(i) for i in [0, n). Each index is processed exactly once; callers
// must write results into index-addressed slots so the outcome is identical
// for any thread count.
template <typename F>
void parallel_for(int n, F&& f) {
    int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) break;
                f(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace ff
