#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace splatgen {

/// Global worker cap; 0 = hardware concurrency. Seeded from SPLATGEN_THREADS.
inline int& thread_limit() {
    static int limit = [] {
        if (const char* env = std::getenv("SPLATGEN_THREADS")) {
            int v = std::atoi(env);
            if (v > 0) return v;
        }
        return 0;
    }();
    return limit;
}

inline int effective_threads() {
    int limit = thread_limit();
    unsigned hw = std::thread::hardware_concurrency();
    int n = limit > 0 ? limit : int(hw ? hw : 1);
    return n < 1 ? 1 : n;
}

/// Runs fn(i) for i in [0, count). Work items must be independent; any
/// cross-item reduction is the caller's job (merge in index order for
/// run-to-run determinism).
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    int nthreads = effective_threads();
    if (nthreads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads));
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace splatgen
