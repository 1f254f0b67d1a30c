#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace mfg {

// Process-wide worker cap, set once by the CLI --threads flag.
// All parallel loops write to disjoint slots, so results do not depend on it.
inline int& worker_threads() {
    static int n = 1;
    return n;
}

// Runs fn(begin, end) over contiguous chunks of [0, n).
inline void parallel_for(int n, const std::function<void(int, int)>& fn) {
    int workers = std::max(1, worker_threads());
    if (workers == 1 || n < 2 * workers) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int begin = w * chunk;
        int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(fn, begin, end);
    }
    for (auto& th : pool) th.join();
}

}  // namespace mfg
