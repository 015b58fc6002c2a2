// parallel.hpp — minimal deterministic work partitioning over std::thread.
//
// Every parallel loop partitions a fixed index range into contiguous blocks;
// workers never share output slots, so results are bit-identical for any
// worker count.
#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace oz2 {

inline int& worker_threads() {
    static int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return n;
}

// Invokes fn(i) for i in [0, count). fn must only write state owned by index i.
template <class Fn>
void parallel_for(std::int64_t count, Fn&& fn) {
    const int threads = std::min<std::int64_t>(worker_threads(), count);
    if (threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::int64_t block = (count + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        const std::int64_t lo = t * block;
        const std::int64_t hi = std::min<std::int64_t>(lo + block, count);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace oz2
