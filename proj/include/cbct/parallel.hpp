#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace cbct {

/// Number of worker threads to use when a caller passes 0.
inline int default_thread_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Splits [0, n) into `threads` contiguous chunks and calls
/// fn(begin, end, chunk_index) for each one. Chunk boundaries depend only on
/// (n, threads), so results are reproducible at a fixed thread count.
template <typename Fn>
void parallel_chunks(std::int64_t n, int threads, Fn&& fn) {
    if (threads <= 0) threads = default_thread_count();
    threads = static_cast<int>(std::min<std::int64_t>(threads, std::max<std::int64_t>(n, 1)));
    if (threads == 1) {
        fn(std::int64_t{0}, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const std::int64_t begin = n * t / threads;
        const std::int64_t end = n * (t + 1) / threads;
        pool.emplace_back([&fn, begin, end, t] { fn(begin, end, t); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace cbct
