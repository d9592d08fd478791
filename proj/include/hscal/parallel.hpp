#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hscal {

// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
// worker. Chunk boundaries depend only on (n, threads), never on timing, and
// workers write disjoint output ranges, so results are bit-identical at any
// thread count.
inline void parallel_chunks(std::int64_t n, int threads,
                            const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const int workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, n)));
    if (workers == 1) {
        fn(0, n);
        return;
    }
    const std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::int64_t b = w * chunk;
        const std::int64_t e = std::min<std::int64_t>(b + chunk, n);
        if (b >= e) break;
        pool.emplace_back([&, w, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
    parallel_chunks(n, threads, [&](std::int64_t b, std::int64_t e) {
        for (std::int64_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace hscal
