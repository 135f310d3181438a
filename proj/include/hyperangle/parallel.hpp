#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace hyperangle {

// requested > 0 wins, then HYPERANGLE_THREADS, then the hardware count.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HYPERANGLE_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Calls body(begin, end, worker) on contiguous blocks. Every index is visited
// exactly once; results written per index are independent of thread count.
template <class Body>
void parallel_blocks(std::size_t n, int threads, Body body) {
    threads = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (threads == 1 || n < 2) {
        body(std::size_t{0}, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex m;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const std::size_t b = std::min(n, w * chunk), e = std::min(n, b + chunk);
        pool.emplace_back([&, b, e, w] {
            try {
                body(b, e, w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(m);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

template <class Body>
void parallel_for(std::size_t n, int threads, Body body) {
    parallel_blocks(n, threads, [&](std::size_t b, std::size_t e, int) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

// Pairwise (tree) summation; the order depends only on the input length.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

}  // namespace hyperangle
