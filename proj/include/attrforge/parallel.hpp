#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace attrforge::par {

/// Global worker count. 1 means fully serial. The CLI sets this from
/// --threads; results must not depend on it (see parallel_for).
inline int& thread_count() {
    static int n = 1;
    return n;
}

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks,
/// one per worker. Each index is processed exactly once and bodies must
/// only write to per-index slots, so the result is identical for any
/// thread count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    const int workers = std::max(1, thread_count());
    if (workers == 1 || n < 2048) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    const std::size_t per = (n + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = c * per;
        const std::size_t hi = std::min(n, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// Deterministic argmax with lowest-index tie-break, parallel over chunks.
/// The winner is a pure function of the array, independent of chunking.
template <class GetValue>
std::size_t argmax(std::size_t n, GetValue&& value) {
    const int workers = std::max(1, thread_count());
    if (workers == 1 || n < 4096) {
        std::size_t best = 0;
        double bv = value(0);
        for (std::size_t i = 1; i < n; ++i) {
            const double v = value(i);
            if (v > bv) { bv = v; best = i; }
        }
        return best;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    const std::size_t per = (n + chunks - 1) / chunks;
    std::vector<std::size_t> idx(chunks, 0);
    std::vector<double> val(chunks, 0.0);
    std::vector<std::thread> pool;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = c * per;
        const std::size_t hi = std::min(n, lo + per);
        if (lo >= hi) { idx[c] = n; continue; }
        pool.emplace_back([lo, hi, c, &idx, &val, &value] {
            std::size_t best = lo;
            double bv = value(lo);
            for (std::size_t i = lo + 1; i < hi; ++i) {
                const double v = value(i);
                if (v > bv) { bv = v; best = i; }
            }
            idx[c] = best;
            val[c] = bv;
        });
    }
    for (auto& t : pool) t.join();
    std::size_t best = n;
    double bv = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        if (idx[c] == n) continue;
        if (best == n || val[c] > bv || (val[c] == bv && idx[c] < best)) {
            bv = val[c];
            best = idx[c];
        }
    }
    return best;
}

}  // namespace attrforge::par
