#pragma once

// Test-only oracles, independent of the library's production code paths:
// cell counting, 1-d sweeps, closed forms, and small brute-force searches.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include <attrforge/metric.hpp>

namespace oracles {

/// Number of occupied axis-aligned cells of side eps (box counting).
inline std::size_t grid_cell_count(const attrforge::FinitePointSet& g, double eps) {
    std::set<std::vector<std::int64_t>> cells;
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<std::int64_t> key(g.dim);
        for (int c = 0; c < g.dim; ++c)
            key[std::size_t(c)] = std::int64_t(std::floor(g.point(i)[std::size_t(c)] / eps));
        cells.insert(key);
    }
    return cells.size();
}

inline double grid_cell_slope(const attrforge::FinitePointSet& g,
                              const std::vector<double>& eps_grid) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double e : eps_grid) {
        const double x = std::log(1.0 / e);
        const double y = std::log(double(grid_cell_count(g, e)));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double m = double(eps_grid.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// Exact minimal number of open eps-balls covering a 1-d point list with
/// centers among the points (greedy sweep is optimal on a line).
inline std::size_t line_min_cover(std::vector<double> pts, double eps) {
    std::sort(pts.begin(), pts.end());
    std::size_t i = 0, cnt = 0;
    while (i < pts.size()) {
        std::size_t j = i;
        while (j + 1 < pts.size() && pts[j + 1] - pts[i] < eps) ++j;
        const double center = pts[j];
        ++cnt;
        std::size_t k = j;
        while (k + 1 < pts.size() && pts[k + 1] - center < eps) ++k;
        i = k + 1;
    }
    return cnt;
}

/// Exact maximal cardinality of a subset with pairwise distance >= eps on
/// a line (left-to-right sweep is optimal).
inline std::size_t line_max_packing(std::vector<double> pts, double eps) {
    std::sort(pts.begin(), pts.end());
    std::size_t cnt = 0;
    double last = -std::numeric_limits<double>::infinity();
    for (double p : pts) {
        if (p - last >= eps) {
            ++cnt;
            last = p;
        }
    }
    return cnt;
}

/// Exhaustive minimal cover with internal centers, any metric, n <= 16.
/// Independent of the library's DP (iterative deepening over cover size).
inline std::size_t brute_min_cover(const attrforge::FinitePointSet& g, double eps) {
    const std::size_t n = g.size();
    std::vector<std::uint32_t> ball(n, 0);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t i = 0; i < n; ++i)
            if (attrforge::distance(g, c, i) < eps) ball[c] |= (1u << i);
    const std::uint32_t full = (1u << n) - 1u;
    for (std::size_t size = 1; size <= n; ++size) {
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = i;
        while (true) {
            std::uint32_t acc = 0;
            for (std::size_t i : idx) acc |= ball[i];
            if (acc == full) return size;
            std::size_t pos = size;
            bool done = true;
            while (pos > 0) {
                --pos;
                if (idx[pos] != n - size + pos) { done = false; break; }
            }
            if (done) break;
            ++idx[pos];
            for (std::size_t i = pos + 1; i < size; ++i) idx[i] = idx[i - 1] + 1;
        }
    }
    return n;
}

/// Exhaustive maximal eps-distinguishable subset size (n <= 20).
inline std::size_t brute_max_distinguishable(const std::vector<double>& vals, double eps) {
    const std::size_t n = vals.size();
    std::size_t best = 0;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i)
            for (std::size_t j = i + 1; j < n && ok; ++j)
                if ((mask >> i & 1) && (mask >> j & 1) &&
                    std::abs(vals[i] - vals[j]) < eps)
                    ok = false;
        if (ok) best = std::max<std::size_t>(best, std::size_t(__builtin_popcount(mask)));
    }
    return best;
}

inline double closed_form_affine_orbit(double x0, double eta, double c, int k) {
    // x_k = eta^k x0 + c (1 - eta^k) / (1 - eta)
    const double ek = std::pow(eta, k);
    return ek * x0 + c * (1.0 - ek) / (1.0 - eta);
}

}  // namespace oracles
