#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/parallel.hpp"

namespace attrforge {

enum class Metric { euclidean, max_norm, sum, weighted_euclidean };

inline std::string to_string(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::max_norm: return "max";
        case Metric::sum: return "sum";
        case Metric::weighted_euclidean: return "weighted-euclidean";
    }
    return "?";
}

/// Sampled subset of phase space. Point order is part of the identity:
/// deterministic tie-breaking in the net builders depends on it.
struct FinitePointSet {
    int dim = 1;
    Metric metric = Metric::euclidean;
    std::vector<double> weights;  // per-coordinate, weighted_euclidean only
    std::vector<double> data;     // row-major, size = count * dim

    FinitePointSet() = default;
    FinitePointSet(int d, Metric m = Metric::euclidean, std::vector<double> w = {})
        : dim(d), metric(m), weights(std::move(w)) {
        require(dim > 0, "point set dimension must be positive");
        if (metric == Metric::weighted_euclidean) {
            require(int(weights.size()) == dim, "weights length must equal dim");
            for (double x : weights) require(x > 0.0, "weights must be strictly positive");
        }
    }

    static FinitePointSet from_rows(int dim, std::vector<double> rows,
                                    Metric m = Metric::euclidean,
                                    std::vector<double> w = {}) {
        FinitePointSet p(dim, m, std::move(w));
        require(rows.size() % std::size_t(dim) == 0, "row data not a multiple of dim");
        p.data = std::move(rows);
        return p;
    }

    std::size_t size() const { return data.size() / std::size_t(dim); }
    bool empty() const { return data.empty(); }

    std::span<const double> point(std::size_t i) const {
        return {data.data() + i * std::size_t(dim), std::size_t(dim)};
    }
    std::span<double> point(std::size_t i) {
        return {data.data() + i * std::size_t(dim), std::size_t(dim)};
    }

    void push_back(std::span<const double> p) {
        require(int(p.size()) == dim, "point length must equal dim");
        data.insert(data.end(), p.begin(), p.end());
    }

    FinitePointSet like_empty() const {
        FinitePointSet p(dim, metric, weights);
        return p;
    }

    /// Bit-exact equality of coordinates (set inclusion bookkeeping).
    bool point_equals(std::size_t i, std::span<const double> p) const {
        return std::memcmp(point(i).data(), p.data(), sizeof(double) * p.size()) == 0;
    }
};

inline double distance(std::span<const double> a, std::span<const double> b,
                       Metric m, std::span<const double> w = {}) {
    switch (m) {
        case Metric::euclidean: {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                s += d * d;
            }
            return std::sqrt(s);
        }
        case Metric::max_norm: {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i)
                s = std::max(s, std::abs(a[i] - b[i]));
            return s;
        }
        case Metric::sum: {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
            return s;
        }
        case Metric::weighted_euclidean: {
            double s = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                s += w[i] * d * d;
            }
            return std::sqrt(s);
        }
    }
    return 0;
}

inline double distance(const FinitePointSet& g, std::size_t i, std::size_t j) {
    return distance(g.point(i), g.point(j), g.metric, g.weights);
}

inline double distance(const FinitePointSet& g, std::size_t i,
                       std::span<const double> p) {
    return distance(g.point(i), p, g.metric, g.weights);
}

/// Exact diameter, O(n^2).
inline double diameter(const FinitePointSet& g) {
    const std::size_t n = g.size();
    std::vector<double> row_max(n, 0.0);
    par::parallel_for(n, [&](std::size_t i) {
        double m = 0;
        for (std::size_t j = i + 1; j < n; ++j)
            m = std::max(m, distance(g, i, j));
        row_max[i] = m;
    });
    double d = 0;
    for (double v : row_max) d = std::max(d, v);
    return d;
}

/// Pseudometric rho(x, y) = norm(Kx - Ky) for a map K into R^m.
/// Symmetric, nonnegative, vanishing on the diagonal by construction.
class PseudometricSpec {
public:
    using MapFn = std::function<std::vector<double>(std::span<const double>)>;

    static PseudometricSpec coordinate_projection(std::vector<std::size_t> dims,
                                                  Metric norm = Metric::euclidean) {
        PseudometricSpec s;
        s.out_dim_ = int(dims.size());
        s.norm_ = norm;
        s.desc_ = "coordinate-projection(" + std::to_string(dims.size()) + ")";
        s.map_ = [dims = std::move(dims)](std::span<const double> x) {
            std::vector<double> out(dims.size());
            for (std::size_t i = 0; i < dims.size(); ++i) out[i] = x[dims[i]];
            return out;
        };
        return s;
    }

    /// First m coordinates.
    static PseudometricSpec coordinate_projection(std::size_t m,
                                                  Metric norm = Metric::euclidean) {
        std::vector<std::size_t> dims(m);
        for (std::size_t i = 0; i < m; ++i) dims[i] = i;
        return coordinate_projection(std::move(dims), norm);
    }

    /// rows x in_dim matrix, row-major.
    static PseudometricSpec linear_map(std::vector<double> matrix, int rows, int in_dim,
                                       Metric norm = Metric::euclidean) {
        require(int(matrix.size()) == rows * in_dim, "matrix shape mismatch");
        PseudometricSpec s;
        s.out_dim_ = rows;
        s.norm_ = norm;
        s.desc_ = "linear-map(" + std::to_string(rows) + "x" + std::to_string(in_dim) + ")";
        s.map_ = [matrix = std::move(matrix), rows, in_dim](std::span<const double> x) {
            std::vector<double> out(rows, 0.0);
            for (int r = 0; r < rows; ++r) {
                double acc = 0;
                for (int c = 0; c < in_dim; ++c) acc += matrix[r * in_dim + c] * x[c];
                out[r] = acc;
            }
            return out;
        };
        return s;
    }

    /// rho(x, y) = norm(K(x) - K(y)) for a user map K.
    static PseudometricSpec seminorm_of_difference(MapFn k, int out_dim,
                                                   Metric norm = Metric::euclidean,
                                                   std::string desc = "user-map") {
        PseudometricSpec s;
        s.out_dim_ = out_dim;
        s.norm_ = norm;
        s.desc_ = std::move(desc);
        s.map_ = std::move(k);
        return s;
    }

    static PseudometricSpec zero() {
        PseudometricSpec s;
        s.out_dim_ = 1;
        s.norm_ = Metric::euclidean;
        s.desc_ = "zero";
        s.map_ = [](std::span<const double>) { return std::vector<double>{0.0}; };
        return s;
    }

    std::vector<double> map(std::span<const double> x) const { return map_(x); }

    double eval(std::span<const double> x, std::span<const double> y) const {
        const auto kx = map_(x);
        const auto ky = map_(y);
        return distance(kx, ky, norm_);
    }

    /// Images of all points of g under K, carrying the rho norm as the
    /// set metric. Index i corresponds to point i of g.
    FinitePointSet project(const FinitePointSet& g) const {
        FinitePointSet out(out_dim_, norm_);
        out.data.resize(g.size() * std::size_t(out_dim_));
        par::parallel_for(g.size(), [&](std::size_t i) {
            const auto v = map_(g.point(i));
            std::copy(v.begin(), v.end(), out.point(i).begin());
        });
        return out;
    }

    int out_dim() const { return out_dim_; }
    Metric norm() const { return norm_; }
    const std::string& describe() const { return desc_; }

private:
    MapFn map_;
    int out_dim_ = 0;
    Metric norm_ = Metric::euclidean;
    std::string desc_;
};

enum class NetKind { packing, covering, both };

/// Greedy net: centers are indices into the input set.
struct NetResult {
    std::vector<std::size_t> centers;
    double radius = 0;
    NetKind kind = NetKind::both;
    std::size_t count = 0;
};

/// Farthest-point insertion order with insertion radii. radii[i] is the
/// min-distance of order[i] to the previously chosen centers (inf for the
/// first). Radii are nonincreasing, so the prefix with radii >= eps is
/// the greedy net at eps.
struct GreedyPermutation {
    std::vector<std::size_t> order;
    std::vector<double> radii;
    std::vector<double> final_min_dist;  // to all chosen centers

    std::size_t count_at(double eps) const {
        std::size_t c = 0;
        while (c < radii.size() && radii[c] >= eps) ++c;
        return c;
    }
};

/// Runs farthest-point insertion until the next insertion radius would
/// drop below eps_stop (0 exhausts all distinct points). First point is
/// index 0; ties broken by lowest index.
inline GreedyPermutation greedy_permutation(const FinitePointSet& g, double eps_stop) {
    require(!g.empty(), "empty point set");
    const std::size_t n = g.size();
    GreedyPermutation perm;
    std::vector<double> mind(n, std::numeric_limits<double>::infinity());
    std::size_t cur = 0;
    double cur_radius = std::numeric_limits<double>::infinity();
    while (true) {
        perm.order.push_back(cur);
        perm.radii.push_back(cur_radius);
        const auto c = g.point(cur);
        par::parallel_for(n, [&](std::size_t i) {
            const double d = distance(g, i, c);
            if (d < mind[i]) mind[i] = d;
        });
        const std::size_t nxt = par::argmax(n, [&](std::size_t i) { return mind[i]; });
        if (mind[nxt] < eps_stop || mind[nxt] == 0.0 || perm.order.size() == n) break;
        cur = nxt;
        cur_radius = mind[nxt];
    }
    perm.final_min_dist = std::move(mind);
    return perm;
}

/// Greedy maximal packing at radius eps; by maximality also a covering
/// (every point strictly within eps of a center). When rho is supplied the
/// net is built in the pseudometric instead of the set metric.
inline NetResult greedy_net(const FinitePointSet& g, double eps,
                            const std::optional<PseudometricSpec>& rho = std::nullopt) {
    require(!g.empty(), "empty point set");
    require(eps > 0, "epsilon must be positive");
    const FinitePointSet* base = &g;
    FinitePointSet projected;
    if (rho) {
        projected = rho->project(g);
        base = &projected;
    }
    const auto perm = greedy_permutation(*base, eps);
    NetResult net;
    net.radius = eps;
    net.kind = NetKind::both;
    net.count = perm.count_at(eps);
    net.centers.assign(perm.order.begin(), perm.order.begin() + net.count);
    // Separation holds by construction (insertion radii >= eps); coverage is
    // witnessed by the final min-distance array.
    for (std::size_t i = 1; i < net.count; ++i)
        require(perm.radii[i] >= eps, "net separation invariant failed");
    for (std::size_t i = 0; i < base->size(); ++i)
        require(perm.final_min_dist[i] < eps || perm.final_min_dist[i] == 0.0,
                "net coverage invariant failed");
    return net;
}

/// Exact minimal number of open eps-balls centered at points of g that
/// cover g. Exponential subset search; test oracle only.
inline std::size_t exact_cover_number(const FinitePointSet& g, double eps) {
    require(!g.empty(), "empty point set");
    require(eps > 0, "epsilon must be positive");
    const std::size_t n = g.size();
    require(n <= 20, "oracle size exceeded");
    std::vector<std::uint32_t> ball(n, 0);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t i = 0; i < n; ++i)
            if (distance(g, c, i) < eps) ball[c] |= (1u << i);
    const std::uint32_t full = (n == 32) ? ~0u : ((1u << n) - 1u);
    // BFS over number of balls: try all subsets of size m via DP on the
    // lowest uncovered point.
    std::vector<std::uint8_t> best(std::size_t(full) + 1, 255);
    best[0] = 0;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
        if (best[mask] == 255) continue;
        if (mask == full) continue;
        std::uint32_t uncovered = full & ~mask;
        const int low = __builtin_ctz(uncovered);
        for (std::size_t c = 0; c < n; ++c) {
            if (!(ball[c] & (1u << low))) continue;
            const std::uint32_t nm = mask | ball[c];
            if (best[nm] > best[mask] + 1) best[nm] = best[mask] + 1;
        }
        if (full == 0) break;
    }
    return best[full];
}

/// Least-squares fit of log N(G, eps) against log(1/eps).
struct DimensionFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    std::pair<double, double> eps_range{0, 0};
    std::vector<std::pair<double, std::size_t>> counts;  // (eps, N)
};

inline DimensionFit box_counting_dimension(const FinitePointSet& g,
                                           const std::vector<double>& eps_grid) {
    require(!g.empty(), "empty point set");
    require(eps_grid.size() >= 3, "need at least 3 epsilon values");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        require(eps_grid[i] > 0, "epsilon must be positive");
        if (i) require(eps_grid[i] < eps_grid[i - 1], "epsilon grid must be decreasing");
    }
    const double eps_min = eps_grid.back();
    const auto perm = greedy_permutation(g, eps_min);
    DimensionFit fit;
    fit.eps_range = {eps_min, eps_grid.front()};
    for (double e : eps_grid) fit.counts.emplace_back(e, perm.count_at(e));

    bool all_equal = true;
    for (const auto& [e, c] : fit.counts) all_equal &= (c == fit.counts.front().second);
    if (all_equal) {
        fit.slope = 0;
        fit.intercept = std::log(double(fit.counts.front().second));
        fit.r_squared = 0;  // degenerate fit flag
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = double(fit.counts.size());
    for (const auto& [e, c] : fit.counts) {
        const double x = std::log(1.0 / e);
        const double y = std::log(double(c));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / m;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / m;
    for (const auto& [e, c] : fit.counts) {
        const double x = std::log(1.0 / e);
        const double y = std::log(double(c));
        const double yh = fit.slope * x + fit.intercept;
        ss_res += (y - yh) * (y - yh);
        ss_tot += (y - ybar) * (y - ybar);
    }
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
    return fit;
}

/// sup_{x in G} inf_{y in H} d(x, y).
inline double hausdorff_distance_onesided(const FinitePointSet& g,
                                          const FinitePointSet& h) {
    require(!h.empty(), "empty target point set");
    require(g.dim == h.dim, "dimension mismatch");
    require(g.metric == h.metric, "metric mismatch");
    const std::size_t n = g.size();
    std::vector<double> dmin(n, 0.0);
    par::parallel_for(n, [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        const auto p = g.point(i);
        for (std::size_t j = 0; j < h.size(); ++j)
            best = std::min(best, distance(h, j, p));
        dmin[i] = best;
    });
    double d = 0;
    for (double v : dmin) d = std::max(d, v);
    return d;
}

}  // namespace attrforge
