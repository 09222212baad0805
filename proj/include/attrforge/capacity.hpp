#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/rng.hpp"

namespace attrforge {

enum class NormKind { l1, l2, linf, weighted_l2 };

inline std::string to_string(NormKind k) {
    switch (k) {
        case NormKind::l1: return "l1";
        case NormKind::l2: return "l2";
        case NormKind::linf: return "linf";
        case NormKind::weighted_l2: return "weighted-l2";
    }
    return "?";
}

inline NormKind norm_from_string(const std::string& s) {
    if (s == "l1") return NormKind::l1;
    if (s == "l2") return NormKind::l2;
    if (s == "linf") return NormKind::linf;
    if (s == "weighted-l2") return NormKind::weighted_l2;
    throw error("unknown norm: " + s);
}

inline double norm_eval(std::span<const double> x, NormKind k,
                        std::span<const double> w = {}) {
    switch (k) {
        case NormKind::l1: {
            double s = 0;
            for (double v : x) s += std::abs(v);
            return s;
        }
        case NormKind::l2: {
            double s = 0;
            for (double v : x) s += v * v;
            return std::sqrt(s);
        }
        case NormKind::linf: {
            double s = 0;
            for (double v : x) s = std::max(s, std::abs(v));
            return s;
        }
        case NormKind::weighted_l2: {
            double s = 0;
            for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * x[i];
            return std::sqrt(s);
        }
    }
    return 0;
}

/// Pair of norms on the same K^n; packing is measured in Y over the X unit
/// ball.
struct NormPair {
    int n = 1;
    NormKind norm_x = NormKind::l2;
    NormKind norm_y = NormKind::l2;
    std::vector<double> wx, wy;
    ScalarField field = ScalarField::real_field;

    void validate() const {
        require(n >= 1, "dimension must be positive");
        if (norm_x == NormKind::weighted_l2) {
            require(int(wx.size()) == n, "wx length mismatch");
            for (double v : wx) require(v > 0, "weights must be positive");
        }
        if (norm_y == NormKind::weighted_l2) {
            require(int(wy.size()) == n, "wy length mismatch");
            for (double v : wy) require(v > 0, "weights must be positive");
        }
    }
};

/// Real dimension n (or 2n over C).
inline double real_dimension(ScalarField field, double n) {
    return field == ScalarField::complex_as_2n ? 2.0 * n : n;
}

/// max ||x||_Y over the X unit ball, for the lp trio and weighted-l2.
inline double norm_equivalence_radius(const NormPair& pair) {
    const auto p_of = [](NormKind k) {
        switch (k) {
            case NormKind::l1: return 1.0;
            case NormKind::l2: return 2.0;
            case NormKind::linf: return std::numeric_limits<double>::infinity();
            default: return -1.0;
        }
    };
    const double n = double(pair.n);
    const double px = p_of(pair.norm_x), py = p_of(pair.norm_y);
    if (px > 0 && py > 0) {
        const double ix = std::isinf(px) ? 0.0 : 1.0 / px;
        const double iy = std::isinf(py) ? 0.0 : 1.0 / py;
        return std::pow(n, std::max(0.0, iy - ix));
    }
    if (pair.norm_x == NormKind::weighted_l2 && pair.norm_y == NormKind::l2) {
        double m = 0;
        for (double w : pair.wx) m = std::max(m, 1.0 / std::sqrt(w));
        return m;
    }
    if (pair.norm_x == NormKind::l2 && pair.norm_y == NormKind::weighted_l2) {
        double m = 0;
        for (double w : pair.wy) m = std::max(m, std::sqrt(w));
        return m;
    }
    throw error("no equivalence radius for this norm pair");
}

struct PackingResult {
    std::size_t count = 0;
    std::vector<double> points;  // row-major, count x n
    std::size_t candidates_tried = 0;
};

namespace detail {

/// Deterministic point with X-norm <= 1 (exact direction sampling per norm).
inline void sample_unit_ball(Rng& rng, const NormPair& pair, std::span<double> out) {
    const int n = pair.n;
    switch (pair.norm_x) {
        case NormKind::linf:
            for (int i = 0; i < n; ++i) out[i] = rng.uniform(-1.0, 1.0);
            return;
        case NormKind::l1: {
            // exponential magnitudes with signs, then radius u^(1/n)
            double s = 0;
            for (int i = 0; i < n; ++i) {
                double u = rng.uniform();
                while (u <= 0) u = rng.uniform();
                out[i] = -std::log(u) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
                s += std::abs(out[i]);
            }
            const double r = std::pow(rng.uniform(), 1.0 / double(n));
            for (int i = 0; i < n; ++i) out[i] *= r / s;
            return;
        }
        case NormKind::l2:
        case NormKind::weighted_l2: {
            double s = 0;
            for (int i = 0; i < n; ++i) {
                out[i] = rng.normal();
                s += out[i] * out[i];
            }
            s = std::sqrt(s);
            if (s == 0) { out[0] = 1; s = 1; }
            const double r = std::pow(rng.uniform(), 1.0 / double(n));
            for (int i = 0; i < n; ++i) out[i] *= r / s;
            if (pair.norm_x == NormKind::weighted_l2)
                for (int i = 0; i < n; ++i) out[i] /= std::sqrt(pair.wx[i]);
            return;
        }
    }
}

/// Structured candidates for restart r: origin, one restart-dependent
/// regular polygon on the boundary (2-d), axis extremes, then the other
/// polygons. Rigid optimal configurations (e.g. center plus hexagon at
/// separation 1) are reachable only when their polygon leads the order.
inline std::vector<std::vector<double>> structured_candidates(const NormPair& pair,
                                                              std::size_t restart) {
    const int n = pair.n;
    std::vector<std::vector<double>> cand;
    cand.emplace_back(n, 0.0);

    const auto push_boundary = [&](std::vector<double> p) {
        const double nx = norm_eval(p, pair.norm_x, pair.wx);
        if (nx == 0) return;
        for (auto& v : p) v /= nx;
        cand.push_back(std::move(p));
    };
    const auto push_gon = [&](int m, int rot) {
        for (int k = 0; k < m; ++k) {
            const double a = (double(k) + 0.5 * rot) * 2.0 *
                             3.141592653589793238462643383279 / double(m);
            push_boundary({std::cos(a), std::sin(a)});
        }
    };
    const int lead_m = 3 + int(restart % 10);  // 3..12 across restarts
    if (n == 2) push_gon(lead_m, 0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> p(n, 0.0);
        p[i] = 1.0;
        push_boundary(p);
        p[i] = -1.0;
        push_boundary(p);
    }
    if (n == 2) {
        for (int m = 3; m <= 12; ++m)
            for (int rot = 0; rot < 2; ++rot) {
                if (m == lead_m && rot == 0) continue;
                push_gon(m, rot);
            }
    }
    return cand;
}

}  // namespace detail

/// Greedy packing of the closed X unit ball measured in the Y norm:
/// candidates are inserted when they keep pairwise Y-distance >= eps (a
/// 1e-9 relative slack admits configurations whose critical distances are
/// exactly eps, which floating point realizes one ulp short). Lower bound
/// on the true packing number; deterministic under the seed.
inline PackingResult unit_ball_packing(const NormPair& pair, double eps,
                                       std::size_t budget = 100000,
                                       std::uint64_t seed = 1) {
    pair.validate();
    require(eps > 0, "epsilon must be positive");
    const int n = pair.n;
    const double sep = eps * (1.0 - 1e-9);
    const std::size_t restarts = 8;

    PackingResult best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng = Rng(seed).split(r);
        std::vector<double> chosen;
        std::size_t count = 0;
        const auto try_insert = [&](std::span<const double> p) {
            if (norm_eval(p, pair.norm_x, pair.wx) > 1.0 + 1e-12) return;
            std::vector<double> diff(n);
            for (std::size_t j = 0; j < count; ++j) {
                for (int c = 0; c < n; ++c) diff[c] = p[c] - chosen[j * n + c];
                if (norm_eval(diff, pair.norm_y, pair.wy) < sep) return;
            }
            chosen.insert(chosen.end(), p.begin(), p.end());
            ++count;
        };
        for (const auto& p : detail::structured_candidates(pair, r)) try_insert(p);
        std::vector<double> p(n);
        const std::size_t tries = budget / restarts;
        for (std::size_t t = 0; t < tries; ++t) {
            detail::sample_unit_ball(rng, pair, p);
            try_insert(p);
        }
        best.candidates_tried += tries;
        if (count > best.count) {
            best.count = count;
            best.points = chosen;
        }
    }
    return best;
}

/// Ball-volume comparison bound on packings of a radius-r ball at
/// separation eps in n_real real dimensions.
inline double volume_upper_bound(double r, double eps, double n_real) {
    require(r > 0 && eps > 0 && n_real > 0, "arguments must be positive");
    return std::pow(1.0 + 2.0 * r / eps, n_real);
}

/// Exact multiplicative distortion of lp^n against Euclidean lp2^n:
/// n^|1/p - 1/2|, so 1 at p = 2 and sqrt(n) at p in {1, inf}.
inline double banach_mazur_lp(int n, double p) {
    require(n >= 1, "dimension must be positive");
    if (p == 1.0) return std::pow(double(n), 0.5);
    if (p == 2.0) return 1.0;
    if (std::isinf(p)) return std::pow(double(n), 0.5);
    throw error("banach_mazur_lp supports p in {1, 2, inf} only");
}

inline double john_bound(int n) {
    require(n >= 1, "dimension must be positive");
    return std::sqrt(double(n));
}

/// Count bound for covering a radius-r ball of an n-dimensional normed
/// space by open eps-balls, in the distortion form and the John form.
struct FiniteCoverBound {
    double bm_form = 0;    // (1 + 2 d_BM r / eps)^n_real
    double sqrt_form = 0;  // (1 + 2 sqrt(n) r / eps)^n_real
};

inline FiniteCoverBound finite_cover_count_bound(int n, double r, double eps, double d_bm,
                                                 ScalarField field) {
    require(n >= 1, "dimension must be positive");
    require(eps > 0 && eps < r, "need 0 < eps < r");
    require(d_bm >= 1, "distortion must be >= 1");
    const double nn = real_dimension(field, double(n));
    FiniteCoverBound out;
    out.bm_form = std::pow(1.0 + 2.0 * d_bm * r / eps, nn);
    out.sqrt_form = std::pow(1.0 + 2.0 * std::sqrt(double(n)) * r / eps, nn);
    return out;
}

/// log2 of a packing count.
inline double epsilon_capacity(std::size_t count) {
    require(count >= 1, "count must be >= 1");
    return std::log2(double(count));
}

}  // namespace attrforge
