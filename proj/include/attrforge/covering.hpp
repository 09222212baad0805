#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/metric.hpp"
#include "attrforge/semigroup.hpp"

#include <json.hpp>

namespace attrforge {

struct CoveringTerm {
    int k = 0;
    double eps = 0;       // a * q^k
    std::size_t count = 0;  // measured greedy covering count
    double allowed = 0;     // b * h^k
};

/// Empirical witness of the covering condition: measured covering counts
/// of S(kT)B at radius a q^k against the budget b h^k. Sampled covering
/// counts lower-bound continuum counts, so this is evidence, not proof;
/// the empirical flag is mandatory in every serialized report.
struct CoveringCertificate {
    int k0 = 1;
    double a = 1, b = 1, q = 0.5, h = 1, T = 1;
    std::vector<CoveringTerm> per_k;
    bool empirical = true;

    double dim_bound() const { return h <= 1.0 ? 0.0 : std::log(h) / std::log(1.0 / q); }
    double xi_T() const { return std::log(1.0 / q) / T; }

    void validate() const {
        require(k0 >= 1, "k0 must be positive");
        require(a > 0 && b >= 1, "need a > 0 and b >= 1");
        require(q > 0 && q < 1, "q must lie in (0,1)");
        require(h >= 1, "h must be >= 1");
        require(T > 0, "T must be positive");
        double prev_eps = std::numeric_limits<double>::infinity();
        for (const auto& t : per_k) {
            require(t.eps < prev_eps, "per-k radii must be strictly decreasing");
            require(double(t.count) <= t.allowed, "stored count exceeds allowed budget");
            prev_eps = t.eps;
        }
        require(std::isfinite(dim_bound()), "dimension bound must be finite");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = "cover/1";
        j["k0"] = k0;
        j["a"] = a;
        j["b"] = b;
        j["q"] = q;
        j["h"] = h;
        j["T"] = T;
        j["empirical"] = empirical;
        j["dim_bound"] = dim_bound();
        j["xi_T"] = xi_T();
        j["per_k"] = nlohmann::json::array();
        for (const auto& t : per_k)
            j["per_k"].push_back({{"k", t.k}, {"eps", t.eps}, {"count", t.count},
                                  {"allowed", t.allowed}});
        return j;
    }

    static CoveringCertificate from_json(const nlohmann::json& j) {
        CoveringCertificate c;
        c.k0 = j.at("k0").get<int>();
        c.a = j.at("a").get<double>();
        c.b = j.at("b").get<double>();
        c.q = j.at("q").get<double>();
        c.h = j.at("h").get<double>();
        c.T = j.at("T").get<double>();
        c.empirical = j.at("empirical").get<bool>();
        for (const auto& t : j.at("per_k"))
            c.per_k.push_back({t.at("k").get<int>(), t.at("eps").get<double>(),
                               t.at("count").get<std::size_t>(), t.at("allowed").get<double>()});
        return c;
    }
};

inline double dim_bound(const CoveringCertificate& c) { return c.dim_bound(); }
inline double attraction_rate_bound(const CoveringCertificate& c) { return c.xi_T(); }

struct CoveringCheck {
    bool pass = true;
    CoveringCertificate cert;
    std::optional<CoveringTerm> first_violation;
};

namespace detail {
inline std::size_t distinct_points(const FinitePointSet& g) {
    std::unordered_set<std::string> seen;
    std::string key(std::size_t(g.dim) * sizeof(double), '\0');
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::memcpy(key.data(), g.point(i).data(), key.size());
        seen.insert(key);
    }
    return seen.size();
}
}  // namespace detail

/// Measures greedy covering counts of S(kT)B at radius a q^k for
/// k0 <= k <= k_max and compares them against b h^k.
inline CoveringCheck check_covering_condition(const SystemSpec& sys, const FinitePointSet& b_set,
                                              double T, double a, double q, double b, double h,
                                              int k0, int k_max) {
    require(q > 0 && q < 1, "q must lie in (0,1)");
    require(h >= 1, "h must be >= 1");
    require(a > 0 && b > 0, "a and b must be positive");
    require(k0 >= 1 && k0 <= k_max, "need 1 <= k0 <= k_max");
    CoveringCheck out;
    out.cert.k0 = k0;
    out.cert.a = a;
    out.cert.b = b;
    out.cert.q = q;
    out.cert.h = h;
    out.cert.T = T;
    FinitePointSet image = b_set;
    for (int k = 1; k <= k_max; ++k) {
        image = step(sys, image, T);
        if (k < k0) continue;
        const double eps = a * std::pow(q, k);
        const auto net = greedy_net(image, eps);
        CoveringTerm term{k, eps, net.count, b * std::pow(h, k)};
        out.cert.per_k.push_back(term);
        if (out.pass && double(term.count) > term.allowed) {
            out.pass = false;
            out.first_violation = term;
        }
    }
    return out;
}

/// Constant-selection policy for the fitted certificate radius scale.
struct APolicy {
    enum class Kind { scaled_diam, fixed } kind = Kind::scaled_diam;
    double value = 1.5;

    static APolicy scaled(double s) { return {Kind::scaled_diam, s}; }
    static APolicy fixed(double a) { return {Kind::fixed, a}; }

    double resolve(const FinitePointSet& b_set) const {
        if (kind == Kind::fixed) return value;
        return value * std::max(diameter(b_set), 1.0);
    }
};

/// Fits (q, h) with b = 1: h(q) is the per-k root max of the measured
/// counts, so the returned certificate passes every k it was fitted on.
/// q is chosen to minimize the dimension bound over the grid; a q is
/// infeasible when some count saturates the distinct points of the image
/// (the sample cannot witness a covering at that radius).
inline CoveringCertificate fit_certificate(const SystemSpec& sys, const FinitePointSet& b_set,
                                           double T, int k0, int k_max,
                                           const std::vector<double>& q_grid,
                                           APolicy a_policy = {}) {
    require(!q_grid.empty(), "empty q grid");
    for (double q : q_grid) require(q > 0 && q < 1, "q values must lie in (0,1)");
    require(k0 >= 1 && k0 <= k_max, "need 1 <= k0 <= k_max");
    const double a = a_policy.resolve(b_set);

    std::vector<FinitePointSet> images;
    std::vector<std::size_t> distinct;
    {
        FinitePointSet image = b_set;
        for (int k = 1; k <= k_max; ++k) {
            image = step(sys, image, T);
            if (k >= k0) {
                images.push_back(image);
                distinct.push_back(detail::distinct_points(image));
            }
        }
    }

    std::optional<CoveringCertificate> best;
    for (double q : q_grid) {
        CoveringCertificate cert;
        cert.k0 = k0;
        cert.a = a;
        cert.b = 1.0;
        cert.q = q;
        cert.T = T;
        double h = 1.0;
        bool feasible = true;
        for (int k = k0; k <= k_max; ++k) {
            const double eps = a * std::pow(q, k);
            const auto net = greedy_net(images[std::size_t(k - k0)], eps);
            if (net.count == distinct[std::size_t(k - k0)] && net.count > 1) {
                feasible = false;
                break;
            }
            cert.per_k.push_back({k, eps, net.count, 0.0});
            h = std::max(h, std::pow(double(net.count), 1.0 / double(k)));
        }
        if (!feasible) continue;
        cert.h = h;
        for (auto& t : cert.per_k) t.allowed = std::pow(h, t.k);
        if (!best || cert.dim_bound() < best->dim_bound()) best = cert;
    }
    require(best.has_value(), "no certificate in grid");
    best->validate();
    return *best;
}

/// One cover-propagation step: given a ball cover of A at radius eps, a
/// pseudometric rho on A and the contraction inequality
/// d(Sx, Sy) <= eta d(x,y) + rho(x,y), splits every cover cell by a
/// maximal (sigma eps)-distinguishable subset in rho and covers the image
/// by balls around the images of the distinguished points.
struct PairEval {
    std::size_t i = 0, j = 0;
    double d_xy = 0, d_image = 0, rho_xy = 0;
};

struct PropagationResult {
    std::size_t n_hat = 0;             // cover cell count of A
    std::size_t c_rho = 0;             // max distinguishable count per cell
    std::size_t predicted_bound = 0;   // n_hat * c_rho
    std::size_t realized_count = 0;    // sum of per-cell counts
    std::vector<std::size_t> centers;  // indices into the image set
    double radius = 0;                 // claimed cover radius on the image
    double realized_max_dist = 0;      // measured, always < radius
    bool coverage_verified = false;
};

inline PropagationResult propagate_cover(const FinitePointSet& a_set,
                                         const FinitePointSet& image,
                                         const NetResult& cover,
                                         const PseudometricSpec& rho, double eta,
                                         double sigma,
                                         const std::vector<PairEval>& pair_data = {}) {
    require(a_set.size() == image.size(), "image must be aligned with the source set");
    require(eta >= 0 && sigma > 0, "need eta >= 0 and sigma > 0");
    const double eps = cover.radius;

    for (const auto& p : pair_data) {
        const double tol = 1e-12 * std::max(1.0, p.d_image);
        if (p.d_image > eta * p.d_xy + p.rho_xy + tol)
            throw error("contraction inequality violated on pair (" + std::to_string(p.i) +
                        ", " + std::to_string(p.j) + ")");
    }

    // Cell assignment: nearest cover center, ties to the earliest center.
    const std::size_t n = a_set.size();
    std::vector<std::size_t> cell(n, 0);
    std::vector<std::uint8_t> uncovered(n, 0);
    par::parallel_for(n, [&](std::size_t i) {
        double bd = std::numeric_limits<double>::infinity();
        std::size_t bc = 0;
        for (std::size_t c = 0; c < cover.centers.size(); ++c) {
            const double d = distance(a_set, cover.centers[c], a_set.point(i));
            if (d < bd) { bd = d; bc = c; }
        }
        if (!(bd < eps)) uncovered[i] = 1;
        cell[i] = bc;
    });
    for (std::size_t i = 0; i < n; ++i)
        require(!uncovered[i], "cover does not cover the source set");

    const FinitePointSet mapped = rho.project(a_set);
    const double sep = sigma * eps;

    PropagationResult out;
    out.n_hat = cover.centers.size();
    out.radius = 3.0 * (eta + sigma) * eps;

    std::vector<std::size_t> assigned_center(n, 0);
    for (std::size_t c = 0; c < cover.centers.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (cell[i] == c) members.push_back(i);
        if (members.empty()) continue;
        // greedy maximal distinguishable subset, lowest index first
        std::vector<std::size_t> marks;
        for (std::size_t i : members) {
            bool distinguishable = true;
            for (std::size_t m : marks)
                if (distance(mapped, m, mapped.point(i)) < sep) { distinguishable = false; break; }
            if (distinguishable) marks.push_back(i);
        }
        out.c_rho = std::max(out.c_rho, marks.size());
        out.realized_count += marks.size();
        for (std::size_t m : marks) out.centers.push_back(m);
        for (std::size_t i : members) {
            for (std::size_t m : marks)
                if (distance(mapped, m, mapped.point(i)) < sep) { assigned_center[i] = m; break; }
        }
        for (std::size_t m : marks) assigned_center[m] = m;
    }
    out.predicted_bound = out.n_hat * out.c_rho;

    // The distinguished-point construction bounds the in-cell image
    // distance by (2 eta + sigma) eps < 3 (eta + sigma) eps; spot-check the
    // inequality on the pairs the construction actually uses.
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = assigned_center[i];
        const double d_img = distance(image, m, image.point(i));
        const double d_src = distance(a_set, m, a_set.point(i));
        const double r = distance(mapped, m, mapped.point(i));
        const double tol = 1e-12 * std::max(1.0, d_img);
        if (d_img > eta * d_src + r + tol)
            throw error("contraction inequality violated on pair (" + std::to_string(i) +
                        ", " + std::to_string(m) + ")");
        worst = std::max(worst, d_img);
    }
    out.realized_max_dist = worst;
    out.coverage_verified = worst < out.radius;
    require(out.coverage_verified, "realized cover radius exceeded");
    return out;
}

}  // namespace attrforge
