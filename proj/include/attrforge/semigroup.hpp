#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/metric.hpp"
#include "attrforge/rng.hpp"

#include <json.hpp>

namespace attrforge {

enum class SystemKind { discrete_map, ode_flow };

/// A semigroup: a discrete time-1 map or an ODE vector field with a fixed
/// RK4 step. Immutable after construction.
struct SystemSpec {
    std::string name;
    int phase_dim = 1;
    SystemKind kind = SystemKind::discrete_map;
    double step_size = 0;  // ode_flow only, > 0
    ScalarField field = ScalarField::real_field;
    /// discrete: writes the image of x; ode: writes the vector field at x.
    std::function<void(std::span<const double>, std::span<double>)> map;
    /// optional analytic Jacobian of the one-step map / vector field,
    /// row-major phase_dim x phase_dim.
    std::function<void(std::span<const double>, std::span<double>)> jacobian;
    nlohmann::json params;
};

namespace detail {

inline void check_finite(std::span<const double> x, std::size_t point_index) {
    for (double v : x)
        if (!std::isfinite(v) || std::abs(v) > kBlowUpLimit)
            throw blow_up_error(point_index, "trajectory blow-up at point " +
                                                 std::to_string(point_index));
}

inline void rk4_step(const SystemSpec& sys, std::span<double> x, double h,
                     std::vector<double>& scratch) {
    const std::size_t d = x.size();
    scratch.resize(5 * d);
    const std::span<double> k1(scratch.data(), d), k2(scratch.data() + d, d),
        k3(scratch.data() + 2 * d, d), k4(scratch.data() + 3 * d, d),
        tmp(scratch.data() + 4 * d, d);
    sys.map(x, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    sys.map(tmp, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    sys.map(tmp, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
    sys.map(tmp, k4);
    for (std::size_t i = 0; i < d; ++i)
        x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Number of exact substeps covering time span t, or error.
inline std::size_t substep_count(const SystemSpec& sys, double t) {
    if (sys.kind == SystemKind::discrete_map) {
        const double r = std::round(t);
        require(std::abs(t - r) <= 1e-9 * std::max(1.0, std::abs(t)) && r >= 0,
                "discrete system needs a nonnegative integer time");
        return std::size_t(r);
    }
    require(sys.step_size > 0, "ode system needs positive step_size");
    const double r = std::round(t / sys.step_size);
    require(std::abs(r * sys.step_size - t) <= 1e-9 * std::max(1.0, std::abs(t)) && r >= 0,
            "time " + std::to_string(t) + " is not a multiple of step_size");
    return std::size_t(r);
}

}  // namespace detail

/// Advances a single point by time t in place.
inline void advance_point(const SystemSpec& sys, std::span<double> x, double t,
                          std::size_t point_index = 0) {
    const std::size_t steps = detail::substep_count(sys, t);
    if (sys.kind == SystemKind::discrete_map) {
        std::vector<double> buf(x.size());
        for (std::size_t s = 0; s < steps; ++s) {
            sys.map(x, buf);
            std::copy(buf.begin(), buf.end(), x.begin());
            detail::check_finite(x, point_index);
        }
    } else {
        std::vector<double> scratch;
        for (std::size_t s = 0; s < steps; ++s) {
            detail::rk4_step(sys, x, sys.step_size, scratch);
            detail::check_finite(x, point_index);
        }
    }
}

/// S(T) applied to every point, order preserving: point i maps to point i.
inline FinitePointSet step(const SystemSpec& sys, const FinitePointSet& x, double t) {
    require(x.dim == sys.phase_dim, "phase dimension mismatch");
    FinitePointSet out = x;
    std::vector<std::size_t> blown(x.size(), 0);
    par::parallel_for(x.size(), [&](std::size_t i) {
        try {
            advance_point(sys, out.point(i), t, i);
        } catch (const blow_up_error&) {
            blown[i] = 1;
        }
    });
    for (std::size_t i = 0; i < x.size(); ++i)
        if (blown[i])
            throw blow_up_error(i, "trajectory blow-up at point " + std::to_string(i));
    return out;
}

/// S(t)x at each requested time; exact at t = 0.
inline std::vector<std::vector<double>> flow_sample(const SystemSpec& sys,
                                                    std::span<const double> x,
                                                    const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        require(times[i] >= 0, "times must be nonnegative");
        if (i) require(times[i] > times[i - 1], "times must be increasing");
    }
    std::vector<std::vector<double>> out;
    std::vector<double> cur(x.begin(), x.end());
    double at = 0;
    for (double t : times) {
        advance_point(sys, cur, t - at);
        at = t;
        out.push_back(cur);
    }
    return out;
}

/// Orbit samples S(kT)x for burn_in <= k < burn_in + keep, over all x in b,
/// deduplicated by exact coordinate equality. Point-major insertion order.
inline FinitePointSet omega_limit_sample(const SystemSpec& sys, const FinitePointSet& b,
                                         std::size_t burn_in, std::size_t keep, double t) {
    require(burn_in >= 1 && keep >= 1, "burn_in and keep must be >= 1");
    require(!b.empty(), "empty point set");
    const std::size_t n = b.size();
    const std::size_t d = std::size_t(b.dim);
    std::vector<std::vector<double>> per_point(n);
    std::vector<std::size_t> blown(n, 0);
    par::parallel_for(n, [&](std::size_t i) {
        try {
            std::vector<double> x(b.point(i).begin(), b.point(i).end());
            advance_point(sys, x, t * double(burn_in), i);
            auto& rows = per_point[i];
            rows.reserve(keep * d);
            rows.insert(rows.end(), x.begin(), x.end());
            for (std::size_t k = 1; k < keep; ++k) {
                advance_point(sys, x, t, i);
                rows.insert(rows.end(), x.begin(), x.end());
            }
        } catch (const blow_up_error&) {
            blown[i] = 1;
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        if (blown[i])
            throw blow_up_error(i, "trajectory blow-up at point " + std::to_string(i));

    FinitePointSet out = b.like_empty();
    std::unordered_set<std::string> seen;
    std::string key(d * sizeof(double), '\0');
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rows = per_point[i];
        for (std::size_t r = 0; r * d < rows.size(); ++r) {
            std::memcpy(key.data(), rows.data() + r * d, d * sizeof(double));
            if (seen.insert(key).second)
                out.push_back(std::span<const double>(rows.data() + r * d, d));
        }
    }
    return out;
}

/// Empirical absorbing ball: smallest tested radius containing all probe
/// orbits from some entry step onward, with at least a quarter of the
/// horizon left as containment witness.
struct AbsorbingSetEstimate {
    std::vector<double> center;
    double radius = 0;
    double entry_time = 0;
    bool positively_invariant_checked = false;
    std::size_t witness_probes = 0;
};

inline AbsorbingSetEstimate find_absorbing_ball(const SystemSpec& sys,
                                                const FinitePointSet& probes,
                                                std::size_t horizon, double t) {
    require(!probes.empty(), "empty probe set");
    require(horizon >= 4, "horizon too short");
    const std::size_t n = probes.size();
    const std::size_t d = std::size_t(probes.dim);

    // Pass 1: orbits; tail centroid over k >= horizon/2.
    std::vector<std::vector<double>> orbits(n);
    std::vector<std::size_t> blown(n, 0);
    par::parallel_for(n, [&](std::size_t i) {
        try {
            std::vector<double> x(probes.point(i).begin(), probes.point(i).end());
            auto& o = orbits[i];
            o.reserve((horizon + 1) * d);
            o.insert(o.end(), x.begin(), x.end());
            for (std::size_t k = 0; k < horizon; ++k) {
                advance_point(sys, x, t, i);
                o.insert(o.end(), x.begin(), x.end());
            }
        } catch (const blow_up_error&) {
            blown[i] = 1;
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        if (blown[i])
            throw blow_up_error(i, "trajectory blow-up at point " + std::to_string(i));

    std::vector<double> center(d, 0.0);
    std::size_t tail_count = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = horizon / 2; k <= horizon; ++k) {
            for (std::size_t c = 0; c < d; ++c) center[c] += orbits[i][k * d + c];
            ++tail_count;
        }
    for (auto& c : center) c /= double(tail_count);

    // dist_k = max over probes of distance to center at step k.
    std::vector<double> dist_k(horizon + 1, 0.0);
    for (std::size_t k = 0; k <= horizon; ++k) {
        double m = 0;
        for (std::size_t i = 0; i < n; ++i)
            m = std::max(m, distance({orbits[i].data() + k * d, d}, center,
                                     probes.metric, probes.weights));
        dist_k[k] = m;
    }
    std::vector<double> suffix_max(horizon + 2, 0.0);
    for (std::size_t k = horizon + 1; k-- > 0;)
        suffix_max[k] = std::max(dist_k[k], suffix_max[k + 1]);

    const std::size_t k_cut = (3 * horizon) / 4;
    const double r_max = suffix_max[0];
    std::size_t first_argmax = 0;
    for (std::size_t k = 0; k <= horizon; ++k)
        if (dist_k[k] >= r_max * (1.0 - 1e-9)) { first_argmax = k; break; }
    if (first_argmax >= k_cut && r_max > 0)
        throw error("no absorbing ball found");

    // Radius grid: geometric from the orbit extent downward.
    const double needed = suffix_max[k_cut];
    double radius = r_max > 0 ? r_max : 1.0;
    for (int j = 0; j < 48; ++j) {
        const double cand = (r_max > 0 ? r_max : 1.0) * std::pow(0.9, j);
        if (cand >= needed) radius = cand; else break;
    }
    std::size_t entry = 0;
    while (entry <= horizon && suffix_max[entry] > radius) ++entry;

    AbsorbingSetEstimate est;
    est.center = center;
    est.radius = radius;
    est.entry_time = double(entry) * t;
    est.witness_probes = n;

    // Positive invariance probe: axis points on the sphere plus a seeded
    // sample, iterated over the horizon.
    FinitePointSet bd = probes.like_empty();
    std::vector<double> p(d);
    for (std::size_t c = 0; c < d; ++c) {
        p = center; p[c] += radius; bd.push_back(p);
        p = center; p[c] -= radius; bd.push_back(p);
    }
    Rng rng(0x5eedu + d);
    for (int s = 0; s < 32; ++s) {
        double norm = 0;
        for (std::size_t c = 0; c < d; ++c) { p[c] = rng.normal(); norm += p[c] * p[c]; }
        norm = std::sqrt(norm);
        if (norm == 0) continue;
        for (std::size_t c = 0; c < d; ++c) p[c] = center[c] + radius * p[c] / norm;
        bd.push_back(p);
    }
    bool invariant = true;
    try {
        FinitePointSet cur = bd;
        const std::size_t check_steps = std::min<std::size_t>(horizon, 512);
        for (std::size_t k = 0; k < check_steps && invariant; ++k) {
            cur = step(sys, cur, t);
            for (std::size_t i = 0; i < cur.size() && invariant; ++i)
                if (distance(cur, i, center) > radius * (1.0 + 1e-12)) invariant = false;
        }
    } catch (const blow_up_error&) {
        invariant = false;
    }
    est.positively_invariant_checked = invariant;
    return est;
}

}  // namespace attrforge
