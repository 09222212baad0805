#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/rng.hpp"
#include "attrforge/semigroup.hpp"

#include <json.hpp>

namespace attrforge {

/// Region the shipped pipelines sample probes from. For most systems an
/// axis box; Henon uses its classical trapping quadrilateral, which maps
/// into itself, so samples never escape.
struct ProbeRegion {
    enum class Kind { box, polygon } kind = Kind::box;
    std::vector<double> lo, hi;               // box
    std::vector<std::vector<double>> vertices;  // convex polygon, 2-d
};

struct DocumentedTruth {
    std::string claim;
    std::string provenance;  // "analytic" or "empirical"
};

struct CatalogEntry {
    std::string name;
    std::string summary;
    SystemKind kind = SystemKind::discrete_map;
    nlohmann::json default_params;
    std::vector<DocumentedTruth> documented_truths;
    ProbeRegion probe_region;
};

namespace detail {

inline double get_param(const nlohmann::json& p, const nlohmann::json& defaults,
                        const std::string& key) {
    if (p.contains(key)) {
        require(p[key].is_number(), "parameter '" + key + "' must be a number");
        return p[key].get<double>();
    }
    return defaults.at(key).get<double>();
}

inline std::vector<double> get_vec(const nlohmann::json& p, const nlohmann::json& defaults,
                                   const std::string& key) {
    const nlohmann::json& src = p.contains(key) ? p[key] : defaults.at(key);
    require(src.is_array() && !src.empty(), "parameter '" + key + "' must be a nonempty array");
    std::vector<double> v;
    for (const auto& x : src) {
        require(x.is_number(), "parameter '" + key + "' must be numeric");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace detail

inline const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = [] {
        std::vector<CatalogEntry> v;
        {
            CatalogEntry e;
            e.name = "affine_contraction";
            e.summary = "x -> eta*x + c on R";
            e.kind = SystemKind::discrete_map;
            e.default_params = {{"eta", 0.5}, {"c", 1.0}};
            e.documented_truths = {
                {"fixed point at c/(1-eta); eta=0.5,c=1 gives 2", "analytic"},
                {"orbits contract at rate ln(1/eta) per step", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box, {-10.0}, {10.0}, {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "diag_linear";
            e.summary = "x_i -> d_i * x_i";
            e.kind = SystemKind::discrete_map;
            e.default_params = {{"diag", {0.9, 0.3}}};
            e.documented_truths = {
                {"Jacobian is constant and equals diag(d)", "analytic"},
                {"attractor is the origin when all |d_i| < 1", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box, {-1.0, -1.0}, {1.0, 1.0}, {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "henon";
            e.summary = "(x,y) -> (1 - a x^2 + y, b x)";
            e.kind = SystemKind::discrete_map;
            e.default_params = {{"a", 1.4}, {"b", 0.3}};
            e.documented_truths = {
                {"(0,0) maps to (1,0) at standard parameters", "analytic"},
                {"trapping quadrilateral maps into itself; samples stay bounded", "empirical"},
                {"attractor box-counting dimension 1.26 +/- 0.1", "empirical"},
            };
            e.probe_region.kind = ProbeRegion::Kind::polygon;
            e.probe_region.vertices = {{-1.33, 0.42}, {1.32, 0.133}, {1.245, -0.14}, {-1.06, -0.5}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "logistic";
            e.summary = "x -> r x (1 - x) on [0,1]";
            e.kind = SystemKind::discrete_map;
            e.default_params = {{"r", 3.8}};
            e.documented_truths = {
                {"[0,1] is forward invariant for r <= 4", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box, {0.05}, {0.95}, {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "rotation";
            e.summary = "planar rotation by theta";
            e.kind = SystemKind::discrete_map;
            e.default_params = {{"theta", 1.0}};
            e.documented_truths = {
                {"isometry: no contraction, circles are invariant", "analytic"},
                {"orbit of a circle point is dense for theta irrational w.r.t. 2*pi", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box, {-1.0, -1.0}, {1.0, 1.0}, {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "lorenz63_timeT";
            e.summary = "Lorenz-63 time-T map, fixed-step RK4";
            e.kind = SystemKind::ode_flow;
            e.default_params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0},
                                {"step_size", 0.005}};
            e.documented_truths = {
                {"orbits enter a bounded region around (0,0,rho-1)", "empirical"},
                {"orbit box-counting dimension estimate 1.9 +/- 0.2 at cell sizes 4..0.5", "empirical"},
            };
            e.probe_region = {ProbeRegion::Kind::box, {-15.0, -15.0, 10.0}, {15.0, 15.0, 40.0}, {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "linear_flow";
            e.summary = "dx_i/dt = rate_i * x_i, fixed-step RK4";
            e.kind = SystemKind::ode_flow;
            e.default_params = {{"rates", {-1.0}}, {"step_size", 0.0078125}};
            e.documented_truths = {
                {"flow is x_i(t) = exp(rate_i t) x_i(0)", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box, {-1.0}, {1.0}, {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "chafee_infante_galerkin";
            e.summary = "sine-Galerkin truncation of u_t = u_xx + lambda u - u^3";
            e.kind = SystemKind::ode_flow;
            e.default_params = {{"lambda", 2.0}, {"modes", 8.0}, {"step_size", 0.01}};
            e.documented_truths = {
                {"orbits are bounded; for lambda=2 they settle near +/- the principal equilibrium", "empirical"},
                {"for lambda < 1 the origin attracts with linear rate lambda - 1", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box,
                              std::vector<double>(8, -1.0), std::vector<double>(8, 1.0), {}};
            v.push_back(e);
        }
        {
            CatalogEntry e;
            e.name = "smoothing_demo";
            e.summary = "x -> eta*x + kappa*tanh on a low-rank block";
            e.kind = SystemKind::discrete_map;
            e.default_params = {{"eta", 0.5}, {"kappa", 0.4}, {"dim", 4.0}, {"rank", 2.0}};
            e.documented_truths = {
                {"splits as contraction plus a map into the rank-r coordinate block", "analytic"},
                {"orbits are bounded by kappa*sqrt(rank)/(1-eta) plus transients", "analytic"},
            };
            e.probe_region = {ProbeRegion::Kind::box,
                              std::vector<double>(4, -2.0), std::vector<double>(4, 2.0), {}};
            v.push_back(e);
        }
        return v;
    }();
    return entries;
}

inline const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : catalog())
        if (e.name == name) return e;
    throw error("unknown system: " + name);
}

inline nlohmann::json list_systems() {
    nlohmann::json out;
    out["schema"] = "systems/1";
    out["systems"] = nlohmann::json::array();
    for (const auto& e : catalog()) {
        nlohmann::json s;
        s["name"] = e.name;
        s["summary"] = e.summary;
        s["kind"] = e.kind == SystemKind::discrete_map ? "discrete-map" : "ode-flow";
        s["params"] = e.default_params;
        s["documented_truths"] = nlohmann::json::array();
        for (const auto& t : e.documented_truths)
            s["documented_truths"].push_back({{"claim", t.claim}, {"provenance", t.provenance}});
        out["systems"].push_back(s);
    }
    return out;
}

inline SystemSpec make_system(const std::string& name, const nlohmann::json& params = {}) {
    const auto& entry = catalog_entry(name);
    for (auto it = params.begin(); it != params.end(); ++it)
        require(entry.default_params.contains(it.key()),
                "unknown parameter '" + it.key() + "' for system " + name);
    SystemSpec sys;
    sys.name = name;
    sys.kind = entry.kind;
    sys.params = entry.default_params;
    for (auto it = params.begin(); it != params.end(); ++it) sys.params[it.key()] = it.value();

    using detail::get_param;
    using detail::get_vec;
    const auto& dp = entry.default_params;

    if (name == "affine_contraction") {
        const double eta = get_param(params, dp, "eta");
        const double c = get_param(params, dp, "c");
        sys.phase_dim = 1;
        sys.map = [eta, c](std::span<const double> x, std::span<double> out) {
            out[0] = eta * x[0] + c;
        };
        sys.jacobian = [eta](std::span<const double>, std::span<double> j) { j[0] = eta; };
    } else if (name == "diag_linear") {
        const auto d = get_vec(params, dp, "diag");
        sys.phase_dim = int(d.size());
        sys.map = [d](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i] * x[i];
        };
        sys.jacobian = [d](std::span<const double>, std::span<double> j) {
            const std::size_t n = d.size();
            std::fill(j.begin(), j.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) j[i * n + i] = d[i];
        };
    } else if (name == "henon") {
        const double a = get_param(params, dp, "a");
        const double b = get_param(params, dp, "b");
        sys.phase_dim = 2;
        sys.map = [a, b](std::span<const double> x, std::span<double> out) {
            out[0] = 1.0 - a * x[0] * x[0] + x[1];
            out[1] = b * x[0];
        };
        sys.jacobian = [a, b](std::span<const double> x, std::span<double> j) {
            j[0] = -2.0 * a * x[0]; j[1] = 1.0;
            j[2] = b;               j[3] = 0.0;
        };
    } else if (name == "logistic") {
        const double r = get_param(params, dp, "r");
        require(r > 0, "logistic r must be positive");
        sys.phase_dim = 1;
        sys.map = [r](std::span<const double> x, std::span<double> out) {
            out[0] = r * x[0] * (1.0 - x[0]);
        };
        sys.jacobian = [r](std::span<const double> x, std::span<double> j) {
            j[0] = r * (1.0 - 2.0 * x[0]);
        };
    } else if (name == "rotation") {
        const double th = get_param(params, dp, "theta");
        const double c = std::cos(th), s = std::sin(th);
        sys.phase_dim = 2;
        sys.map = [c, s](std::span<const double> x, std::span<double> out) {
            out[0] = c * x[0] - s * x[1];
            out[1] = s * x[0] + c * x[1];
        };
        sys.jacobian = [c, s](std::span<const double>, std::span<double> j) {
            j[0] = c; j[1] = -s; j[2] = s; j[3] = c;
        };
    } else if (name == "lorenz63_timeT") {
        const double si = get_param(params, dp, "sigma");
        const double rh = get_param(params, dp, "rho");
        const double be = get_param(params, dp, "beta");
        sys.step_size = get_param(params, dp, "step_size");
        require(sys.step_size > 0, "step_size must be positive");
        sys.phase_dim = 3;
        sys.map = [si, rh, be](std::span<const double> x, std::span<double> out) {
            out[0] = si * (x[1] - x[0]);
            out[1] = x[0] * (rh - x[2]) - x[1];
            out[2] = x[0] * x[1] - be * x[2];
        };
    } else if (name == "linear_flow") {
        const auto rates = get_vec(params, dp, "rates");
        sys.step_size = get_param(params, dp, "step_size");
        require(sys.step_size > 0, "step_size must be positive");
        sys.phase_dim = int(rates.size());
        sys.map = [rates](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < rates.size(); ++i) out[i] = rates[i] * x[i];
        };
    } else if (name == "chafee_infante_galerkin") {
        const double lam = get_param(params, dp, "lambda");
        const int modes = int(get_param(params, dp, "modes"));
        require(modes >= 1 && modes <= 16, "modes must be in [1, 16]");
        sys.step_size = get_param(params, dp, "step_size");
        require(sys.step_size > 0, "step_size must be positive");
        sys.phase_dim = modes;
        // u_t = u_xx + lambda u - u^3 on (0, pi), Dirichlet, sine basis.
        // Cubic term by the direct triple sum with the sine product-to-sum rule.
        sys.map = [lam, modes](std::span<const double> u, std::span<double> out) {
            for (int m = 1; m <= modes; ++m)
                out[m - 1] = (lam - double(m) * double(m)) * u[m - 1];
            for (int j = 1; j <= modes; ++j)
                for (int k = 1; k <= modes; ++k)
                    for (int l = 1; l <= modes; ++l) {
                        const double c = 0.25 * u[j - 1] * u[k - 1] * u[l - 1];
                        const int ps[3] = {j - k + l, -j + k + l, j + k - l};
                        for (int p : ps) {
                            if (p >= 1 && p <= modes) out[p - 1] -= c;
                            else if (-p >= 1 && -p <= modes) out[-p - 1] += c;
                        }
                        const int q = j + k + l;
                        if (q <= modes) out[q - 1] += c;
                    }
        };
    } else if (name == "smoothing_demo") {
        const double eta = get_param(params, dp, "eta");
        const double kappa = get_param(params, dp, "kappa");
        const int dim = int(get_param(params, dp, "dim"));
        const int rank = int(get_param(params, dp, "rank"));
        require(dim >= 1 && rank >= 1 && rank <= dim, "need 1 <= rank <= dim");
        sys.phase_dim = dim;
        sys.map = [eta, kappa, rank](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = eta * x[i];
            for (int i = 0; i < rank; ++i) out[i] += kappa * std::tanh(x[i]);
        };
        sys.jacobian = [eta, kappa, rank, dim](std::span<const double> x, std::span<double> j) {
            std::fill(j.begin(), j.end(), 0.0);
            for (int i = 0; i < dim; ++i) j[i * dim + i] = eta;
            for (int i = 0; i < rank; ++i) {
                const double t = std::tanh(x[i]);
                j[i * dim + i] += kappa * (1.0 - t * t);
            }
        };
    } else {
        throw error("unknown system: " + name);
    }
    return sys;
}

/// Seeded sample of a catalog probe region (rejection sampling inside the
/// polygon for Henon-style regions).
inline FinitePointSet sample_probe_region(const CatalogEntry& entry, std::size_t count,
                                          std::uint64_t seed) {
    Rng rng(seed);
    if (entry.probe_region.kind == ProbeRegion::Kind::box) {
        const auto& lo = entry.probe_region.lo;
        const auto& hi = entry.probe_region.hi;
        FinitePointSet out(int(lo.size()));
        std::vector<double> p(lo.size());
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t c = 0; c < lo.size(); ++c) p[c] = rng.uniform(lo[c], hi[c]);
            out.push_back(p);
        }
        return out;
    }
    const auto& poly = entry.probe_region.vertices;
    double lo0 = poly[0][0], hi0 = poly[0][0], lo1 = poly[0][1], hi1 = poly[0][1];
    for (const auto& q : poly) {
        lo0 = std::min(lo0, q[0]); hi0 = std::max(hi0, q[0]);
        lo1 = std::min(lo1, q[1]); hi1 = std::max(hi1, q[1]);
    }
    const auto inside = [&poly](double x, double y) {
        double sign = 0;
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = poly[i];
            const auto& b = poly[(i + 1) % n];
            const double cr = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]);
            if (sign == 0) sign = cr;
            else if (sign * cr < 0) return false;
        }
        return true;
    };
    FinitePointSet out(2);
    std::vector<double> p(2);
    std::size_t guard = 0;
    while (out.size() < count) {
        p[0] = rng.uniform(lo0, hi0);
        p[1] = rng.uniform(lo1, hi1);
        if (inside(p[0], p[1])) out.push_back(p);
        require(++guard < count * 1000 + 100000, "probe region sampling stalled");
    }
    return out;
}

inline FinitePointSet sample_probe_region(const std::string& system_name, std::size_t count,
                                          std::uint64_t seed) {
    return sample_probe_region(catalog_entry(system_name), count, seed);
}

}  // namespace attrforge
