#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/covering.hpp"
#include "attrforge/metric.hpp"
#include "attrforge/pointset_io.hpp"
#include "attrforge/semigroup.hpp"

namespace attrforge {

struct Provenance {
    int k = 0;
    enum class Origin { net_center, image_of } origin = Origin::net_center;
    std::size_t parent = 0;  // index into Q_{k-1} for image_of
};

/// Finite-stage realization of the net/recursion construction:
/// W_k are net centers of S(kT)B at radius a q^k, Q_{k0} = W_{k0},
/// Q_{k+1} = W_{k+1} united with the stored images of Q_k, and E0 is the
/// union of the Q_k deduplicated on bit-equal points.
struct AttractorApproximation {
    double T = 1;
    int k0 = 1, k_max = 1;
    std::map<int, FinitePointSet> W;
    std::map<int, FinitePointSet> Q;
    FinitePointSet E0;
    std::vector<Provenance> provenance;  // aligned with E0
    CoveringCertificate cert;
};

namespace detail {

class DedupSet {
public:
    explicit DedupSet(int dim) : key_(std::size_t(dim) * sizeof(double), '\0') {}
    bool insert(std::span<const double> p) {
        std::memcpy(key_.data(), p.data(), key_.size());
        return seen_.insert(key_).second;
    }

private:
    std::string key_;
    std::unordered_set<std::string> seen_;
};

}  // namespace detail

inline AttractorApproximation build_E0(const SystemSpec& sys, const FinitePointSet& b_set,
                                       const CoveringCertificate& cert, int k_max) {
    cert.validate();
    require(k_max >= cert.k0, "k_max must be at least the certificate's k0");
    AttractorApproximation out;
    out.T = cert.T;
    out.k0 = cert.k0;
    out.k_max = k_max;
    out.cert = cert;
    out.E0 = b_set.like_empty();

    detail::DedupSet seen(b_set.dim);
    FinitePointSet image = b_set;
    for (int k = 1; k <= k_max; ++k) {
        image = step(sys, image, out.T);
        if (k < out.k0) continue;
        const double eps = cert.a * std::pow(cert.q, k);
        const auto net = greedy_net(image, eps);
        const double allowed = cert.b * std::pow(cert.h, k);
        require(double(net.count) <= allowed,
                "certificate mismatch at k=" + std::to_string(k) + ": count " +
                    std::to_string(net.count) + " > allowed " + std::to_string(allowed));
        FinitePointSet w = b_set.like_empty();
        for (std::size_t c : net.centers) w.push_back(image.point(c));
        out.W.emplace(k, w);

        FinitePointSet q = b_set.like_empty();
        std::vector<Provenance> prov_q;
        for (std::size_t i = 0; i < w.size(); ++i) {
            q.push_back(w.point(i));
            prov_q.push_back({k, Provenance::Origin::net_center, i});
        }
        if (k > out.k0) {
            const auto& q_prev = out.Q.at(k - 1);
            const FinitePointSet q_img = step(sys, q_prev, out.T);
            detail::DedupSet local(b_set.dim);
            for (std::size_t i = 0; i < q.size(); ++i) local.insert(q.point(i));
            for (std::size_t i = 0; i < q_img.size(); ++i) {
                if (local.insert(q_img.point(i))) {
                    q.push_back(q_img.point(i));
                    prov_q.push_back({k, Provenance::Origin::image_of, i});
                }
            }
        }
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (seen.insert(q.point(i))) {
                out.E0.push_back(q.point(i));
                out.provenance.push_back(prov_q[i]);
            }
        }
        out.Q.emplace(k, std::move(q));
    }
    return out;
}

/// Union over l < N of the lT/N flow images of E0 (the T/N refinement).
/// N = 1 returns the input point set unchanged.
inline AttractorApproximation refine_to_TN(const SystemSpec& sys,
                                           const AttractorApproximation& approx,
                                           int n_sub) {
    require(n_sub >= 1, "N must be positive");
    if (sys.kind == SystemKind::discrete_map && n_sub > 1)
        throw error("time step not divisible");
    AttractorApproximation out;
    out.T = approx.T / double(n_sub);
    out.k0 = approx.k0;
    out.k_max = approx.k_max;
    out.cert = approx.cert;
    out.W = approx.W;

    detail::DedupSet seen(approx.E0.dim);
    out.E0 = approx.E0.like_empty();
    for (int l = 0; l < n_sub; ++l) {
        const double t = double(l) * approx.T / double(n_sub);
        const FinitePointSet img = l == 0 ? approx.E0 : step(sys, approx.E0, t);
        for (std::size_t i = 0; i < img.size(); ++i) {
            if (seen.insert(img.point(i))) {
                out.E0.push_back(img.point(i));
                Provenance p = approx.provenance[i];
                if (l > 0) { p.origin = Provenance::Origin::image_of; p.parent = i; }
                out.provenance.push_back(p);
            }
        }
    }
    for (const auto& [k, qk] : approx.Q) {
        FinitePointSet rq = qk.like_empty();
        detail::DedupSet local(qk.dim);
        for (int l = 0; l < n_sub; ++l) {
            const double t = double(l) * approx.T / double(n_sub);
            const FinitePointSet img = l == 0 ? qk : step(sys, qk, t);
            for (std::size_t i = 0; i < img.size(); ++i)
                if (local.insert(img.point(i))) rq.push_back(img.point(i));
        }
        out.Q.emplace(k, std::move(rq));
    }
    return out;
}

struct InvarianceReport {
    double defect = 0;
    bool pass = false;
};

/// defect = one-sided Hausdorff distance from S(T)M to M.
inline InvarianceReport verify_positive_invariance(const SystemSpec& sys,
                                                   const FinitePointSet& m, double T,
                                                   double tol) {
    const FinitePointSet image = step(sys, m, T);
    InvarianceReport r;
    r.defect = hausdorff_distance_onesided(image, m);
    r.pass = r.defect <= tol;
    return r;
}

struct AttractionSeries {
    std::vector<std::pair<int, double>> dists;  // (k, dist of S(kT)G to M)
    double xi_hat = 0;                          // +inf when G never leaves M
};

/// Measures dist(S(kT)G, M) for 1 <= k <= k_max and fits the exponential
/// rate on the upper half of the range.
inline AttractionSeries measure_attraction(const SystemSpec& sys, const FinitePointSet& g,
                                           const FinitePointSet& m, double T, int k_max) {
    require(!g.empty() && !m.empty(), "empty input");
    AttractionSeries out;
    FinitePointSet image = g;
    for (int k = 1; k <= k_max; ++k) {
        image = step(sys, image, T);
        out.dists.emplace_back(k, hausdorff_distance_onesided(image, m));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (const auto& [k, d] : out.dists) {
        if (k < (k_max + 1) / 2 || d <= 0) continue;
        const double x = double(k) * T;
        const double y = std::log(d);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n < 2) {
        out.xi_hat = std::numeric_limits<double>::infinity();
        return out;
    }
    const double slope = (double(n) * sxy - sx * sy) / (double(n) * sxx - sx * sx);
    out.xi_hat = -slope;
    return out;
}

/// Union of flow images of E0 at the grid times in [N T, (N+1) T].
inline FinitePointSet build_time_interpolated_E(const SystemSpec& sys,
                                                const FinitePointSet& e0, double T,
                                                int n_shift,
                                                const std::vector<double>& p_grid) {
    require(sys.kind == SystemKind::ode_flow, "time-interpolated set requires an ode flow");
    require(!p_grid.empty(), "empty time grid");
    const double lo = double(n_shift) * T;
    const double hi = double(n_shift + 1) * T;
    for (double p : p_grid)
        require(p >= lo - 1e-12 && p <= hi + 1e-12,
                "grid time outside [NT, (N+1)T]: " + std::to_string(p));
    FinitePointSet out = e0.like_empty();
    detail::DedupSet seen(e0.dim);
    for (double p : p_grid) {
        const FinitePointSet img = p == 0 ? e0 : step(sys, e0, p);
        for (std::size_t i = 0; i < img.size(); ++i)
            if (seen.insert(img.point(i))) out.push_back(img.point(i));
    }
    return out;
}

/// Periodic family M(t) = S(t)E0 on the grid times in [0, T); M(t + T) is
/// M(t) by construction.
inline std::vector<std::pair<double, FinitePointSet>> nonautonomous_family(
    const SystemSpec& sys, const FinitePointSet& e0, double T,
    const std::vector<double>& t_grid) {
    require(!t_grid.empty(), "empty time grid");
    if (sys.kind == SystemKind::discrete_map)
        require(t_grid.size() == 1 && t_grid[0] == 0.0,
                "discrete systems only support t_grid = {0}");
    std::vector<std::pair<double, FinitePointSet>> fam;
    for (double t : t_grid) {
        require(t >= 0 && t < T, "family times must lie in [0, T)");
        fam.emplace_back(t, t == 0 ? e0 : step(sys, e0, t));
    }
    return fam;
}

// ---- directory serialization ----

namespace detail {
inline std::string k_tag(int k) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", k);
    return buf;
}
}  // namespace detail

inline void save_approximation(const std::string& dir, const AttractorApproximation& a) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json meta;
    meta["schema"] = "build/1";
    meta["T"] = a.T;
    meta["k0"] = a.k0;
    meta["k_max"] = a.k_max;
    meta["certificate"] = a.cert.to_json();
    meta["e0_count"] = a.E0.size();
    nlohmann::json gens = nlohmann::json::array();
    for (const auto& [k, w] : a.W)
        gens.push_back({{"k", k}, {"w_count", w.size()}, {"q_count", a.Q.at(k).size()}});
    meta["generations"] = gens;
    std::ofstream mf(dir + "/meta.json", std::ios::binary);
    require(mf.good(), "cannot write meta.json");
    mf << meta.dump(2) << "\n";

    write_csv(dir + "/E0.csv", a.E0);
    for (const auto& [k, w] : a.W) write_csv(dir + "/W_" + detail::k_tag(k) + ".csv", w);
    for (const auto& [k, q] : a.Q) write_csv(dir + "/Q_" + detail::k_tag(k) + ".csv", q);

    std::string prov = "index,k,origin,parent\r\n";
    for (std::size_t i = 0; i < a.provenance.size(); ++i) {
        const auto& p = a.provenance[i];
        prov += std::to_string(i) + "," + std::to_string(p.k) + "," +
                (p.origin == Provenance::Origin::net_center ? "net-center" : "image-of") + "," +
                std::to_string(p.parent) + "\r\n";
    }
    std::ofstream pf(dir + "/provenance.csv", std::ios::binary);
    require(pf.good(), "cannot write provenance.csv");
    pf.write(prov.data(), std::streamsize(prov.size()));
}

}  // namespace attrforge
