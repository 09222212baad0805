#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "attrforge/capacity.hpp"
#include "attrforge/common.hpp"
#include "attrforge/covering.hpp"
#include "attrforge/metric.hpp"
#include "attrforge/rng.hpp"
#include "attrforge/semigroup.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <json.hpp>

namespace attrforge {

// ---- pair data ----

/// Aligned rows (xs[i], ys[i]) form the evaluation pairs. Estimates are
/// envelope fits: certificates hold pairwise on exactly this data.
struct PairSet {
    FinitePointSet xs, ys;

    std::size_t size() const { return xs.size(); }
};

/// Seeded sample of point pairs from b plus the axis-aligned extreme pairs
/// of its bounding box (worst cases of diagonal benchmarks lie on axes).
inline PairSet make_default_pairs(const FinitePointSet& b, std::size_t n_pairs,
                                  std::uint64_t seed, bool axis_extremes = true) {
    require(b.size() >= 2, "need at least two points to form pairs");
    PairSet out{b.like_empty(), b.like_empty()};
    Rng rng(seed);
    std::size_t made = 0, guard = 0;
    while (made < n_pairs) {
        require(++guard < 100 * n_pairs + 1000, "pair sampling stalled");
        const std::size_t i = rng.index(b.size());
        const std::size_t j = rng.index(b.size());
        if (i == j || b.point_equals(i, b.point(j))) continue;
        out.xs.push_back(b.point(i));
        out.ys.push_back(b.point(j));
        ++made;
    }
    if (axis_extremes) {
        const int d = b.dim;
        std::vector<double> lo(b.point(0).begin(), b.point(0).end());
        std::vector<double> hi = lo;
        for (std::size_t i = 1; i < b.size(); ++i)
            for (int c = 0; c < d; ++c) {
                lo[c] = std::min(lo[c], b.point(i)[c]);
                hi[c] = std::max(hi[c], b.point(i)[c]);
            }
        for (int c = 0; c < d; ++c) {
            if (hi[c] <= lo[c]) continue;
            std::vector<double> p0(d), p1(d);
            for (int e = 0; e < d; ++e) p0[e] = p1[e] = 0.5 * (lo[e] + hi[e]);
            p0[c] = lo[c];
            p1[c] = hi[c];
            out.xs.push_back(p0);
            out.ys.push_back(p1);
        }
    }
    return out;
}

struct WitnessPair {
    std::vector<double> x, y;
    double value = 0;

    nlohmann::json to_json() const {
        return {{"x", x}, {"y", y}, {"value", value}};
    }
};

// ---- projections ----

/// Linear projection P used by the squeezing / Ladyzhenskaya estimators.
/// Either a coordinate selection (orthogonal under the euclidean metric)
/// or an explicit square matrix.
struct ProjectionSpec {
    enum class Kind { coordinates, matrix } kind = Kind::coordinates;
    std::vector<std::size_t> dims;  // coordinates
    std::vector<double> mat;        // matrix: d x d row-major
    int space_dim = 0;

    static ProjectionSpec coords(std::vector<std::size_t> dims, int space_dim) {
        ProjectionSpec p;
        p.kind = Kind::coordinates;
        p.dims = std::move(dims);
        p.space_dim = space_dim;
        return p;
    }
    static ProjectionSpec first_coords(std::size_t m, int space_dim) {
        std::vector<std::size_t> d(m);
        for (std::size_t i = 0; i < m; ++i) d[i] = i;
        return coords(std::move(d), space_dim);
    }
    static ProjectionSpec matrix(std::vector<double> m, int space_dim) {
        require(int(m.size()) == space_dim * space_dim, "projection matrix must be square");
        ProjectionSpec p;
        p.kind = Kind::matrix;
        p.mat = std::move(m);
        p.space_dim = space_dim;
        return p;
    }

    std::size_t rank_dim() const {
        return kind == Kind::coordinates ? dims.size() : std::size_t(space_dim);
    }

    /// P x, embedded in the full space.
    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> out(x.size(), 0.0);
        if (kind == Kind::coordinates) {
            for (std::size_t d : dims) out[d] = x[d];
        } else {
            for (int r = 0; r < space_dim; ++r) {
                double acc = 0;
                for (int c = 0; c < space_dim; ++c) acc += mat[r * space_dim + c] * x[c];
                out[std::size_t(r)] = acc;
            }
        }
        return out;
    }

    /// (I - P) x.
    std::vector<double> apply_complement(std::span<const double> x) const {
        auto px = apply(x);
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - px[i];
        return out;
    }

    std::string describe() const {
        return kind == Kind::coordinates
                   ? "coordinate-projection(" + std::to_string(dims.size()) + ")"
                   : "matrix-projection(" + std::to_string(space_dim) + ")";
    }
};

// ---- certificates ----

struct QuasiStabilityCert {
    double eta = 0, kappa = 0, T = 1;
    std::string seminorm_desc;
    std::size_t n_pairs = 0;
    double margin = 0;
    WitnessPair worst;

    nlohmann::json to_json() const {
        return {{"schema", "cert/1"},
                {"kind", "quasi-stability"},
                {"eta", eta},
                {"kappa", kappa},
                {"T", T},
                {"seminorm", seminorm_desc},
                {"n_pairs", n_pairs},
                {"margin", margin},
                {"witness", worst.to_json()}};
    }
};

struct SqueezingCert {
    std::size_t n = 0;
    double eta = 0, mu = 1, kappa = 0, T = 1;
    std::string proj_desc;
    bool generalized = false;
    std::size_t n_pairs = 0;
    double margin = 0;
    WitnessPair worst;

    nlohmann::json to_json() const {
        return {{"schema", "cert/1"},
                {"kind", generalized ? "generalized-squeezing" : "squeezing"},
                {"n", n},
                {"eta", eta},
                {"mu", mu},
                {"kappa", kappa},
                {"T", T},
                {"projection", proj_desc},
                {"n_pairs", n_pairs},
                {"margin", margin},
                {"witness", worst.to_json()}};
    }
};

struct LadyzhenskayaCert {
    std::size_t n = 0;
    double eta = 0, kappa = 0, T = 1;
    std::string proj_desc;
    bool hilbert = false;  // P orthogonal under the euclidean metric
    std::size_t n_pairs = 0;
    double margin = 0;
    WitnessPair worst;

    nlohmann::json to_json() const {
        return {{"schema", "cert/1"},
                {"kind", "ladyzhenskaya"},
                {"n", n},
                {"eta", eta},
                {"kappa", kappa},
                {"T", T},
                {"projection", proj_desc},
                {"hilbert", hilbert},
                {"n_pairs", n_pairs},
                {"margin", margin},
                {"witness", worst.to_json()}};
    }
};

struct SmoothingCert {
    enum class Variant { into_compact_z, from_compact_y } variant = Variant::into_compact_z;
    double eta = 0, kappa = 0, T = 1;
    std::vector<std::size_t> z_dims;  // Z realized as a coordinate subspace
    std::size_t n_pairs = 0;

    nlohmann::json to_json() const {
        return {{"schema", "cert/1"},
                {"kind", "smoothing"},
                {"variant", variant == Variant::into_compact_z ? "into-compact-Z" : "from-compact-Y"},
                {"eta", eta},
                {"kappa", kappa},
                {"T", T},
                {"z_dims", z_dims},
                {"n_pairs", n_pairs}};
    }
};

struct C1Cert {
    double lambda = 0;
    std::size_t n = 0;  // sup of the split ranks over samples
    double M = 0;       // sup Jacobian spectral norm
    enum class Source { analytic, finite_difference } source = Source::finite_difference;
    double T = 1;
    std::size_t n_samples = 0;
    std::size_t worst_sample = 0;

    nlohmann::json to_json() const {
        return {{"schema", "cert/1"},
                {"kind", "c1"},
                {"lambda", lambda},
                {"n", n},
                {"M", M},
                {"jacobian_source", source == Source::analytic ? "analytic" : "finite-difference"},
                {"T", T},
                {"n_samples", n_samples},
                {"witness", {{"sample", worst_sample}}}};
    }
};

struct HolderCert {
    double zeta = 0, nu = 1;
    double t1 = 0, t2 = 0;
    double r_squared = 0;
    std::size_t n_samples = 0;

    nlohmann::json to_json() const {
        return {{"schema", "cert/1"},
                {"kind", "holder"},
                {"zeta", zeta},
                {"nu", nu},
                {"interval", {t1, t2}},
                {"r_squared", r_squared},
                {"n_samples", n_samples}};
    }
};

// ---- estimators ----

namespace detail {

struct EvaluatedPairs {
    std::vector<double> d_xy, d_img;
    FinitePointSet sx, sy;
};

inline EvaluatedPairs evaluate_pairs(const SystemSpec& sys, const PairSet& pairs, double T) {
    require(pairs.size() > 0, "empty pair set");
    EvaluatedPairs ev;
    ev.sx = step(sys, pairs.xs, T);
    ev.sy = step(sys, pairs.ys, T);
    ev.d_xy.resize(pairs.size());
    ev.d_img.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ev.d_xy[i] = distance(pairs.xs, i, pairs.ys.point(i));
        ev.d_img[i] = distance(ev.sx, i, ev.sy.point(i));
        require(ev.d_xy[i] > 0, "pairs must consist of distinct points");
    }
    return ev;
}

inline WitnessPair witness(const PairSet& pairs, std::size_t i, double value) {
    WitnessPair w;
    w.x.assign(pairs.xs.point(i).begin(), pairs.xs.point(i).end());
    w.y.assign(pairs.ys.point(i).begin(), pairs.ys.point(i).end());
    w.value = value;
    return w;
}

}  // namespace detail

/// Envelope fit of d(S(T)x, S(T)y) <= eta d(x,y) + rho(x,y):
/// kappa is the max ratio rho/d and eta the max positive part of
/// (d_image - rho)/d. Fails when eta reaches 1.
inline QuasiStabilityCert estimate_quasi_stability(const SystemSpec& sys, const PairSet& pairs,
                                                   double T, const PseudometricSpec& rho) {
    const auto ev = detail::evaluate_pairs(sys, pairs, T);
    const FinitePointSet zx = rho.project(pairs.xs);
    const FinitePointSet zy = rho.project(pairs.ys);
    QuasiStabilityCert cert;
    cert.T = T;
    cert.seminorm_desc = rho.describe();
    cert.n_pairs = pairs.size();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double nz = distance(zx, i, zy.point(i));
        cert.kappa = std::max(cert.kappa, nz / ev.d_xy[i]);
        const double eta_i = (ev.d_img[i] - nz) / ev.d_xy[i];
        if (eta_i > cert.eta) {
            cert.eta = eta_i;
            worst = i;
        }
    }
    cert.eta = std::max(cert.eta, 0.0);
    if (cert.eta >= 1.0)
        throw error("not quasi-stable on supplied data: eta = " + std::to_string(cert.eta) +
                    " at pair " + std::to_string(worst));
    cert.worst = detail::witness(pairs, worst, cert.eta);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double nz = distance(zx, i, zy.point(i));
        margin = std::min(margin, cert.eta * ev.d_xy[i] + nz - ev.d_img[i]);
    }
    cert.margin = margin;
    return cert;
}

/// Alternative-form squeezing: pairs that fail the mu-observation branch
/// must contract; eta accumulates over that branch only.
inline SqueezingCert certify_squeezing(const SystemSpec& sys, const PairSet& pairs, double T,
                                       const ProjectionSpec& proj, double mu) {
    require(mu > 0, "mu must be positive");
    const auto ev = detail::evaluate_pairs(sys, pairs, T);
    SqueezingCert cert;
    cert.n = proj.rank_dim();
    cert.mu = mu;
    cert.T = T;
    cert.proj_desc = proj.describe();
    cert.generalized = false;
    cert.n_pairs = pairs.size();
    std::size_t worst = 0;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto pdx = proj.apply(ev.sx.point(i));
        const auto pdy = proj.apply(ev.sy.point(i));
        const double p_dist = distance(pdx, pdy, pairs.xs.metric, pairs.xs.weights);
        cert.kappa = std::max(cert.kappa, p_dist / ev.d_xy[i]);
        if (ev.d_img[i] <= mu * p_dist) continue;  // observation branch
        const double eta_i = ev.d_img[i] / ev.d_xy[i];
        if (eta_i > cert.eta) {
            cert.eta = eta_i;
            worst = i;
        }
        margin = std::min(margin, 1.0 - eta_i);
    }
    if (cert.eta >= 1.0)
        throw error("not squeezing on supplied data: contraction branch eta = " +
                    std::to_string(cert.eta) + " at pair " + std::to_string(worst));
    cert.margin = std::isfinite(margin) ? margin : 1.0;
    cert.worst = detail::witness(pairs, worst, cert.eta);
    return cert;
}

/// Generalized squeezing: envelope fit of
/// d(S(T)x, S(T)y) <= eta d(x,y) + mu ||P S(T)x - P S(T)y||.
inline SqueezingCert certify_generalized_squeezing(const SystemSpec& sys, const PairSet& pairs,
                                                   double T, const ProjectionSpec& proj,
                                                   double mu) {
    require(mu > 0, "mu must be positive");
    const auto ev = detail::evaluate_pairs(sys, pairs, T);
    SqueezingCert cert;
    cert.n = proj.rank_dim();
    cert.mu = mu;
    cert.T = T;
    cert.proj_desc = proj.describe();
    cert.generalized = true;
    cert.n_pairs = pairs.size();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto pdx = proj.apply(ev.sx.point(i));
        const auto pdy = proj.apply(ev.sy.point(i));
        const double p_dist = distance(pdx, pdy, pairs.xs.metric, pairs.xs.weights);
        cert.kappa = std::max(cert.kappa, p_dist / ev.d_xy[i]);
        const double eta_i = (ev.d_img[i] - mu * p_dist) / ev.d_xy[i];
        if (eta_i > cert.eta) {
            cert.eta = eta_i;
            worst = i;
        }
    }
    cert.eta = std::max(cert.eta, 0.0);
    if (cert.eta >= 1.0)
        throw error("not squeezing on supplied data: eta = " + std::to_string(cert.eta) +
                    " at pair " + std::to_string(worst));
    cert.worst = detail::witness(pairs, worst, cert.eta);
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto pdx = proj.apply(ev.sx.point(i));
        const auto pdy = proj.apply(ev.sy.point(i));
        const double p_dist = distance(pdx, pdy, pairs.xs.metric, pairs.xs.weights);
        margin = std::min(margin, cert.eta * ev.d_xy[i] + mu * p_dist - ev.d_img[i]);
    }
    cert.margin = margin;
    return cert;
}

/// eta is the max ratio ||(I-P) delta S|| / ||delta||, kappa the max of
/// ||P delta S|| / ||delta||.
inline LadyzhenskayaCert certify_ladyzhenskaya(const SystemSpec& sys, const PairSet& pairs,
                                               double T, const ProjectionSpec& proj) {
    const auto ev = detail::evaluate_pairs(sys, pairs, T);
    LadyzhenskayaCert cert;
    cert.n = proj.rank_dim();
    cert.T = T;
    cert.proj_desc = proj.describe();
    cert.hilbert = proj.kind == ProjectionSpec::Kind::coordinates &&
                   pairs.xs.metric == Metric::euclidean;
    cert.n_pairs = pairs.size();
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto cdx = proj.apply_complement(ev.sx.point(i));
        const auto cdy = proj.apply_complement(ev.sy.point(i));
        const auto pdx = proj.apply(ev.sx.point(i));
        const auto pdy = proj.apply(ev.sy.point(i));
        const double c_dist = distance(cdx, cdy, pairs.xs.metric, pairs.xs.weights);
        const double p_dist = distance(pdx, pdy, pairs.xs.metric, pairs.xs.weights);
        cert.kappa = std::max(cert.kappa, p_dist / ev.d_xy[i]);
        const double eta_i = c_dist / ev.d_xy[i];
        if (eta_i > cert.eta) {
            cert.eta = eta_i;
            worst = i;
        }
    }
    if (cert.eta >= 1.0)
        throw error("not of Ladyzhenskaya type on supplied data: eta = " +
                    std::to_string(cert.eta) + " at pair " + std::to_string(worst));
    cert.worst = detail::witness(pairs, worst, cert.eta);
    cert.margin = 1.0 - cert.eta;
    return cert;
}

// ---- derivations along the implication chain ----

/// Generalized squeezing (n, eta, mu, kappa) is quasi-stability with
/// parameters (eta, kappa mu) for K = mu P S(T).
inline QuasiStabilityCert derive_quasi_from_squeezing(const SqueezingCert& c) {
    QuasiStabilityCert q;
    q.eta = c.eta;
    q.kappa = c.kappa * c.mu;
    q.T = c.T;
    q.seminorm_desc = "norm of " + std::to_string(c.mu) + " * P after step, " + c.proj_desc;
    q.n_pairs = c.n_pairs;
    q.margin = c.margin;
    q.worst = c.worst;
    return q;
}

/// Ladyzhenskaya (n, eta, kappa) gives generalized squeezing (n, eta, 1, kappa).
inline SqueezingCert derive_squeezing_from_ladyzhenskaya(const LadyzhenskayaCert& c) {
    SqueezingCert s;
    s.n = c.n;
    s.eta = c.eta;
    s.mu = 1.0;
    s.kappa = c.kappa;
    s.T = c.T;
    s.proj_desc = c.proj_desc;
    s.generalized = true;
    s.n_pairs = c.n_pairs;
    s.margin = c.margin;
    s.worst = c.worst;
    return s;
}

/// Ladyzhenskaya splits S(T) = (I-P)S(T) + PS(T): a contraction plus a map
/// into the range of P.
inline SmoothingCert derive_smoothing_from_ladyzhenskaya(const LadyzhenskayaCert& c,
                                                         std::vector<std::size_t> z_dims) {
    SmoothingCert s;
    s.variant = SmoothingCert::Variant::into_compact_z;
    s.eta = c.eta;
    s.kappa = c.kappa;
    s.T = c.T;
    s.z_dims = std::move(z_dims);
    s.n_pairs = c.n_pairs;
    return s;
}

/// Hilbert-space converse: an eps-net of the Z unit ball spans a subspace
/// X_n; projecting orthogonally onto it gives a Ladyzhenskaya certificate
/// with parameters (n, eta + eps kappa, eta + c kappa), c the embedding
/// constant (1 for a coordinate block).
inline LadyzhenskayaCert derive_ladyzhenskaya_from_smoothing_hilbert(const SmoothingCert& s,
                                                                     double eps,
                                                                     std::uint64_t seed = 1) {
    require(s.variant == SmoothingCert::Variant::into_compact_z,
            "needs the smoothing variant mapping into a compact Z");
    require(eps > 0, "epsilon must be positive");
    if (s.eta + eps * s.kappa >= 1.0) throw error("eps too large: eta + eps kappa >= 1");
    const int zn = int(s.z_dims.size());
    require(zn >= 1, "smoothing certificate carries no Z block");

    NormPair ball{zn, NormKind::l2, NormKind::l2, {}, {}, ScalarField::real_field};
    const auto net = unit_ball_packing(ball, eps, 20000 * std::size_t(zn), seed);

    // Rank of the net's span (Gram-Schmidt with a fixed tolerance); a net of
    // the unit ball at eps < 1 always spans the block, so generically n = zn.
    Eigen::MatrixXd pts(net.count, zn);
    for (std::size_t i = 0; i < net.count; ++i)
        for (int c = 0; c < zn; ++c) pts(long(i), c) = net.points[i * std::size_t(zn) + c];
    const auto rank = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(pts).rank();

    LadyzhenskayaCert out;
    out.n = std::size_t(rank);
    out.eta = s.eta + eps * s.kappa;
    out.kappa = s.eta + 1.0 * s.kappa;
    out.T = s.T;
    out.proj_desc = "orthogonal projection onto span of the Z-ball net (" +
                    std::to_string(rank) + " dims)";
    out.hilbert = true;
    out.n_pairs = s.n_pairs;
    out.margin = 1.0 - out.eta;
    return out;
}

// ---- validation (pairwise re-checks) ----

struct ValidationReport {
    std::size_t n_pairs = 0;
    std::size_t violations = 0;
    double margin = std::numeric_limits<double>::infinity();

    bool pass() const { return violations == 0; }
};

namespace detail {
inline void tally(ValidationReport& r, double slack, double scale) {
    r.margin = std::min(r.margin, slack);
    if (slack < -1e-12 * std::max(1.0, scale)) ++r.violations;
}
}  // namespace detail

inline ValidationReport validate_quasi(const QuasiStabilityCert& cert, const SystemSpec& sys,
                                       const PairSet& pairs, const PseudometricSpec& rho) {
    const auto ev = detail::evaluate_pairs(sys, pairs, cert.T);
    const FinitePointSet zx = rho.project(pairs.xs);
    const FinitePointSet zy = rho.project(pairs.ys);
    ValidationReport r;
    r.n_pairs = pairs.size();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double nz = distance(zx, i, zy.point(i));
        detail::tally(r, cert.eta * ev.d_xy[i] + nz - ev.d_img[i], ev.d_img[i]);
        detail::tally(r, cert.kappa * ev.d_xy[i] - nz, nz);
    }
    return r;
}

inline ValidationReport validate_generalized_squeezing(const SqueezingCert& cert,
                                                       const SystemSpec& sys,
                                                       const PairSet& pairs,
                                                       const ProjectionSpec& proj) {
    const auto ev = detail::evaluate_pairs(sys, pairs, cert.T);
    ValidationReport r;
    r.n_pairs = pairs.size();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto pdx = proj.apply(ev.sx.point(i));
        const auto pdy = proj.apply(ev.sy.point(i));
        const double p_dist = distance(pdx, pdy, pairs.xs.metric, pairs.xs.weights);
        detail::tally(r, cert.eta * ev.d_xy[i] + cert.mu * p_dist - ev.d_img[i], ev.d_img[i]);
        detail::tally(r, cert.kappa * ev.d_xy[i] - p_dist, p_dist);
    }
    return r;
}

inline ValidationReport validate_ladyzhenskaya(const LadyzhenskayaCert& cert,
                                               const SystemSpec& sys, const PairSet& pairs,
                                               const ProjectionSpec& proj) {
    const auto ev = detail::evaluate_pairs(sys, pairs, cert.T);
    ValidationReport r;
    r.n_pairs = pairs.size();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto cdx = proj.apply_complement(ev.sx.point(i));
        const auto cdy = proj.apply_complement(ev.sy.point(i));
        const auto pdx = proj.apply(ev.sx.point(i));
        const auto pdy = proj.apply(ev.sy.point(i));
        const double c_dist = distance(cdx, cdy, pairs.xs.metric, pairs.xs.weights);
        const double p_dist = distance(pdx, pdy, pairs.xs.metric, pairs.xs.weights);
        detail::tally(r, cert.eta * ev.d_xy[i] - c_dist, c_dist);
        detail::tally(r, cert.kappa * ev.d_xy[i] - p_dist, p_dist);
    }
    return r;
}

// ---- C1 certification ----

/// Jacobian of the time-T map at x: chained analytic one-step Jacobians
/// for discrete systems that carry one, otherwise central finite
/// differences with per-coordinate step 1e-6 (1 + |x_i|).
inline Eigen::MatrixXd time_T_jacobian(const SystemSpec& sys, std::span<const double> x,
                                       double T, bool* used_analytic = nullptr) {
    const int d = sys.phase_dim;
    if (sys.kind == SystemKind::discrete_map && sys.jacobian) {
        if (used_analytic) *used_analytic = true;
        const std::size_t steps = detail::substep_count(sys, T);
        Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(d, d);
        std::vector<double> cur(x.begin(), x.end());
        std::vector<double> jac(std::size_t(d) * d);
        std::vector<double> next(std::size_t(d), 0.0);
        for (std::size_t s = 0; s < steps; ++s) {
            sys.jacobian(cur, jac);
            Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                j(jac.data(), d, d);
            acc = j * acc;
            sys.map(cur, next);
            cur = next;
        }
        return acc;
    }
    if (used_analytic) *used_analytic = false;
    Eigen::MatrixXd jac(d, d);
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (int c = 0; c < d; ++c) {
        const double h = 1e-6 * (1.0 + std::abs(x[c]));
        xp[c] = x[c] + h;
        xm[c] = x[c] - h;
        std::vector<double> fp = xp, fm = xm;
        advance_point(sys, fp, T);
        advance_point(sys, fm, T);
        for (int r = 0; r < d; ++r) jac(r, c) = (fp[r] - fm[r]) / (2.0 * h);
        xp[c] = x[c];
        xm[c] = x[c];
    }
    return jac;
}

/// Per sample: singular values sigma_1 >= ... >= sigma_d of the time-T
/// Jacobian. The split rank is the smallest m with sigma_{m+1} < 2 lambda
/// (rank-m truncation as the compact part, remainder norm sigma_{m+1});
/// the certificate requires the remainder below lambda for some rank < d.
inline C1Cert certify_c1(const SystemSpec& sys, const FinitePointSet& b_sample, double T,
                         double lambda) {
    require(lambda > 0 && lambda < 0.25, "lambda must lie in (0, 1/4)");
    require(!b_sample.empty(), "empty sample");
    C1Cert cert;
    cert.lambda = lambda;
    cert.T = T;
    cert.n_samples = b_sample.size();
    bool analytic_all = true;
    for (std::size_t i = 0; i < b_sample.size(); ++i) {
        bool used_analytic = false;
        const Eigen::MatrixXd jac = time_T_jacobian(sys, b_sample.point(i), T, &used_analytic);
        analytic_all = analytic_all && used_analytic;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        const auto& sv = svd.singularValues();
        const int d = int(sv.size());
        if (sv(d - 1) >= lambda)
            throw error("no compact+small split below lambda at sample " + std::to_string(i));
        std::size_t nu = 0;
        while (int(nu) < d && sv(int(nu)) >= 2.0 * lambda) ++nu;
        if (nu > cert.n) {
            cert.n = nu;
            cert.worst_sample = i;
        }
        cert.M = std::max(cert.M, sv(0));
    }
    cert.source = analytic_all ? C1Cert::Source::analytic : C1Cert::Source::finite_difference;
    return cert;
}

// ---- Hoelder-in-time ----

/// Envelope fit of max_x d(S(t1)x, S(t2)x) <= zeta |t1 - t2|^nu over a
/// time grid: nu from the log-log least squares, zeta inflated to cover
/// every sampled pair.
inline HolderCert estimate_holder(const SystemSpec& sys, const FinitePointSet& b_sample,
                                  const std::vector<double>& time_grid) {
    require(sys.kind == SystemKind::ode_flow, "Hoelder fit requires an ode flow");
    require(time_grid.size() >= 2, "need at least 2 grid times");
    require(!b_sample.empty(), "empty sample");
    std::vector<std::vector<std::vector<double>>> traj(b_sample.size());
    for (std::size_t i = 0; i < b_sample.size(); ++i)
        traj[i] = flow_sample(sys, b_sample.point(i), time_grid);

    HolderCert cert;
    cert.t1 = time_grid.front();
    cert.t2 = time_grid.back();
    cert.n_samples = b_sample.size();

    std::vector<std::pair<double, double>> obs;  // (|dt|, max displacement)
    for (std::size_t a = 0; a < time_grid.size(); ++a)
        for (std::size_t b = a + 1; b < time_grid.size(); ++b) {
            double disp = 0;
            for (std::size_t i = 0; i < b_sample.size(); ++i)
                disp = std::max(disp, distance(traj[i][a], traj[i][b], b_sample.metric,
                                               b_sample.weights));
            obs.emplace_back(time_grid[b] - time_grid[a], disp);
        }
    std::vector<std::pair<double, double>> pos;
    for (const auto& o : obs)
        if (o.second > 0) pos.push_back(o);
    if (pos.empty()) {
        cert.zeta = 0;
        cert.nu = 1;  // sentinel: zero displacement everywhere
        cert.r_squared = 1;
        return cert;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [dt, d] : pos) {
        const double x = std::log(dt), y = std::log(d);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double m = double(pos.size());
    const double denom = m * sxx - sx * sx;
    cert.nu = denom != 0 ? (m * sxy - sx * sy) / denom : 1.0;
    if (!(cert.nu > 0)) cert.nu = 1.0;
    double zeta = 0;
    for (const auto& [dt, d] : pos) zeta = std::max(zeta, d / std::pow(dt, cert.nu));
    cert.zeta = zeta;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / m;
    const double ic = (sy - cert.nu * sx) / m;
    for (const auto& [dt, d] : pos) {
        const double y = std::log(d);
        const double yh = cert.nu * std::log(dt) + ic;
        ss_res += (y - yh) * (y - yh);
        ss_tot += (y - ybar) * (y - ybar);
    }
    cert.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return cert;
}

// ---- closed-form dimension bounds ----

inline double log_base(double base_inv, double value) {
    return std::log(value) / std::log(base_inv);
}

/// log_{1/(eta+sigma)} mZ(sigma / (2 kappa)); mZ counts a packing of the
/// Z unit ball at the given radius.
inline double bound_quasi(double eta, double kappa, double sigma,
                          const std::function<double(double)>& m_z) {
    require(eta >= 0 && kappa > 0, "need eta >= 0 and kappa > 0");
    require(sigma > 0, "sigma must be positive");
    if (sigma >= 1.0 - eta) return std::numeric_limits<double>::infinity();
    const double count = m_z(sigma / (2.0 * kappa));
    require(count >= 1, "packing evaluator returned a count below 1");
    return log_base(1.0 / (eta + sigma), count);
}

/// n_real * log_{1/(eta+sigma)} (1 + 2 kappa mu d_BM / sigma).
inline double bound_squeezing(double n, double eta, double mu, double kappa, double sigma,
                              double d_bm, ScalarField field) {
    require(n >= 1 && mu > 0 && kappa > 0 && d_bm >= 1, "invalid squeezing parameters");
    require(eta >= 0 && sigma > 0, "need eta >= 0 and sigma > 0");
    if (sigma >= 1.0 - eta) return std::numeric_limits<double>::infinity();
    const double nn = real_dimension(field, n);
    return nn * log_base(1.0 / (eta + sigma), 1.0 + 2.0 * kappa * mu * d_bm / sigma);
}

/// The volume-comparison variant with the coarser factor 4.
inline double bound_squeezing_coarse(double n, double eta, double mu, double kappa,
                                     double sigma, double d_bm, ScalarField field) {
    require(n >= 1 && mu > 0 && kappa > 0 && d_bm >= 1, "invalid squeezing parameters");
    require(eta >= 0 && sigma > 0, "need eta >= 0 and sigma > 0");
    if (sigma >= 1.0 - eta) return std::numeric_limits<double>::infinity();
    const double nn = real_dimension(field, n);
    return nn * log_base(1.0 / (eta + sigma), 1.0 + 4.0 * kappa * mu * d_bm / sigma);
}

/// n_real * log_{1/sqrt(sigma^2+eta^2)} (1 + 2 kappa / sigma), orthogonal
/// projections in a Hilbert phase space.
inline double bound_ladyzhenskaya_hilbert(double n, double eta, double kappa, double sigma,
                                          ScalarField field) {
    require(n >= 1 && kappa > 0, "invalid parameters");
    require(eta >= 0 && sigma > 0, "need eta >= 0 and sigma > 0");
    if (sigma * sigma >= 1.0 - eta * eta) return std::numeric_limits<double>::infinity();
    const double nn = real_dimension(field, n);
    const double q = std::sqrt(sigma * sigma + eta * eta);
    return nn * log_base(1.0 / q, 1.0 + 2.0 * kappa / sigma);
}

/// n_real * log_{1/(sigma+4 lambda)} (1 + 8 sqrt(n) M / sigma).
inline double bound_c1(double n, double m_norm, double lambda, double sigma,
                       ScalarField field) {
    require(n >= 1 && m_norm > 0, "invalid parameters");
    require(lambda > 0 && lambda < 0.25, "lambda must lie in (0, 1/4)");
    require(sigma > 0, "sigma must be positive");
    if (sigma >= 1.0 - 4.0 * lambda) return std::numeric_limits<double>::infinity();
    const double nn = real_dimension(field, n);
    return nn * log_base(1.0 / (sigma + 4.0 * lambda), 1.0 + 8.0 * std::sqrt(n) * m_norm / sigma);
}

/// 1/nu + log_{1/q} h: converts a covering certificate plus time
/// regularity into a bound for the time-interpolated set.
inline double bound_holder(const CoveringCertificate& cert, double nu) {
    require(nu > 0, "nu must be positive");
    return 1.0 / nu + cert.dim_bound();
}

// ---- sigma tuning ----

enum class BoundId { quasi, squeezing, squeezing_coarse, ladyzhenskaya_hilbert, c1 };

struct BoundParams {
    double n = 1;
    double eta = 0;
    double mu = 1;
    double kappa = 1;
    double d_bm = 1;
    double lambda = 0.1;
    double m_norm = 1;
    ScalarField field = ScalarField::real_field;
    std::function<double(double)> m_z;  // quasi only
};

inline double eval_bound(BoundId id, const BoundParams& p, double sigma) {
    switch (id) {
        case BoundId::quasi: return bound_quasi(p.eta, p.kappa, sigma, p.m_z);
        case BoundId::squeezing:
            return bound_squeezing(p.n, p.eta, p.mu, p.kappa, sigma, p.d_bm, p.field);
        case BoundId::squeezing_coarse:
            return bound_squeezing_coarse(p.n, p.eta, p.mu, p.kappa, sigma, p.d_bm, p.field);
        case BoundId::ladyzhenskaya_hilbert:
            return bound_ladyzhenskaya_hilbert(p.n, p.eta, p.kappa, sigma, p.field);
        case BoundId::c1: return bound_c1(p.n, p.m_norm, p.lambda, sigma, p.field);
    }
    return std::numeric_limits<double>::infinity();
}

inline double sigma_upper_limit(BoundId id, const BoundParams& p) {
    switch (id) {
        case BoundId::quasi:
        case BoundId::squeezing:
        case BoundId::squeezing_coarse: return 1.0 - p.eta;
        case BoundId::ladyzhenskaya_hilbert:
            return p.eta < 1.0 ? std::sqrt(1.0 - p.eta * p.eta) : 0.0;
        case BoundId::c1: return 1.0 - 4.0 * p.lambda;
    }
    return 0.0;
}

struct SigmaChoice {
    double sigma_star = 0;
    double bound_star = 0;
};

/// Log-spaced grid scan over the admissible interval followed by a
/// golden-section refinement around the best grid point. Deterministic.
inline SigmaChoice optimize_sigma(BoundId id, const BoundParams& params,
                                  std::size_t grid_size = 64) {
    require(grid_size >= 8, "grid_size must be at least 8");
    const double hi = sigma_upper_limit(id, params);
    require(hi > 0, "empty admissible sigma interval");
    const double top = hi * (1.0 - 1e-9);

    std::size_t best_i = 0;
    double best_v = std::numeric_limits<double>::infinity();
    std::vector<double> sigmas(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double t = double(i) / double(grid_size - 1);
        sigmas[i] = top * std::pow(1e-4, 1.0 - t);
        const double v = eval_bound(id, params, sigmas[i]);
        if (v < best_v) {
            best_v = v;
            best_i = i;
        }
    }
    double lo = sigmas[best_i > 0 ? best_i - 1 : 0];
    double up = sigmas[std::min(grid_size - 1, best_i + 1)];
    const double phi = 0.6180339887498948482;
    double x1 = up - phi * (up - lo);
    double x2 = lo + phi * (up - lo);
    double f1 = eval_bound(id, params, x1);
    double f2 = eval_bound(id, params, x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 <= f2) {
            up = x2; x2 = x1; f2 = f1;
            x1 = up - phi * (up - lo);
            f1 = eval_bound(id, params, x1);
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + phi * (up - lo);
            f2 = eval_bound(id, params, x2);
        }
    }
    SigmaChoice out;
    out.sigma_star = f1 <= f2 ? x1 : x2;
    out.bound_star = std::min({best_v, f1, f2});
    if (best_v < std::min(f1, f2)) out.sigma_star = sigmas[best_i];
    return out;
}

}  // namespace attrforge
