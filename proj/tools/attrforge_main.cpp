// attrforge command line: deterministic pipeline driver over the library.
// Stages write machine-readable JSON/CSV artifacts into a run directory
// plus a short summary table on stdout; `report` collates them.
//
// Exit codes: 0 success, 2 certificate violation (report still written),
// 3 invalid config/usage, 4 numerical blow-up.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <attrforge/attrforge.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace attrforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 2;
constexpr int kExitConfig = 3;
constexpr int kExitBlowUp = 4;

struct CommonOpts {
    std::string run_dir = "run";
    std::uint64_t seed = 1;
    int threads = 1;
    bool verify_repro = false;
};

struct SystemOpts {
    std::string name;
    std::vector<std::string> params;  // key=value
    double T = 1.0;
};

json parse_params(const std::vector<std::string>& kvs) {
    json out = json::object();
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        require(eq != std::string::npos, "parameter must be key=value: " + kv);
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (!val.empty() && val.front() == '[') {
            out[key] = json::parse(val);
        } else {
            out[key] = parse_double(val);
        }
    }
    return out;
}

SystemSpec resolve_system(const SystemOpts& so) {
    require(!so.name.empty(), "--system is required");
    return make_system(so.name, parse_params(so.params));
}

void apply_seed_env(CommonOpts& c) {
    if (const char* env = std::getenv("ATTRFORGE_SEED")) {
        c.seed = std::strtoull(env, nullptr, 10);
    }
    par::thread_count() = c.threads;
}

void write_text(const fs::path& path, const std::string& body) {
    fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path.string());
    f.write(body.data(), std::streamsize(body.size()));
    require(f.good(), "write failed: " + path.string());
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

json system_block(const SystemOpts& so, const SystemSpec& sys) {
    return {{"name", sys.name}, {"params", sys.params}, {"T", so.T},
            {"phase_dim", sys.phase_dim},
            {"kind", sys.kind == SystemKind::discrete_map ? "discrete-map" : "ode-flow"}};
}

json load_json(const fs::path& path, const std::string& needed_stage) {
    std::ifstream f(path, std::ios::binary);
    if (!f.good())
        throw error("missing artifact " + path.string() + ": run the '" + needed_stage +
                    "' stage first");
    json j;
    f >> j;
    return j;
}

/// Artifacts produced by one stage invocation, held in memory so that
/// --verify-repro can bit-compare two runs before touching the run dir.
struct ArtifactSet {
    std::map<std::string, std::string> files;  // path relative to run dir -> bytes

    void add(const std::string& rel, std::string bytes) { files[rel] = std::move(bytes); }

    void write_all(const fs::path& dir) const {
        for (const auto& [rel, bytes] : files) write_text(dir / rel, bytes);
    }

    bool same_as(const ArtifactSet& other) const {
        if (files.size() != other.files.size()) return false;
        for (const auto& [rel, bytes] : files) {
            const auto it = other.files.find(rel);
            if (it == other.files.end() || it->second != bytes) return false;
        }
        return true;
    }
};

FinitePointSet sample_box(const std::vector<double>& lo, const std::vector<double>& hi,
                          std::size_t count, std::uint64_t seed) {
    require(lo.size() == hi.size() && !lo.empty(), "box bounds mismatch");
    FinitePointSet out(int(lo.size()));
    Rng rng(seed);
    std::vector<double> p(lo.size());
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t c = 0; c < lo.size(); ++c) p[c] = rng.uniform(lo[c], hi[c]);
        out.push_back(p);
    }
    return out;
}

/// B for the cover/build/certify stages: an absorb artifact when present,
/// otherwise the catalog probe region.
FinitePointSet stage_b_set(const SystemSpec& sys, const CommonOpts& c, std::size_t count,
                           bool prefer_absorb) {
    if (prefer_absorb) {
        const fs::path p = fs::path(c.run_dir) / "absorb.json";
        if (fs::exists(p)) {
            const json a = load_json(p, "absorb");
            const auto center = a.at("center").get<std::vector<double>>();
            const double radius = a.at("radius").get<double>();
            Rng rng(c.seed ^ 0xab5017ULL);
            FinitePointSet out(int(center.size()));
            std::vector<double> pt(center.size());
            std::size_t made = 0;
            while (made < count) {
                double s = 0;
                for (std::size_t i = 0; i < pt.size(); ++i) {
                    pt[i] = rng.uniform(-1.0, 1.0);
                    s += pt[i] * pt[i];
                }
                if (s > 1.0) continue;
                for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = center[i] + radius * pt[i];
                out.push_back(pt);
                ++made;
            }
            return out;
        }
    }
    return sample_probe_region(sys.name, count, c.seed ^ 0xb5e7ULL);
}

std::string csv_line(std::initializer_list<std::string> cells) {
    std::string out;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) out += ',';
        out += c;
        first = false;
    }
    out += "\r\n";
    return out;
}

// ---- stages ----

ArtifactSet run_absorb(const CommonOpts& c, const SystemOpts& so, std::size_t probes,
                       std::size_t horizon) {
    const SystemSpec sys = resolve_system(so);
    const FinitePointSet probe_set = sample_probe_region(sys.name, probes, c.seed);
    const auto est = find_absorbing_ball(sys, probe_set, horizon, so.T);
    json j;
    j["schema"] = "absorb/1";
    j["system"] = system_block(so, sys);
    j["center"] = est.center;
    j["radius"] = est.radius;
    j["entry_time"] = est.entry_time;
    j["positively_invariant_checked"] = est.positively_invariant_checked;
    j["witness_probes"] = est.witness_probes;
    j["horizon"] = horizon;
    j["seed"] = c.seed;
    ArtifactSet a;
    a.add("absorb.json", json_text(j));
    std::cout << "absorb: radius " << est.radius << " entry_time " << est.entry_time
              << " invariant " << (est.positively_invariant_checked ? "yes" : "no") << "\n";
    return a;
}

struct CoverOpts {
    int k0 = 1, k_max = 12;
    std::size_t points = 400;
    std::vector<double> q_grid;
    double a_fixed = 0;     // 0: use scaled policy
    double a_scale = 1.5;   // a = scale * max(diam B, 1)
    // explicit check mode
    bool check = false;
    double q = 0.5, h = 1.0, a = 1.0, b = 1.0;
};

ArtifactSet run_cover(const CommonOpts& c, const SystemOpts& so, const CoverOpts& co,
                      bool* violation) {
    const SystemSpec sys = resolve_system(so);
    const FinitePointSet b_set = stage_b_set(sys, c, co.points, true);
    ArtifactSet a;
    json j;
    if (co.check) {
        const auto chk = check_covering_condition(sys, b_set, so.T, co.a, co.q, co.b, co.h,
                                                  co.k0, co.k_max);
        j = chk.cert.to_json();
        j["pass"] = chk.pass;
        if (!chk.pass) {
            j["first_violation"] = {{"k", chk.first_violation->k},
                                    {"count", chk.first_violation->count},
                                    {"allowed", chk.first_violation->allowed}};
            *violation = true;
        }
        std::cout << "cover check: " << (chk.pass ? "pass" : "VIOLATION") << "\n";
    } else {
        std::vector<double> grid = co.q_grid;
        if (grid.empty())
            for (double q = 0.30; q < 0.901; q += 0.05) grid.push_back(q);
        const APolicy pol = co.a_fixed > 0 ? APolicy::fixed(co.a_fixed)
                                           : APolicy::scaled(co.a_scale);
        const auto cert = fit_certificate(sys, b_set, so.T, co.k0, co.k_max, grid, pol);
        j = cert.to_json();
        j["pass"] = true;
        std::cout << "cover fit: q " << cert.q << " h " << cert.h << " dim_bound "
                  << cert.dim_bound() << " xi_T " << cert.xi_T() << "\n";
    }
    j["system"] = system_block(so, sys);
    j["points"] = co.points;
    j["seed"] = c.seed;
    a.add("cover.json", json_text(j));
    std::string plot = "k,eps,log_count,log_allowed\r\n";
    for (const auto& t : j["per_k"]) {
        plot += csv_line({std::to_string(t.at("k").get<int>()),
                          format_double(t.at("eps").get<double>()),
                          format_double(std::log(double(t.at("count").get<std::size_t>()))),
                          format_double(std::log(t.at("allowed").get<double>()))});
    }
    a.add("plot_cover.csv", plot);
    return a;
}

ArtifactSet run_build(const CommonOpts& c, const SystemOpts& so, int k_max,
                      std::size_t points) {
    const SystemSpec sys = resolve_system(so);
    const json cover = load_json(fs::path(c.run_dir) / "cover.json", "cover");
    const auto cert = CoveringCertificate::from_json(cover);
    const FinitePointSet b_set = stage_b_set(sys, c, points, true);
    const int km = k_max > 0 ? k_max : (cert.per_k.empty() ? cert.k0 : cert.per_k.back().k);
    const auto approx = build_E0(sys, b_set, cert, km);

    ArtifactSet a;
    json meta;
    meta["schema"] = "build/1";
    meta["system"] = system_block(so, sys);
    meta["T"] = approx.T;
    meta["k0"] = approx.k0;
    meta["k_max"] = approx.k_max;
    meta["certificate"] = cert.to_json();
    meta["e0_count"] = approx.E0.size();
    json gens = json::array();
    for (const auto& [k, w] : approx.W)
        gens.push_back({{"k", k}, {"w_count", w.size()}, {"q_count", approx.Q.at(k).size()}});
    meta["generations"] = gens;

    const auto att = measure_attraction(sys, b_set, approx.E0, approx.T, approx.k_max);
    meta["xi_hat"] = std::isfinite(att.xi_hat) ? json(att.xi_hat) : json("inf");
    a.add("build/meta.json", json_text(meta));
    a.add("build/E0.csv", to_csv(approx.E0));
    for (const auto& [k, w] : approx.W) {
        char tag[8];
        std::snprintf(tag, sizeof(tag), "%03d", k);
        a.add(std::string("build/W_") + tag + ".csv", to_csv(w));
        a.add(std::string("build/Q_") + tag + ".csv", to_csv(approx.Q.at(k)));
    }
    std::string prov = "index,k,origin,parent\r\n";
    for (std::size_t i = 0; i < approx.provenance.size(); ++i) {
        const auto& p = approx.provenance[i];
        prov += csv_line({std::to_string(i), std::to_string(p.k),
                          p.origin == Provenance::Origin::net_center ? "net-center" : "image-of",
                          std::to_string(p.parent)});
    }
    a.add("build/provenance.csv", prov);
    std::string attcsv = "k,t,dist\r\n";
    for (const auto& [k, d] : att.dists)
        attcsv += csv_line({std::to_string(k), format_double(double(k) * approx.T),
                            format_double(d)});
    a.add("build/attraction.csv", attcsv);
    std::cout << "build: |E0| " << approx.E0.size() << " xi_hat " << att.xi_hat << "\n";
    return a;
}

struct CertifyOpts {
    std::vector<std::string> kinds{"quasi", "ladyzhenskaya", "squeezing"};
    std::size_t points = 200;
    std::size_t pairs = 2000;
    std::size_t proj_dims = 1;
    double mu = 1.0;
    double lambda = 0.1;
    std::vector<double> holder_grid;
};

ArtifactSet run_certify(const CommonOpts& c, const SystemOpts& so, const CertifyOpts& co) {
    const SystemSpec sys = resolve_system(so);
    const FinitePointSet b_set = stage_b_set(sys, c, co.points, true);
    const PairSet pairs = make_default_pairs(b_set, co.pairs, c.seed ^ 0x9a175ULL);
    const auto proj = ProjectionSpec::first_coords(co.proj_dims, sys.phase_dim);

    ArtifactSet a;
    for (const auto& kind : co.kinds) {
        json j;
        if (kind == "quasi") {
            const auto rho = PseudometricSpec::seminorm_of_difference(
                [&sys, proj, T = so.T](std::span<const double> x) {
                    std::vector<double> img(x.begin(), x.end());
                    advance_point(sys, img, T);
                    const auto px = proj.apply(img);
                    std::vector<double> out;
                    for (std::size_t d : proj.dims) out.push_back(px[d]);
                    return out;
                },
                int(co.proj_dims), Metric::euclidean,
                "projection of the step image onto " + std::to_string(co.proj_dims) +
                    " coordinates");
            j = estimate_quasi_stability(sys, pairs, so.T, rho).to_json();
            j["z_dim"] = co.proj_dims;
        } else if (kind == "squeezing") {
            j = certify_generalized_squeezing(sys, pairs, so.T, proj, co.mu).to_json();
        } else if (kind == "squeezing-alt") {
            j = certify_squeezing(sys, pairs, so.T, proj, co.mu).to_json();
        } else if (kind == "ladyzhenskaya") {
            j = certify_ladyzhenskaya(sys, pairs, so.T, proj).to_json();
        } else if (kind == "c1") {
            j = certify_c1(sys, b_set, so.T, co.lambda).to_json();
        } else if (kind == "holder") {
            require(!co.holder_grid.empty(), "--holder-grid is required for kind holder");
            j = estimate_holder(sys, b_set, co.holder_grid).to_json();
        } else {
            throw error("unknown certificate kind: " + kind);
        }
        j["system"] = system_block(so, sys);
        j["seed"] = c.seed;
        a.add("certs/" + kind + ".json", json_text(j));
        std::cout << "certify " << kind << ": ok\n";
    }
    return a;
}

ArtifactSet run_bounds(const CommonOpts& c, bool optimize, std::size_t grid_size) {
    const fs::path certs_dir = fs::path(c.run_dir) / "certs";
    if (!fs::exists(certs_dir))
        throw error("missing artifact " + certs_dir.string() + ": run the 'certify' stage first");
    json table = json::array();
    std::string csv =
        "kind,n,eta,kappa,mu,lambda,M,sigma,bound,bound_volume_mz,bound_packing_mz\r\n";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(certs_dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const json cert = load_json(path, "certify");
        const std::string kind = cert.at("kind").get<std::string>();
        json row;
        row["kind"] = kind;
        if (kind == "quasi-stability") {
            const double eta = cert.at("eta").get<double>();
            const double kappa = cert.at("kappa").get<double>();
            // Both readings of the unit-ball count: measured packing lower
            // bound and the volume upper bound (reported side by side).
            const double zn = cert.contains("z_dim") ? double(cert.at("z_dim").get<std::size_t>()) : 1.0;
            const auto mz_volume = [zn](double eps) {
                return volume_upper_bound(1.0, eps, zn);
            };
            const auto mz_packing = [zn](double eps) {
                NormPair pr{int(zn), NormKind::l2, NormKind::l2, {}, {},
                            ScalarField::real_field};
                return double(unit_ball_packing(pr, eps, 20000, 7).count);
            };
            BoundParams bp;
            bp.eta = eta;
            bp.kappa = kappa;
            bp.m_z = mz_volume;
            SigmaChoice sc;
            if (optimize) {
                sc = optimize_sigma(BoundId::quasi, bp, grid_size);
            } else {
                sc.sigma_star = 0.5 * (1.0 - eta);
                sc.bound_star = bound_quasi(eta, kappa, sc.sigma_star, mz_volume);
            }
            row["eta"] = eta;
            row["kappa"] = kappa;
            row["sigma"] = sc.sigma_star;
            row["bound"] = sc.bound_star;
            row["bound_volume_mz"] = sc.bound_star;
            row["bound_packing_mz"] = bound_quasi(eta, kappa, sc.sigma_star, mz_packing);
            csv += csv_line({kind, "1", format_double(eta), format_double(kappa), "1", "",
                             "", format_double(sc.sigma_star), format_double(sc.bound_star),
                             format_double(row["bound_volume_mz"].get<double>()),
                             format_double(row["bound_packing_mz"].get<double>())});
        } else if (kind == "squeezing" || kind == "generalized-squeezing") {
            BoundParams bp;
            bp.n = double(cert.at("n").get<std::size_t>());
            bp.eta = cert.at("eta").get<double>();
            bp.mu = cert.at("mu").get<double>();
            bp.kappa = cert.at("kappa").get<double>();
            SigmaChoice sc;
            if (optimize) {
                sc = optimize_sigma(BoundId::squeezing, bp, grid_size);
            } else {
                sc.sigma_star = 0.5 * (1.0 - bp.eta);
                sc.bound_star = bound_squeezing(bp.n, bp.eta, bp.mu, bp.kappa, sc.sigma_star,
                                                1.0, bp.field);
            }
            row["n"] = bp.n;
            row["eta"] = bp.eta;
            row["mu"] = bp.mu;
            row["kappa"] = bp.kappa;
            row["sigma"] = sc.sigma_star;
            row["bound"] = sc.bound_star;
            csv += csv_line({kind, format_double(bp.n), format_double(bp.eta),
                             format_double(bp.kappa), format_double(bp.mu), "", "",
                             format_double(sc.sigma_star), format_double(sc.bound_star), "", ""});
        } else if (kind == "ladyzhenskaya") {
            BoundParams bp;
            bp.n = double(cert.at("n").get<std::size_t>());
            bp.eta = cert.at("eta").get<double>();
            bp.kappa = cert.at("kappa").get<double>();
            SigmaChoice sc;
            if (optimize) {
                sc = optimize_sigma(BoundId::ladyzhenskaya_hilbert, bp, grid_size);
            } else {
                sc.sigma_star = 0.5 * std::sqrt(1.0 - bp.eta * bp.eta);
                sc.bound_star =
                    bound_ladyzhenskaya_hilbert(bp.n, bp.eta, bp.kappa, sc.sigma_star, bp.field);
            }
            row["n"] = bp.n;
            row["eta"] = bp.eta;
            row["kappa"] = bp.kappa;
            row["sigma"] = sc.sigma_star;
            row["bound"] = sc.bound_star;
            csv += csv_line({kind, format_double(bp.n), format_double(bp.eta),
                             format_double(bp.kappa), "", "", "",
                             format_double(sc.sigma_star), format_double(sc.bound_star), "", ""});
        } else if (kind == "c1") {
            BoundParams bp;
            bp.n = double(cert.at("n").get<std::size_t>());
            if (bp.n < 1) bp.n = 1;
            bp.lambda = cert.at("lambda").get<double>();
            bp.m_norm = cert.at("M").get<double>();
            SigmaChoice sc;
            if (optimize) {
                sc = optimize_sigma(BoundId::c1, bp, grid_size);
            } else {
                sc.sigma_star = 0.5 * (1.0 - 4.0 * bp.lambda);
                sc.bound_star = bound_c1(bp.n, bp.m_norm, bp.lambda, sc.sigma_star, bp.field);
            }
            row["n"] = bp.n;
            row["lambda"] = bp.lambda;
            row["M"] = bp.m_norm;
            row["sigma"] = sc.sigma_star;
            row["bound"] = sc.bound_star;
            csv += csv_line({kind, format_double(bp.n), "", "", "",
                             format_double(bp.lambda), format_double(bp.m_norm),
                             format_double(sc.sigma_star), format_double(sc.bound_star), "", ""});
        } else if (kind == "holder") {
            row["nu"] = cert.at("nu").get<double>();
            row["zeta"] = cert.at("zeta").get<double>();
            const fs::path cover_path = fs::path(c.run_dir) / "cover.json";
            if (fs::exists(cover_path)) {
                const auto cover = CoveringCertificate::from_json(load_json(cover_path, "cover"));
                row["bound"] = bound_holder(cover, row["nu"].get<double>());
                csv += csv_line({kind, "", "", "", "", "", "", "",
                                 format_double(row["bound"].get<double>()), "", ""});
            }
        } else {
            continue;  // smoothing records carry no closed-form bound
        }
        table.push_back(row);
    }
    json j;
    j["schema"] = "bounds/1";
    j["optimized"] = optimize;
    j["rows"] = table;
    ArtifactSet a;
    a.add("bounds.json", json_text(j));
    a.add("bounds.csv", csv);
    std::cout << "bounds: " << table.size() << " rows\n";
    for (const auto& row : table)
        if (row.contains("bound"))
            std::cout << "  " << row.at("kind").get<std::string>() << " -> "
                      << row.at("bound").get<double>() << "\n";
    return a;
}

struct DimOpts {
    std::string source = "omega";  // omega | e0 | file
    std::string file;
    std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
    std::size_t probes = 10;
    std::size_t burn_in = 1000;
    std::size_t keep = 3000;
};

ArtifactSet run_dim(const CommonOpts& c, const SystemOpts& so, const DimOpts& dopt) {
    FinitePointSet pts(1);
    if (dopt.source == "omega") {
        const SystemSpec sys = resolve_system(so);
        const FinitePointSet probes = stage_b_set(sys, c, dopt.probes, true);
        pts = omega_limit_sample(sys, probes, dopt.burn_in, dopt.keep, so.T);
    } else if (dopt.source == "e0") {
        pts = read_csv((fs::path(c.run_dir) / "build" / "E0.csv").string());
    } else if (dopt.source == "file") {
        require(!dopt.file.empty(), "--file is required for source=file");
        pts = read_csv(dopt.file);
    } else {
        throw error("unknown dim source: " + dopt.source);
    }
    const auto fit = box_counting_dimension(pts, dopt.eps_grid);
    json j;
    j["schema"] = "dim/1";
    j["source"] = dopt.source;
    j["n_points"] = pts.size();
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["eps_range"] = {fit.eps_range.first, fit.eps_range.second};
    j["counts"] = json::array();
    std::string plot = "eps,log_inv_eps,count,log_count\r\n";
    for (const auto& [e, n] : fit.counts) {
        j["counts"].push_back({{"eps", e}, {"count", n}});
        plot += csv_line({format_double(e), format_double(std::log(1.0 / e)),
                          std::to_string(n), format_double(std::log(double(n)))});
    }
    j["seed"] = c.seed;
    ArtifactSet a;
    a.add("dim.json", json_text(j));
    a.add("plot_dim.csv", plot);
    std::cout << "dim: slope " << fit.slope << " r2 " << fit.r_squared << " on "
              << pts.size() << " points\n";
    return a;
}

struct CapacityOpts {
    int n_max = 3;
    std::vector<double> eps_grid{1.0, 0.5, 0.25};
    std::size_t budget = 100000;
};

ArtifactSet run_capacity(const CommonOpts& c, const CapacityOpts& co) {
    std::string csv = "n,norm_x,norm_y,eps,packing_lb,volume_ub,capacity_bits\r\n";
    const NormKind kinds[] = {NormKind::l1, NormKind::l2, NormKind::linf};
    for (int n = 1; n <= co.n_max; ++n)
        for (NormKind kx : kinds)
            for (NormKind ky : kinds)
                for (double eps : co.eps_grid) {
                    NormPair pair{n, kx, ky, {}, {}, ScalarField::real_field};
                    const auto pk = unit_ball_packing(pair, eps, co.budget, c.seed);
                    const double r = norm_equivalence_radius(pair);
                    const double vu = volume_upper_bound(r, eps, double(n));
                    csv += csv_line({std::to_string(n), to_string(kx), to_string(ky),
                                     format_double(eps), std::to_string(pk.count),
                                     format_double(vu),
                                     format_double(epsilon_capacity(pk.count))});
                }
    ArtifactSet a;
    a.add("capacity.csv", csv);
    std::cout << "capacity: table written\n";
    return a;
}

ArtifactSet run_report(const CommonOpts& c) {
    const fs::path dir(c.run_dir);
    json rep;
    rep["schema"] = "report/1";
    json checks = json::array();

    std::optional<CoveringCertificate> cert;
    if (fs::exists(dir / "cover.json")) {
        const json cover = load_json(dir / "cover.json", "cover");
        cert = CoveringCertificate::from_json(cover);
        rep["cover"] = {{"q", cert->q}, {"h", cert->h}, {"dim_bound", cert->dim_bound()},
                        {"xi_T", cert->xi_T()}, {"empirical", cert->empirical}};
    }
    if (fs::exists(dir / "dim.json")) {
        const json dim = load_json(dir / "dim.json", "dim");
        rep["dim"] = {{"slope", dim.at("slope")}, {"r_squared", dim.at("r_squared")}};
        if (cert) {
            const double slope = dim.at("slope").get<double>();
            const bool ok = slope <= cert->dim_bound() + 0.3;
            checks.push_back({{"check", "box-dim slope <= certificate dim_bound + 0.3"},
                              {"slope", slope},
                              {"dim_bound", cert->dim_bound()},
                              {"pass", ok}});
        }
    }
    if (fs::exists(dir / "bounds.json")) {
        const json bounds = load_json(dir / "bounds.json", "bounds");
        rep["bounds"] = bounds.at("rows");
        if (rep.contains("dim")) {
            const double slope = rep["dim"]["slope"].get<double>();
            for (const auto& row : bounds.at("rows")) {
                if (!row.contains("bound")) continue;
                checks.push_back({{"check", "box-dim slope <= " +
                                                row.at("kind").get<std::string>() + " bound + 0.3"},
                                  {"slope", slope},
                                  {"bound", row.at("bound")},
                                  {"pass", slope <= row.at("bound").get<double>() + 0.3}});
            }
        }
    }
    if (fs::exists(dir / "build" / "meta.json")) {
        const json meta = load_json(dir / "build" / "meta.json", "build");
        rep["build"] = {{"e0_count", meta.at("e0_count")}, {"k0", meta.at("k0")},
                        {"k_max", meta.at("k_max")}, {"xi_hat", meta.at("xi_hat")}};
    }
    if (fs::exists(dir / "absorb.json")) {
        const json absorb = load_json(dir / "absorb.json", "absorb");
        rep["absorb"] = {{"radius", absorb.at("radius")},
                         {"entry_time", absorb.at("entry_time")},
                         {"positively_invariant_checked",
                          absorb.at("positively_invariant_checked")}};
    }
    rep["checks"] = checks;
    bool all = true;
    for (const auto& chk : checks) all = all && chk.at("pass").get<bool>();
    rep["all_checks_pass"] = all;

    ArtifactSet a;
    a.add("report.json", json_text(rep));
    if (fs::exists(dir / "build" / "attraction.csv")) {
        std::ifstream f(dir / "build" / "attraction.csv", std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        std::string plot = "t,log_dist\r\n";
        std::string line;
        std::istringstream body(ss.str());
        std::getline(body, line);  // header
        while (std::getline(body, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (line.empty()) continue;
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const double t = parse_double(line.substr(c1 + 1, c2 - c1 - 1));
            const double d = parse_double(line.substr(c2 + 1));
            if (d > 0)
                plot += csv_line({format_double(t), format_double(std::log(d))});
        }
        a.add("plot_attraction.csv", plot);
    }
    std::cout << "report: " << checks.size() << " cross-checks, "
              << (all ? "all pass" : "SOME FAIL") << "\n";
    for (const auto& chk : checks)
        std::cout << "  [" << (chk.at("pass").get<bool>() ? "pass" : "FAIL") << "] "
                  << chk.at("check").get<std::string>() << "\n";
    return a;
}

/// Runs a stage, honoring --verify-repro by executing it twice and
/// bit-comparing artifacts before committing them to the run directory.
int commit_stage(const CommonOpts& c, const std::function<ArtifactSet()>& stage) {
    const ArtifactSet first = stage();
    if (c.verify_repro) {
        const ArtifactSet second = stage();
        if (!first.same_as(second)) {
            std::cerr << "verify-repro: artifacts differ between runs\n";
            return 1;
        }
        std::cout << "verify-repro: bit-identical rerun\n";
    }
    first.write_all(c.run_dir);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attrforge: finite attractor approximations, covering certificates, "
                 "and dimension bounds for sampled dynamical systems"};
    app.set_config("--config", "", "TOML config file; flags override config values");
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--run", common.run_dir, "run directory for artifacts");
    app.add_option("--seed", common.seed, "PRNG seed (ATTRFORGE_SEED overrides)");
    app.add_option("--threads", common.threads, "worker threads (outputs are unaffected)");
    app.add_flag("--verify-repro", common.verify_repro,
                 "run the stage twice and require bit-identical artifacts");

    SystemOpts so;
    const auto add_system_opts = [&](CLI::App* cmd) {
        cmd->add_option("--system", so.name, "catalog system name");
        cmd->add_option("--param", so.params, "system parameter key=value (repeatable)");
        cmd->add_option("--T", so.T, "time step of S(T)");
    };

    auto* cmd_systems = app.add_subcommand("systems", "list the system catalog");

    auto* cmd_absorb = app.add_subcommand("absorb", "locate an empirical absorbing ball");
    add_system_opts(cmd_absorb);
    std::size_t absorb_probes = 64, absorb_horizon = 2000;
    cmd_absorb->add_option("--probes", absorb_probes, "probe count");
    cmd_absorb->add_option("--horizon", absorb_horizon, "iteration horizon");

    CoverOpts co;
    auto* cmd_cover = app.add_subcommand("cover", "fit or check a covering certificate");
    add_system_opts(cmd_cover);
    cmd_cover->add_option("--k0", co.k0);
    cmd_cover->add_option("--kmax", co.k_max);
    cmd_cover->add_option("--points", co.points, "size of the sampled B");
    cmd_cover->add_option("--q-grid", co.q_grid, "explicit q grid");
    cmd_cover->add_option("--a-fixed", co.a_fixed, "fixed radius scale a");
    cmd_cover->add_option("--a-scale", co.a_scale, "a = scale * max(diam B, 1)");
    cmd_cover->add_flag("--check", co.check, "check explicit constants instead of fitting");
    cmd_cover->add_option("--q", co.q);
    cmd_cover->add_option("--h", co.h);
    cmd_cover->add_option("--a", co.a);
    cmd_cover->add_option("--b", co.b);

    auto* cmd_build = app.add_subcommand("build", "run the net/recursion construction");
    add_system_opts(cmd_build);
    int build_kmax = 0;
    std::size_t build_points = 400;
    cmd_build->add_option("--kmax", build_kmax, "defaults to the certificate's last k");
    cmd_build->add_option("--points", build_points, "size of the sampled B");

    CertifyOpts cfo;
    auto* cmd_certify = app.add_subcommand("certify", "estimate stability certificates");
    add_system_opts(cmd_certify);
    cmd_certify->add_option("--kinds", cfo.kinds,
                            "quasi squeezing squeezing-alt ladyzhenskaya c1 holder");
    cmd_certify->add_option("--points", cfo.points);
    cmd_certify->add_option("--pairs", cfo.pairs);
    cmd_certify->add_option("--proj-dims", cfo.proj_dims, "P projects onto the first m coords");
    cmd_certify->add_option("--mu", cfo.mu);
    cmd_certify->add_option("--lambda", cfo.lambda);
    cmd_certify->add_option("--holder-grid", cfo.holder_grid, "time grid for the Hoelder fit");

    auto* cmd_bounds = app.add_subcommand("bounds", "evaluate closed-form dimension bounds");
    bool opt_sigma = false;
    std::size_t sigma_grid = 64;
    cmd_bounds->add_flag("--optimize-sigma", opt_sigma);
    cmd_bounds->add_option("--sigma-grid", sigma_grid);

    DimOpts dopt;
    auto* cmd_dim = app.add_subcommand("dim", "box-counting dimension fit");
    add_system_opts(cmd_dim);
    cmd_dim->add_option("--source", dopt.source, "omega | e0 | file");
    cmd_dim->add_option("--file", dopt.file);
    cmd_dim->add_option("--eps-grid", dopt.eps_grid);
    cmd_dim->add_option("--probes", dopt.probes);
    cmd_dim->add_option("--burn-in", dopt.burn_in);
    cmd_dim->add_option("--keep", dopt.keep);

    CapacityOpts capo;
    auto* cmd_capacity = app.add_subcommand("capacity", "unit-ball packing/capacity tables");
    cmd_capacity->add_option("--n-max", capo.n_max);
    cmd_capacity->add_option("--eps-grid", capo.eps_grid);
    cmd_capacity->add_option("--budget", capo.budget);

    auto* cmd_report = app.add_subcommand("report", "collate artifacts and cross-check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        apply_seed_env(common);
        bool violation = false;
        int rc = kExitOk;
        if (cmd_systems->parsed()) {
            std::cout << list_systems().dump(2) << "\n";
        } else if (cmd_absorb->parsed()) {
            rc = commit_stage(common, [&] { return run_absorb(common, so, absorb_probes,
                                                              absorb_horizon); });
        } else if (cmd_cover->parsed()) {
            rc = commit_stage(common, [&] { return run_cover(common, so, co, &violation); });
        } else if (cmd_build->parsed()) {
            rc = commit_stage(common, [&] { return run_build(common, so, build_kmax,
                                                             build_points); });
        } else if (cmd_certify->parsed()) {
            rc = commit_stage(common, [&] { return run_certify(common, so, cfo); });
        } else if (cmd_bounds->parsed()) {
            rc = commit_stage(common, [&] { return run_bounds(common, opt_sigma, sigma_grid); });
        } else if (cmd_dim->parsed()) {
            rc = commit_stage(common, [&] { return run_dim(common, so, dopt); });
        } else if (cmd_capacity->parsed()) {
            rc = commit_stage(common, [&] { return run_capacity(common, capo); });
        } else if (cmd_report->parsed()) {
            rc = commit_stage(common, [&] { return run_report(common); });
        }
        if (rc != kExitOk) return rc;
        return violation ? kExitViolation : kExitOk;
    } catch (const blow_up_error& e) {
        std::cerr << "blow-up: " << e.what() << "\n";
        return kExitBlowUp;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
