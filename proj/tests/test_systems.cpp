#include <catch2/catch_amalgamated.hpp>

#include <attrforge/metric.hpp>
#include <attrforge/semigroup.hpp>
#include <attrforge/systems.hpp>

#include "oracles.hpp"

using namespace attrforge;

TEST_CASE("catalog is listed with documented truths") {
    const auto j = list_systems();
    REQUIRE(j.at("schema") == "systems/1");
    std::vector<std::string> names;
    for (const auto& s : j.at("systems")) names.push_back(s.at("name").get<std::string>());
    for (const char* required : {"affine_contraction", "diag_linear", "henon", "logistic",
                                 "lorenz63_timeT", "chafee_infante_galerkin", "smoothing_demo"})
        REQUIRE(std::find(names.begin(), names.end(), required) != names.end());
    for (const auto& s : j.at("systems"))
        REQUIRE(!s.at("documented_truths").empty());
}

TEST_CASE("make_system validates input") {
    REQUIRE_THROWS_WITH(make_system("no_such_system"), "unknown system: no_such_system");
    REQUIRE_THROWS(make_system("henon", {{"zzz", 1.0}}));
    REQUIRE_THROWS(make_system("chafee_infante_galerkin", {{"modes", 40.0}}));
}

TEST_CASE("affine_contraction fixed point") {
    const auto sys = make_system("affine_contraction", {{"eta", 0.5}, {"c", 1.0}});
    FinitePointSet g(1);
    const double two = 2.0;
    g.push_back(std::span<const double>(&two, 1));
    REQUIRE(step(sys, g, 1.0).point(0)[0] == 2.0);
}

TEST_CASE("diag_linear Jacobian is the constant matrix") {
    const auto sys = make_system("diag_linear", {{"diag", {0.9, 0.3}}});
    std::vector<double> j(4);
    const double x[2] = {0.7, -0.4};
    sys.jacobian(std::span<const double>(x, 2), j);
    REQUIRE(j == std::vector<double>{0.9, 0.0, 0.0, 0.3});
}

TEST_CASE("logistic keeps [0,1] forward invariant") {
    const auto sys = make_system("logistic", {{"r", 3.8}});
    FinitePointSet g = sample_probe_region("logistic", 100, 5);
    FinitePointSet x = g;
    for (int k = 0; k < 500; ++k) {
        x = step(sys, x, 1.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(x.point(i)[0] >= 0.0);
            REQUIRE(x.point(i)[0] <= 1.0);
        }
    }
}

TEST_CASE("smoothing_demo orbits respect the analytic bound") {
    const auto sys = make_system("smoothing_demo",
                                 {{"eta", 0.5}, {"kappa", 0.4}, {"dim", 4.0}, {"rank", 2.0}});
    FinitePointSet g = sample_probe_region("smoothing_demo", 50, 9);
    FinitePointSet x = g;
    for (int k = 0; k < 100; ++k) x = step(sys, x, 1.0);
    // bound kappa sqrt(rank) / (1 - eta) after transients
    const double bound = 0.4 * std::sqrt(2.0) / 0.5;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double norm = 0;
        for (int c = 0; c < 4; ++c) norm += x.point(i)[c] * x.point(i)[c];
        REQUIRE(std::sqrt(norm) <= bound + 1e-6);
    }
}

TEST_CASE("chafee_infante orbits stay bounded and settle near the equilibria") {
    const auto sys = make_system("chafee_infante_galerkin",
                                 {{"lambda", 2.0}, {"modes", 8.0}, {"step_size", 0.01}});
    FinitePointSet g = sample_probe_region("chafee_infante_galerkin", 20, 3);
    FinitePointSet x = g;
    for (int k = 0; k < 40; ++k) {
        x = step(sys, x, 0.5);
        for (std::size_t i = 0; i < x.size(); ++i)
            for (int c = 0; c < 8; ++c) REQUIRE(std::abs(x.point(i)[c]) < 5.0);
    }
    // after t = 20 the orbit is near one of the +/- equilibria (|u_1| ~ 1.18)
    std::size_t settled = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(std::abs(x.point(i)[0]) - 1.1757) < 0.05) ++settled;
    REQUIRE(settled >= x.size() - 2);
}

TEST_CASE("chafee_infante with small lambda contracts to zero at the linear rate") {
    const auto sys = make_system("chafee_infante_galerkin",
                                 {{"lambda", 0.5}, {"modes", 4.0}, {"step_size", 0.01}});
    FinitePointSet g(4);
    std::vector<double> p{0.1, 0.05, -0.08, 0.02};
    g.push_back(p);
    // for small amplitudes u1 decays like exp((lambda - 1) t) = exp(-t/2)
    const auto x1 = step(sys, g, 4.0);
    const double expected = 0.1 * std::exp(-0.5 * 4.0);
    REQUIRE(x1.point(0)[0] == Catch::Approx(expected).epsilon(0.05));
}

TEST_CASE("lorenz63 pipeline dimension estimate matches the cell-count oracle") {
    const auto sys = make_system("lorenz63_timeT");
    FinitePointSet b(3);
    std::vector<double> p{1.0, 1.0, 25.0};
    b.push_back(p);
    p = {-3.0, 2.0, 20.0};
    b.push_back(p);
    const auto omega = omega_limit_sample(sys, b, 300, 15000, 0.1);
    const std::vector<double> eps_grid{8.0, 4.0, 2.0, 1.0};
    const auto fit = box_counting_dimension(omega, eps_grid);
    const double oracle = oracles::grid_cell_slope(omega, eps_grid);
    // documented truth: estimate 1.9 +/- 0.2 at these scales
    REQUIRE(fit.slope == Catch::Approx(1.9).margin(0.2));
    REQUIRE(std::abs(fit.slope - oracle) < 0.25);
    // orbit stays in the documented bounded region
    for (std::size_t i = 0; i < omega.size(); ++i) {
        REQUIRE(std::abs(omega.point(i)[0]) < 25.0);
        REQUIRE(std::abs(omega.point(i)[1]) < 35.0);
        REQUIRE(omega.point(i)[2] > 0.0);
        REQUIRE(omega.point(i)[2] < 55.0);
    }
}

TEST_CASE("henon documented dimension band holds for the pipeline estimate") {
    const auto sys = make_system("henon");
    const auto probes = sample_probe_region("henon", 10, 7);
    const auto omega = omega_limit_sample(sys, probes, 1000, 3000, 1.0);
    const auto fit = box_counting_dimension(omega, {0.1, 0.05, 0.025, 0.0125});
    REQUIRE(fit.slope == Catch::Approx(1.26).margin(0.1));
}

TEST_CASE("probe regions produce in-region samples") {
    const auto henon_probes = sample_probe_region("henon", 500, 123);
    REQUIRE(henon_probes.size() == 500);
    // all inside the trapping quadrilateral's bounding box
    for (std::size_t i = 0; i < henon_probes.size(); ++i) {
        REQUIRE(henon_probes.point(i)[0] >= -1.33);
        REQUIRE(henon_probes.point(i)[0] <= 1.32);
        REQUIRE(henon_probes.point(i)[1] >= -0.5);
        REQUIRE(henon_probes.point(i)[1] <= 0.42);
    }
    const auto box_probes = sample_probe_region("logistic", 64, 5);
    for (std::size_t i = 0; i < box_probes.size(); ++i) {
        REQUIRE(box_probes.point(i)[0] >= 0.05);
        REQUIRE(box_probes.point(i)[0] <= 0.95);
    }
}
