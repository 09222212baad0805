#include <catch2/catch_amalgamated.hpp>

#include <attrforge/semigroup.hpp>
#include <attrforge/systems.hpp>

#include "oracles.hpp"

using namespace attrforge;

namespace {

FinitePointSet points1d(std::initializer_list<double> xs) {
    FinitePointSet g(1);
    for (double x : xs) g.push_back(std::span<const double>(&x, 1));
    return g;
}

}  // namespace

TEST_CASE("step applies the map the requested number of times") {
    const auto sys = make_system("affine_contraction", {{"eta", 0.5}, {"c", 0.0}});
    const auto x = points1d({1.0});
    REQUIRE(step(sys, x, 1.0).point(0)[0] == 0.5);
    REQUIRE(step(sys, x, 3.0).point(0)[0] == 0.125);

    SECTION("semigroup law holds bit-exactly") {
        const auto once = step(sys, step(sys, x, 2.0), 5.0);
        const auto direct = step(sys, x, 7.0);
        REQUIRE(once.data == direct.data);
    }
    SECTION("order preservation") {
        const auto g = points1d({1.0, -2.0, 4.0});
        const auto img = step(sys, g, 1.0);
        REQUIRE(img.point(0)[0] == 0.5);
        REQUIRE(img.point(1)[0] == -1.0);
        REQUIRE(img.point(2)[0] == 2.0);
    }
    SECTION("non-integer time rejected for discrete maps") {
        REQUIRE_THROWS(step(sys, x, 0.5));
    }
}

TEST_CASE("henon at the origin") {
    const auto sys = make_system("henon");
    FinitePointSet g(2);
    const double p[2] = {0.0, 0.0};
    g.push_back(std::span<const double>(p, 2));
    const auto img = step(sys, g, 1.0);
    REQUIRE(img.point(0)[0] == 1.0);
    REQUIRE(img.point(0)[1] == 0.0);
}

TEST_CASE("blow-up carries the offending point index") {
    SystemSpec doubling;
    doubling.name = "doubling";
    doubling.phase_dim = 1;
    doubling.kind = SystemKind::discrete_map;
    doubling.map = [](std::span<const double> x, std::span<double> out) { out[0] = 2.0 * x[0]; };
    const auto g = points1d({0.0, 1.0});
    try {
        step(doubling, g, 41.0);  // 2^41 > 1e12 for the second point only
        FAIL("expected blow-up was not thrown");
    } catch (const blow_up_error& e) {
        REQUIRE(e.point_index == 1);
    }
}

TEST_CASE("ode semigroup law is bit-exact on step multiples") {
    const auto sys = make_system("linear_flow", {{"rates", {-1.0}}});
    FinitePointSet g(1);
    const double x0 = 1.0;
    g.push_back(std::span<const double>(&x0, 1));
    const auto split = step(sys, step(sys, g, 0.25), 0.75);
    const auto direct = step(sys, g, 1.0);
    REQUIRE(split.data == direct.data);
    REQUIRE_THROWS(step(sys, g, 0.001));  // not a substep multiple
}

TEST_CASE("flow_sample matches the exponential closed form") {
    const auto sys = make_system("linear_flow", {{"rates", {-1.0}}});
    const double x0 = 1.0;
    const auto traj = flow_sample(sys, std::span<const double>(&x0, 1), {0.0, 1.0});
    REQUIRE(traj[0][0] == 1.0);  // exact at t = 0
    REQUIRE(traj[1][0] == Catch::Approx(std::exp(-1.0)).margin(1e-6));

    SECTION("time zero alone returns the point") {
        const auto t0 = flow_sample(sys, std::span<const double>(&x0, 1), {0.0});
        REQUIRE(t0.size() == 1);
        REQUIRE(t0[0][0] == 1.0);
    }
    SECTION("zero field is constant") {
        const auto zero = make_system("linear_flow", {{"rates", {0.0}}});
        const double x5 = 5.0;
        const auto tr = flow_sample(zero, std::span<const double>(&x5, 1), {0.0, 1.0, 2.0});
        REQUIRE(tr[0][0] == 5.0);
        REQUIRE(tr[1][0] == 5.0);
        REQUIRE(tr[2][0] == 5.0);
    }
    SECTION("times must increase") {
        REQUIRE_THROWS(flow_sample(sys, std::span<const double>(&x0, 1), {1.0, 0.5}));
    }
}

TEST_CASE("find_absorbing_ball on the affine contraction") {
    const auto sys = make_system("affine_contraction", {{"eta", 0.5}, {"c", 1.0}});
    const auto probes = points1d({-10.0, 10.0});
    const auto est = find_absorbing_ball(sys, probes, 60, 1.0);
    // closed form: x_k = 2 + (x_0 - 2) / 2^k
    REQUIRE(est.center[0] == Catch::Approx(2.0).margin(1e-6));
    REQUIRE(est.radius <= 1.0);
    REQUIRE(est.entry_time <= 40.0);
    REQUIRE(est.positively_invariant_checked);
    REQUIRE(est.witness_probes == 2);
    for (int k = 0; k <= 60; ++k) {
        const double xk = oracles::closed_form_affine_orbit(10.0, 0.5, 1.0, k);
        if (double(k) >= est.entry_time)
            REQUIRE(std::abs(xk - est.center[0]) <= est.radius * (1 + 1e-9));
    }
}

TEST_CASE("find_absorbing_ball shrinks to the grid floor on a pure contraction") {
    const auto sys = make_system("affine_contraction", {{"eta", 0.5}, {"c", 0.0}});
    const auto probes = points1d({1.0});
    const auto est = find_absorbing_ball(sys, probes, 40, 1.0);
    REQUIRE(std::abs(est.center[0]) < 1e-3);
    REQUIRE(est.radius <= std::pow(0.9, 40));  // deep in the radius grid
}

TEST_CASE("find_absorbing_ball rejects expanding systems") {
    SystemSpec expanding;
    expanding.name = "expanding";
    expanding.phase_dim = 1;
    expanding.kind = SystemKind::discrete_map;
    expanding.map = [](std::span<const double> x, std::span<double> out) {
        out[0] = 1.05 * x[0];
    };
    const auto probes = points1d({1.0});
    REQUIRE_THROWS_WITH(find_absorbing_ball(expanding, probes, 100, 1.0),
                        "no absorbing ball found");
}

TEST_CASE("find_absorbing_ball on henon from the trapping region") {
    const auto sys = make_system("henon");
    const auto probes = sample_probe_region("henon", 100, 11);
    const auto est = find_absorbing_ball(sys, probes, 10000, 1.0);
    const double center_norm = std::sqrt(est.center[0] * est.center[0] +
                                         est.center[1] * est.center[1]);
    REQUIRE(center_norm + est.radius <= 3.0);  // ball of radius <= 3 around the origin

    // oracle: long-orbit max-norm scan stays within the reported ball
    FinitePointSet x = probes;
    for (int k = 0; k < 200; ++k) x = step(sys, x, 1.0);
    for (int k = 0; k < 500; ++k) {
        x = step(sys, x, 1.0);
        for (std::size_t i = 0; i < x.size(); ++i)
            REQUIRE(distance(x, i, est.center) <= est.radius * (1 + 1e-9));
    }
}

TEST_CASE("omega_limit_sample") {
    SECTION("contraction collapses toward the fixed point") {
        const auto sys = make_system("affine_contraction", {{"eta", 0.5}, {"c", 0.0}});
        const auto b = points1d({1.0});
        const auto omega = omega_limit_sample(sys, b, 50, 5, 1.0);
        REQUIRE(omega.size() <= 5);
        for (std::size_t i = 0; i < omega.size(); ++i)
            REQUIRE(std::abs(omega.point(i)[0]) <= std::pow(2.0, -50));
    }
    SECTION("deduplication is bit-exact") {
        const auto sys = make_system("rotation", {{"theta", 1.5707963267948966}});
        FinitePointSet b(2);
        const double p[2] = {1.0, 0.0};
        b.push_back(std::span<const double>(p, 2));
        // near-quarter-turn: orbit revisits only finitely many states when
        // the same bit patterns recur
        const auto omega = omega_limit_sample(sys, b, 4, 100, 1.0);
        REQUIRE(omega.size() <= 100);
    }
    SECTION("irrational rotation fills the circle: slope near 1") {
        const auto sys = make_system("rotation", {{"theta", 1.0}});
        FinitePointSet b(2);
        const double p[2] = {1.0, 0.0};
        b.push_back(std::span<const double>(p, 2));
        const auto omega = omega_limit_sample(sys, b, 1000, 1000, 1.0);
        REQUIRE(omega.size() == 1000);
        const auto fit = box_counting_dimension(omega, {0.4, 0.2, 0.1, 0.05});
        REQUIRE(fit.slope == Catch::Approx(1.0).margin(0.2));
        // gap-statistics oracle: no angular gap above 2 pi / 300, so the
        // sample is dense well below the smallest fitted radius
        std::vector<double> angles;
        for (std::size_t i = 0; i < omega.size(); ++i)
            angles.push_back(std::atan2(omega.point(i)[1], omega.point(i)[0]));
        std::sort(angles.begin(), angles.end());
        double max_gap = angles.front() + 2 * 3.14159265358979323846 - angles.back();
        for (std::size_t i = 1; i < angles.size(); ++i)
            max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
        REQUIRE(max_gap < 2 * 3.14159265358979323846 / 300.0);
    }
    SECTION("requires positive burn-in and keep") {
        const auto sys = make_system("affine_contraction", {});
        const auto b = points1d({1.0});
        REQUIRE_THROWS(omega_limit_sample(sys, b, 0, 5, 1.0));
        REQUIRE_THROWS(omega_limit_sample(sys, b, 5, 0, 1.0));
    }
}

TEST_CASE("omega sample stays inside the absorbing ball estimate") {
    const auto sys = make_system("affine_contraction", {{"eta", 0.5}, {"c", 1.0}});
    const auto probes = points1d({-10.0, 10.0});
    const auto est = find_absorbing_ball(sys, probes, 60, 1.0);
    const auto omega = omega_limit_sample(sys, probes, 45, 10, 1.0);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        const double excess = distance(omega, i, est.center) - est.radius;
        REQUIRE(excess <= 1e-8);
    }
}
