#include <catch2/catch_amalgamated.hpp>

#include <attrforge/metric.hpp>
#include <attrforge/parallel.hpp>
#include <attrforge/pointset_io.hpp>
#include <attrforge/rng.hpp>

#include "oracles.hpp"

using namespace attrforge;

namespace {

FinitePointSet points1d(std::initializer_list<double> xs) {
    FinitePointSet g(1);
    for (double x : xs) g.push_back(std::span<const double>(&x, 1));
    return g;
}

FinitePointSet grid1d(double lo, double hi, int n) {
    FinitePointSet g(1);
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * double(i) / double(n - 1);
        g.push_back(std::span<const double>(&x, 1));
    }
    return g;
}

FinitePointSet random_cloud(int dim, std::size_t n, Rng& rng) {
    FinitePointSet g(dim);
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < dim; ++c) p[std::size_t(c)] = rng.uniform(-1, 1);
        g.push_back(p);
    }
    return g;
}

}  // namespace

TEST_CASE("greedy_net basic cases") {
    SECTION("two far points need two balls") {
        const auto g = points1d({0.0, 1.0});
        REQUIRE(greedy_net(g, 0.5).count == 2);
    }
    SECTION("single point") {
        const auto g = points1d({3.5});
        REQUIRE(greedy_net(g, 0.1).count == 1);
        REQUIRE(greedy_net(g, 100.0).count == 1);
    }
    SECTION("empty input") {
        FinitePointSet g(1);
        REQUIRE_THROWS_WITH(greedy_net(g, 0.5), "empty point set");
    }
    SECTION("deterministic start and order") {
        const auto g = points1d({0.0, 1.0, 0.5});
        const auto net = greedy_net(g, 0.4);
        REQUIRE(net.centers[0] == 0);  // first point is index 0
        REQUIRE(net.centers[1] == 1);  // farthest from it
    }
}

TEST_CASE("greedy_net on the 101-point unit grid sits between the exact sweeps") {
    FinitePointSet g(1);
    for (int i = 0; i <= 100; ++i) {
        const double x = double(i) / 100.0;
        g.push_back(std::span<const double>(&x, 1));
    }
    const auto net = greedy_net(g, 0.1);
    const std::size_t min_cover = oracles::line_min_cover(g.data, 0.1);
    const std::size_t max_packing = oracles::line_max_packing(g.data, 0.1);
    REQUIRE(min_cover == 5);
    REQUIRE(max_packing == 10);
    REQUIRE(net.count >= min_cover);
    REQUIRE(net.count <= max_packing);
    REQUIRE(net.count >= 5);
    REQUIRE(net.count <= 10);
}

TEST_CASE("greedy_net separation and coverage invariants") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 1 + int(rng.index(4));
        auto g = random_cloud(dim, 40 + rng.index(60), rng);
        const double eps = 0.05 + 0.5 * rng.uniform();
        const auto net = greedy_net(g, eps);
        for (std::size_t i = 0; i < net.count; ++i)
            for (std::size_t j = i + 1; j < net.count; ++j)
                REQUIRE(distance(g, net.centers[i], net.centers[j]) >= eps);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c : net.centers)
                best = std::min(best, distance(g, c, g.point(i)));
            REQUIRE(best < eps);
        }
    }
}

TEST_CASE("packing monotonicity: count at 2 eps never exceeds count at eps") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int dim = 1 + int(rng.index(4));
        auto g = random_cloud(dim, 20 + rng.index(80), rng);
        const double eps = 0.02 + 0.4 * rng.uniform();
        REQUIRE(greedy_net(g, 2 * eps).count <= greedy_net(g, eps).count);
    }
}

TEST_CASE("exact_cover_number") {
    SECTION("one center can cover a tight triple") {
        const auto g = points1d({0.0, 0.3, 0.6});
        REQUIRE(exact_cover_number(g, 0.35) == 1);
    }
    SECTION("two far points") {
        const auto g = points1d({0.0, 1.0});
        REQUIRE(exact_cover_number(g, 0.5) == 2);
    }
    SECTION("unit cube vertices, euclidean, eps 1.1") {
        FinitePointSet g(3);
        for (int m = 0; m < 8; ++m) {
            const double p[3] = {double(m & 1), double((m >> 1) & 1), double((m >> 2) & 1)};
            g.push_back(std::span<const double>(p, 3));
        }
        REQUIRE(exact_cover_number(g, 1.1) == 2);
        REQUIRE(oracles::brute_min_cover(g, 1.1) == 2);
    }
    SECTION("size guard") {
        Rng rng(1);
        auto g = random_cloud(2, 21, rng);
        REQUIRE_THROWS_WITH(exact_cover_number(g, 0.5), "oracle size exceeded");
    }
    SECTION("matches the independent subset-enumeration oracle") {
        Rng rng(99);
        for (int trial = 0; trial < 25; ++trial) {
            const int dim = 1 + int(rng.index(3));
            auto g = random_cloud(dim, 5 + rng.index(6), rng);
            const double eps = 0.2 + 0.8 * rng.uniform();
            REQUIRE(exact_cover_number(g, eps) == oracles::brute_min_cover(g, eps));
        }
    }
}

TEST_CASE("oracle sandwich: packing(2eps) <= exact N(eps) <= greedy count") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const int dim = 1 + int(rng.index(4));
        auto g = random_cloud(dim, 6 + rng.index(7), rng);
        const double eps = 0.15 + 0.6 * rng.uniform();
        const std::size_t exact = exact_cover_number(g, eps);
        REQUIRE(exact <= greedy_net(g, eps).count);
        REQUIRE(greedy_net(g, 2 * eps).count <= exact);
    }
}

TEST_CASE("box_counting_dimension") {
    SECTION("uniform square has slope near 2") {
        Rng rng(12345);
        FinitePointSet g(2);
        std::vector<double> p(2);
        for (int i = 0; i < 10000; ++i) {
            p[0] = rng.uniform();
            p[1] = rng.uniform();
            g.push_back(p);
        }
        const auto fit = box_counting_dimension(g, {0.2, 0.1, 0.05, 0.025});
        REQUIRE(fit.slope == Catch::Approx(2.0).margin(0.25));
        REQUIRE(oracles::grid_cell_slope(g, {0.2, 0.1, 0.05, 0.025}) ==
                Catch::Approx(2.0).margin(0.15));
        REQUIRE(fit.r_squared > 0.97);
        for (std::size_t i = 1; i < fit.counts.size(); ++i)
            REQUIRE(fit.counts[i].second >= fit.counts[i - 1].second);
    }
    SECTION("segment has slope near 1") {
        Rng rng(999);
        FinitePointSet g(2);
        std::vector<double> p(2, 0.0);
        for (int i = 0; i < 1000; ++i) {
            p[0] = rng.uniform();
            g.push_back(p);
        }
        const auto fit = box_counting_dimension(g, {0.2, 0.1, 0.05, 0.025});
        REQUIRE(fit.slope == Catch::Approx(1.0).margin(0.15));
    }
    SECTION("single point degenerates to slope 0 with flagged fit") {
        const auto g = points1d({0.25});
        const auto fit = box_counting_dimension(g, {0.2, 0.1, 0.05});
        REQUIRE(fit.slope == 0.0);
        REQUIRE(fit.r_squared == 0.0);
    }
    SECTION("grid validation") {
        const auto g = points1d({0.0, 1.0});
        REQUIRE_THROWS(box_counting_dimension(g, {0.2, 0.1}));
        REQUIRE_THROWS(box_counting_dimension(g, {0.1, 0.2, 0.3}));
    }
}

TEST_CASE("hausdorff_distance_onesided") {
    const auto g01 = points1d({0.0});
    const auto g011 = points1d({0.0, 1.0});
    const auto g0 = points1d({0.0});
    REQUIRE(hausdorff_distance_onesided(g01, g011) == 0.0);
    REQUIRE(hausdorff_distance_onesided(g011, g0) == 1.0);
    const auto a = points1d({0.0, 2.0});
    const auto b = points1d({0.5, 1.5});
    REQUIRE(hausdorff_distance_onesided(a, b) == 0.5);
    REQUIRE(hausdorff_distance_onesided(a, a) == 0.0);
    FinitePointSet empty(1);
    REQUIRE_THROWS(hausdorff_distance_onesided(a, empty));

    SECTION("triangle-type bound") {
        Rng rng(5);
        auto x = random_cloud(2, 30, rng);
        auto y = random_cloud(2, 25, rng);
        auto z = random_cloud(2, 20, rng);
        const double sym_yz = std::max(hausdorff_distance_onesided(y, z),
                                       hausdorff_distance_onesided(z, y));
        REQUIRE(hausdorff_distance_onesided(x, z) <=
                hausdorff_distance_onesided(x, y) + sym_yz + 1e-12);
    }
}

TEST_CASE("metric tags") {
    FinitePointSet g(2, Metric::max_norm);
    const double p0[2] = {0.0, 0.0};
    const double p1[2] = {0.3, 0.4};
    g.push_back(std::span<const double>(p0, 2));
    g.push_back(std::span<const double>(p1, 2));
    REQUIRE(distance(g, 0, 1) == 0.4);
    FinitePointSet s(2, Metric::sum);
    s.data = g.data;
    REQUIRE(distance(s, 0, 1) == Catch::Approx(0.7));
    FinitePointSet w(2, Metric::weighted_euclidean, {4.0, 1.0});
    w.data = g.data;
    REQUIRE(distance(w, 0, 1) == Catch::Approx(std::sqrt(4 * 0.09 + 0.16)));
    REQUIRE_THROWS(FinitePointSet(2, Metric::weighted_euclidean, {1.0}));
    REQUIRE_THROWS(FinitePointSet(2, Metric::weighted_euclidean, {1.0, -1.0}));
}

TEST_CASE("pseudometric nets") {
    // rho = distance of first coordinates; a net in rho collapses axis 2
    FinitePointSet g(2);
    for (int i = 0; i < 10; ++i) {
        const double p[2] = {double(i % 2), double(i)};
        g.push_back(std::span<const double>(p, 2));
    }
    const auto rho = PseudometricSpec::coordinate_projection(std::size_t(1));
    const auto net = greedy_net(g, 0.5, rho);
    REQUIRE(net.count == 2);
    REQUIRE(rho.eval(g.point(0), g.point(2)) == 0.0);

    const auto zero = PseudometricSpec::zero();
    REQUIRE(greedy_net(g, 0.5, zero).count == 1);
}

TEST_CASE("determinism across thread counts") {
    Rng rng(77);
    auto g = random_cloud(3, 5000, rng);
    par::thread_count() = 1;
    const auto net1 = greedy_net(g, 0.3);
    const auto fit1 = box_counting_dimension(g, {0.6, 0.3, 0.15});
    par::thread_count() = 4;
    const auto net4 = greedy_net(g, 0.3);
    const auto fit4 = box_counting_dimension(g, {0.6, 0.3, 0.15});
    par::thread_count() = 1;
    REQUIRE(net1.centers == net4.centers);
    REQUIRE(net1.count == net4.count);
    REQUIRE(fit1.slope == fit4.slope);
    REQUIRE(fit1.counts == fit4.counts);
}

TEST_CASE("point set round trips") {
    Rng rng(42);
    auto g = random_cloud(3, 257, rng);
    SECTION("csv") {
        const auto text = to_csv(g);
        REQUIRE(text.find("\r\n") != std::string::npos);
        const auto path = std::string("test_points.csv");
        write_csv(path, g);
        const auto back = read_csv(path);
        REQUIRE(back.data == g.data);
        REQUIRE(back.dim == g.dim);
        std::remove(path.c_str());
    }
    SECTION("binary") {
        const auto blob = to_binary(g);
        REQUIRE(blob.substr(0, 4) == "ATRF");
        const auto back = from_binary(blob);
        REQUIRE(back.data == g.data);
        REQUIRE(back.dim == g.dim);
        REQUIRE_THROWS(from_binary("XXXX" + blob.substr(4)));
    }
}
