#include <cmath>
#include <random>

#include "doctest.h"
#include "sphj/error.hpp"
#include "sphj/transport.hpp"

using namespace sphj;

namespace {

std::vector<double> random_masses(std::mt19937_64& rng, std::size_t n, double sparsity = 0.0) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> m(n);
    double s = 0;
    for (auto& v : m) {
        v = u(rng) < sparsity ? 0.0 : u(rng);
        s += v;
    }
    for (auto& v : m) v /= s;
    return m;
}

}  // namespace

TEST_CASE("1D W1 agrees with the transport LP on random pairs") {
    const Axis ax{-1, 1, 64};
    std::vector<std::vector<double>> cost(64, std::vector<double>(64));
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 64; ++j) cost[i][j] = std::abs(ax.coord(i) - ax.coord(j));
    std::mt19937_64 rng(2024);
    double worst = 0;
    for (int k = 0; k < 20; ++k) {
        const auto a = random_masses(rng, 64), b = random_masses(rng, 64);
        worst = std::max(worst, std::abs(wasserstein1_1d(a, b, ax) - transport_lp(cost, a, b)));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("point masses and identity") {
    const Axis ax{-2, 2, 9};
    std::vector<double> a(9, 0.0), b(9, 0.0);
    a[4] = 1.0;
    b[5] = 1.0;
    CHECK(wasserstein1_1d(a, b, ax) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(wasserstein1_1d(a, a, ax) == 0.0);
    b[5] = 0.5;
    CHECK_THROWS_AS(wasserstein1_1d(a, b, ax), Error);

    auto g = build_grid({Axis{-2, 2, 9}}, {}, 1.0, 0.5);
    DensityField da(g, 0.0), db(g, 0.0);
    da.values[4] = 1.0 / g->cell_volume();
    db.values[5] = 1.0 / g->cell_volume();
    CHECK(wasserstein1_1d(da, db) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("W1 is a metric") {
    const Axis ax{0, 3, 40};
    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const auto a = random_masses(rng, 40, 0.5), b = random_masses(rng, 40, 0.5), c = random_masses(rng, 40, 0.5);
        const double ab = wasserstein1_1d(a, b, ax), ba = wasserstein1_1d(b, a, ax);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= wasserstein1_1d(a, c, ax) + wasserstein1_1d(c, b, ax) + 1e-12);
    }
}

TEST_CASE("marginal proxy is a lower bound of exact 2D transport") {
    auto g = build_grid({Axis{-1, 1, 9}}, {Axis{-1, 1, 9}}, 1.0, 0.5);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 5; ++k) {
        DensityField a(g, 0.0), b(g, 0.0);
        a.values = random_masses(rng, g->node_count(), 0.3);
        b.values = random_masses(rng, g->node_count(), 0.3);
        a.normalize();
        b.normalize();
        const auto m = marginal_w1(a, b);
        const double exact = wasserstein1_exact(a, b);
        CHECK(m.proxy <= exact + 1e-10);
        CHECK(m.proxy == std::max(m.per_axis[0], m.per_axis[1]));
    }
    // a pure translation along x: both agree with the shift
    DensityField a(g, 0.0), b(g, 0.0);
    a.values[2 * 9 + 4] = 1.0 / g->cell_volume();
    b.values[5 * 9 + 4] = 1.0 / g->cell_volume();
    CHECK(marginal_w1(a, b).proxy == doctest::Approx(0.75));
    CHECK(wasserstein1_exact(a, b) == doctest::Approx(0.75));
}

TEST_CASE("upwind transport step conserves mass and positivity") {
    auto g = build_grid({Axis{-2, 2, 41}}, {Axis{-2, 2, 41}}, 1.0, 0.5);
    auto rho = gaussian_bump(g, Vec{0.3}, Vec{-0.2}, 0.4);
    CHECK(rho.mass() == doctest::Approx(1.0).epsilon(1e-14));
    FaceVelocity vel(g->node_count());
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2, 2);
    for (std::size_t k = 0; k < 2; ++k)
        for (auto& c : vel.c[k]) c = u(rng);
    const double dt = 0.9 / transport_rate(*g, vel, 0.05);
    std::vector<double> scratch;
    for (int s = 0; s < 50; ++s) transport_step(*g, rho.values, vel, 0.05, dt, scratch);
    CHECK(rho.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rho.min() >= -1e-14);
}
