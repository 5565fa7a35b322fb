#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sphj/adjoint.hpp"

using namespace sphj;

namespace {

HamiltonianModel zero_model(double gamma) {
    HamiltonianModel m;
    m.key = "zero";
    m.gamma = gamma;
    m.flags = {true, true, true};
    m.separable = true;
    m.eval = [](const Vec&, const Vec&, const Vec&, const Vec&) { return 0.0; };
    m.grad_p = m.grad_q = m.grad_y = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    return m;
}

SolveOutput run(const HamiltonianModel& m, const std::string& datum, GridPtr g, double eps = 0.5, DatumParams dp = {}) {
    CauchyProblem pb;
    pb.model = m;
    pb.eps = eps;
    pb.u0 = make_datum(datum, dp);
    SolveOptions o;
    for (double t : {0.25, 0.5, 0.75, 1.0})
        if (t <= g->t_final) o.output_times.push_back(t);
    o.store_every = 1;
    return solve_viscous(pb, g, o);
}

double variance_y(const DensityField& f) {
    const Grid& g = *f.grid;
    const auto m = marginal(f, 1);
    double mean = 0, sq = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
        const double y = g.fast_axes()[0].coord(j);
        mean += m[j] * y;
        sq += m[j] * y * y;
    }
    return sq - mean * mean;
}

}  // namespace

TEST_CASE("zero drift without diffusion keeps the density") {
    auto g = build_grid({Axis{-1, 1, 11}}, {Axis{-2, 2, 21}}, 1.0, 0.5);
    auto u = run(make_quadratic(slow_kinetic()), "zero", g);
    auto rho = gaussian_bump(g, Vec{0.2}, Vec{-0.3}, 0.4, 1.0);
    auto d = solve_fokker_planck_dual(u, rho, 0.0);
    REQUIRE(d.trajectory.size() >= 2);
    CHECK(d.trajectory.back().t == doctest::Approx(0.0));
    for (const auto& s : d.trajectory) CHECK(s.values == rho.values);
    CHECK(duality_residual(u, d, 0.0, 1.0) < 1e-14);
    CHECK(gamma_moment(u, d) == 0.0);
    auto c = supnorm_certificate(u);
    CHECK(c.pass);
    CHECK(c.max_sup == 0.0);
}

TEST_CASE("dual mass is conserved on the quadratic demo") {
    auto g = build_grid({Axis{-1.5, 1.5, 31}}, {Axis{-1.5, 1.5, 31}}, 1.0, 0.5);
    auto u = run(make_quadratic(slow_kinetic()), "cos_y", g, 0.5);
    auto rho = gaussian_bump(g, Vec{0.3}, Vec{-0.2}, 0.25, 1.0);
    for (double sigma : {0.0, 0.01}) {
        auto d = solve_fokker_planck_dual(u, rho, sigma);
        CHECK(d.diagnostics.max_mass_drift <= 1e-8);
        for (const auto& s : d.trajectory) {
            CHECK(std::abs(s.mass() - 1.0) <= 1e-8);
            CHECK(s.min() >= -1e-12);
        }
        CHECK(gamma_moment(u, d) > 0.0);
    }
}

TEST_CASE("pure diffusion spreads the variance at rate 2 sigma") {
    auto g = build_grid({Axis{-1, 1, 5}}, {Axis{-4, 4, 161}}, 1.0, 0.5);
    auto u = run(zero_model(2.0), "zero", g);
    auto rho = gaussian_bump(g, Vec{0.0}, Vec{0.0}, 0.4, 1.0);
    const double sigma = 0.05;
    auto d = solve_fokker_planck_dual(u, rho, sigma);
    const double grew = variance_y(d.trajectory.back()) - variance_y(d.trajectory.front());
    CHECK(grew == doctest::Approx(2 * sigma * 1.0).epsilon(0.1));
}

TEST_CASE("certificates on a frozen datum") {
    auto g = build_grid({Axis{-1, 1, 11}}, {Axis{-2, 2, 21}}, 1.0, 0.5);
    // H = 0 keeps u0; both sides of the duality identity vanish
    auto u = run(zero_model(2.0), "cos_y", g);
    auto rho = gaussian_bump(g, Vec{0.1}, Vec{0.4}, 0.3, 1.0);
    auto d = solve_fokker_planck_dual(u, rho, 0.0);
    CHECK(duality_residual(u, d, 0.0, 1.0) < 1e-12);
    CHECK(duality_residual(u, d, 0.25, 0.75) < 1e-12);

    // linear in x with slope a: the moment integrand is a^gamma on every slice
    for (double gamma : {2.0, 3.0}) {
        DatumParams dp;
        dp.slope = 0.7;
        auto lin = run(zero_model(gamma), "linear_x", g, 0.5, dp);
        // keep the density off the slow walls, where the reflected stencil sees a zero slope
        auto inner = rho;
        for (std::size_t i = 0; i < g->node_count(); ++i) {
            const std::size_t ix = g->index_along(i, 0);
            if (ix == 0 || ix + 1 == g->axis(0).n) inner.values[i] = 0.0;
        }
        inner.normalize();
        auto dl = solve_fokker_planck_dual(lin, inner, 0.0, 0.25);
        const double span = dl.trajectory.front().t - dl.trajectory.back().t;
        CHECK(span == doctest::Approx(0.75).epsilon(0.01));
        CHECK(gamma_moment(lin, dl) == doctest::Approx(std::pow(0.7, gamma) * span).epsilon(1e-12));
    }

    // bounded datum under H >= 0
    auto q = run(make_quadratic(slow_kinetic()), "cos_y", g);
    auto c = supnorm_certificate(q);
    CHECK(c.applicable);
    CHECK(c.pass);
    CHECK(c.max_sup <= 1.0 + c.slack);
}

TEST_CASE("residual shrinks under refinement") {
    std::vector<double> res;
    for (std::size_t n : {33, 65, 129}) {
        auto g = build_grid({Axis{-1.5, 1.5, n}}, {Axis{-1.5, 1.5, n}}, 0.5, 0.5);
        auto u = run(make_quadratic(slow_kinetic()), "cos_y", g, 0.5);
        auto rho = gaussian_bump(g, Vec{0.3}, Vec{-0.2}, 0.25, 0.5);
        auto d = solve_fokker_planck_dual(u, rho, 0.01);
        res.push_back(duality_residual(u, d, 0.0, 0.5));
    }
    CHECK(res[1] < res[0]);
    CHECK(res[2] < res[1]);
}
