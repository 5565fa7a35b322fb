#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sphj/error.hpp"
#include "sphj/hj_solver.hpp"

using namespace sphj;

namespace {

constexpr double kPi = std::numbers::pi;

CauchyProblem quadratic(double eps, const std::string& datum, DatumParams dp = {}) {
    CauchyProblem pb;
    pb.model = make_quadratic(slow_kinetic());
    pb.eps = eps;
    pb.u0 = make_datum(datum, dp);
    return pb;
}

SolveOptions at(std::vector<double> ts) {
    SolveOptions o;
    o.output_times = std::move(ts);
    return o;
}

double max_fast_derivative(const ScalarField& f) {
    return sup_norm(upwind_gradient(f, f.grid->d1(), 0));
}

}  // namespace

TEST_CASE("zero datum is stationary") {
    auto g = build_grid({Axis{-1, 1, 11}}, {Axis{-2, 2, 21}}, 1.0, 0.5);
    auto out = solve_viscous(quadratic(0.1, "zero"), g, at({0.5, 1.0}));
    for (const auto& s : out.trajectory) CHECK(sup_norm(s) == 0.0);
    CHECK(out.final().t == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("slow-only datum keeps the fast derivative at zero") {
    auto g = build_grid({Axis{-2, 2, 21}}, {Axis{-2, 2, 21}}, 1.0, 0.5);
    auto out = solve_viscous(quadratic(0.1, "slow_only"), g, at({0.5, 1.0}));
    for (std::size_t i = 0; i < out.trajectory.size(); ++i) CHECK(sup_norm(out.gradient(i, 1)) < 1e-12);
    CHECK(fast_gradient_norm(out, 1.0, Window::all()) < 1e-12);
}

TEST_CASE("Hopf-Lax agreement on a coarse grid") {
    std::vector<double> ys;
    for (int i = -6000; i <= 6000; ++i) ys.push_back(3 * kPi * i / 6000.0);
    const auto search = search_lines({0.0}, ys);
    for (double eps : {0.4, 0.1}) {
        auto g = build_grid({Axis{-1, 1, 5}}, {Axis{-kPi, kPi, 101}}, 1.0, 0.5);
        auto pb = quadratic(eps, "cos_y");
        auto out = solve_viscous(pb, g, at({0.5, 1.0}));
        for (double t : {0.5, 1.0}) {
            const auto& f = out.nearest(t);
            double gap = 0;
            Vec x{}, y{};
            for (std::size_t i = 0; i < g->node_count(); ++i) {
                g->coords(i, x, y);
                gap = std::max(gap, std::abs(f[i] - hopf_lax_oracle(pb.u0, t, Vec{}, y, eps, search)));
            }
            CHECK(gap < 5e-2);
        }
    }
}

TEST_CASE("Hopf-Lax oracle") {
    DatumParams dp;
    dp.value = 1.7;
    const auto c = make_datum("constant", dp);
    const auto s = search_lines({-1, 0, 1}, {-1, 0, 1});
    CHECK(hopf_lax_oracle(c, 0.3, Vec{0.2}, Vec{0.4}, 0.1, s) == 1.7);

    const auto cy = make_datum("cos_y");
    std::vector<double> ys;
    for (int i = 0; i < 10000; ++i) ys.push_back(-kPi + 2 * kPi * (i + 0.5) / 10000.0);
    const auto lines = search_lines({0.0}, ys);
    CHECK(hopf_lax_oracle(cy, 1.0, Vec{}, Vec{kPi}, 1e-8, lines) < 1e-6);

    // brute force for eps = 0.1: min over y' of eps |pi - y'|^2 / 2 + u0(y')
    double brute = 1e300;
    for (double yp : ys) brute = std::min(brute, 0.1 * (kPi - yp) * (kPi - yp) / 2 + 0.5 * (1 - std::cos(yp)));
    CHECK(hopf_lax_oracle(cy, 1.0, Vec{}, Vec{kPi}, 0.1, lines) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("vanishing viscosity schedule") {
    auto g = build_grid({Axis{-1, 1, 5}}, {Axis{-kPi, kPi, 81}}, 0.5, 0.5);
    auto pb = quadratic(0.4, "cos_y");
    auto vv = solve_vanishing_viscosity(pb, g, {1e-2, 5e-3, 2.5e-3}, at({0.5}));
    REQUIRE(vv.report.gaps.size() == 2);
    CHECK(vv.report.gaps[1] < vv.report.gaps[0]);
    CHECK(vv.report.gaps[1] > 0.0);

    auto single = solve_vanishing_viscosity(pb, g, {5e-3}, at({0.5}));
    pb.sigma = 5e-3;
    auto direct = solve_viscous(pb, g, at({0.5}));
    CHECK(single.output.final().values == direct.final().values);

    auto z = solve_vanishing_viscosity(quadratic(0.4, "zero"), g, {1e-2, 5e-3, 2.5e-3}, at({0.5}));
    for (double gap : z.report.gaps) CHECK(gap == 0.0);
    CHECK_THROWS_AS(solve_vanishing_viscosity(pb, g, {1e-3, 1e-2}, at({0.5})), Error);
}

TEST_CASE("fast rescaling") {
    auto g = build_grid({Axis{-1, 1, 3}}, {Axis{-2, 2, 41}}, 0.1, 0.5);
    DatumParams dp;
    dp.slope = 1.5;
    auto pb = std::make_shared<CauchyProblem>(quadratic(0.25, "linear_y", dp));
    SolveOutput out;
    out.problem = pb;
    out.grid = g;
    ScalarField f(g, 0.0);
    Vec x{}, y{};
    for (std::size_t i = 0; i < g->node_count(); ++i) {
        g->coords(i, x, y);
        f[i] = 1.5 * y[0];
    }
    out.trajectory.push_back(f);

    auto target = build_grid({Axis{-1, 1, 3}}, {Axis{-1, 1, 21}}, 0.1, 0.5);
    auto r = rescale_fast(out, 0.25, target);
    for (std::size_t i = 0; i < target->node_count(); ++i) {
        target->coords(i, x, y);
        CHECK(r.final()[i] == doctest::Approx(1.5 * y[0] / 0.5).epsilon(1e-12));
    }

    auto one = rescale_fast(out, 1.0);
    CHECK(one.grid->same_space(*g));
    for (std::size_t i = 0; i < g->node_count(); ++i) CHECK(one.final()[i] == doctest::Approx(f[i]).epsilon(1e-14));

    ScalarField c(g, 0.0, std::vector<double>(g->node_count(), 0.3));
    out.trajectory = {c};
    const auto rc = rescale_fast(out, 0.1);
    for (double v : rc.final().values) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("fast gradient norm decays with eps and with time") {
    auto g = build_grid({Axis{-1, 1, 5}}, {Axis{-kPi, kPi, 101}}, 1.0, 0.5);
    double prev = 1e300;
    for (double eps : {0.4, 0.2, 0.1}) {
        auto out = solve_viscous(quadratic(eps, "cos_y"), g, at({0.25, 1.0}));
        const double early = fast_gradient_norm(out, 0.25, Window::all());
        const double late = fast_gradient_norm(out, 1.0, Window::all());
        CHECK(early >= late);
        CHECK(late < prev);
        prev = late;
    }
}

TEST_CASE("comparison and maximum principle") {
    auto g = build_grid({Axis{-2, 2, 21}}, {Axis{-3, 3, 41}}, 1.0, 0.5);
    auto pb = quadratic(0.2, "bump");
    auto out = solve_viscous(pb, g, at({0.5, 1.0}));
    const auto& u0 = out.trajectory.front();
    double lo = 1e300, hi = -1e300;
    for (double v : u0.values) lo = std::min(lo, v), hi = std::max(hi, v);
    const double h = g->axis(1).h();
    for (const auto& s : out.trajectory)
        for (std::size_t i = 0; i < s.size(); ++i) {
            // H >= 0 and H(x, y, 0, 0) = 0: bounded by the datum range; u <= u0 up to the O(h) scheme viscosity
            CHECK(s[i] <= u0[i] + h);
            CHECK(s[i] <= hi + 1e-12);
            CHECK(s[i] >= lo - 1e-12);
        }
    // the fast Lipschitz constant does not grow beyond a slack of 1.5
    CHECK(max_fast_derivative(out.final()) <= 1.5 * max_fast_derivative(u0));
}

TEST_CASE("reflection and translation equivariance") {
    auto g = build_grid({Axis{-1, 1, 5}}, {Axis{-6, 6, 121}}, 0.5, 0.5);
    DatumParams a, b;
    a.shift = 0.3;
    b.shift = -0.3;
    auto ua = solve_viscous(quadratic(0.2, "bump", a), g, at({0.5})).final();
    auto ub = solve_viscous(quadratic(0.2, "bump", b), g, at({0.5})).final();
    const std::size_t ny = 121;
    double refl = 0;
    for (std::size_t ix = 0; ix < 5; ++ix)
        for (std::size_t j = 0; j < ny; ++j) refl = std::max(refl, std::abs(ua[ix * ny + j] - ub[ix * ny + ny - 1 - j]));
    CHECK(refl < 1e-12);

    // shift by 4 nodes; compare away from the walls
    DatumParams c;
    c.shift = 0.4;
    auto u0 = solve_viscous(quadratic(0.2, "bump"), g, at({0.5})).final();
    auto uc = solve_viscous(quadratic(0.2, "bump", c), g, at({0.5})).final();
    double tr = 0;
    for (std::size_t ix = 0; ix < 5; ++ix)
        for (std::size_t j = 30; j + 30 < ny; ++j) tr = std::max(tr, std::abs(uc[ix * ny + j + 4] - u0[ix * ny + j]));
    CHECK(tr < 1e-6);
}

TEST_CASE("strict time step and dry run") {
    auto g = std::make_shared<Grid>(std::vector<Axis>{Axis{-1, 1, 11}}, std::vector<Axis>{Axis{-3, 3, 61}}, 1.0, 0.5);
    g->dt = 0.5;
    auto pb = quadratic(0.1, "cos_y");
    try {
        solve_viscous(pb, g, at({1.0}));
        FAIL("expected a CFL violation");
    } catch (const CflViolation& e) {
        CHECK(e.kind() == ErrorKind::Numerical);
        CHECK_FALSE(e.binding().empty());
    }
    SolveOptions dry = at({1.0});
    dry.dry_run = true;
    g->dt = 0.0;
    auto d = solve_viscous(pb, g, dry);
    CHECK(d.diagnostics.steps == 0);
    CHECK(d.diagnostics.initial_rate > 0.0);

    auto bad = pb;
    bad.eps = -1;
    CHECK_THROWS_AS(solve_viscous(bad, g), Error);
}
