#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "sphj/cell_problem.hpp"
#include "sphj/hj_solver.hpp"

using namespace sphj;

namespace {

constexpr double kPi = std::numbers::pi;

// |p|^2/2 + |q|^2/2 + amp * (-cos y) + c
HamiltonianModel fast_model(double amp, double c, std::size_t d1 = 1) {
    HamiltonianModel m;
    m.key = "cell_test";
    m.d1 = d1;
    m.fast_exponent = 0.0;
    m.flags = {false, true, true};
    m.separable = true;
    m.eval = [amp, c](const Vec&, const Vec& y, const Vec& p, const Vec& q) {
        return 0.5 * p[0] * p[0] + 0.5 * q[0] * q[0] - amp * std::cos(y[0]) + c;
    };
    m.grad_p = [](const Vec&, const Vec&, const Vec& p, const Vec&) { return Vec{p[0]}; };
    m.grad_q = [](const Vec&, const Vec&, const Vec&, const Vec& q) { return Vec{q[0]}; };
    m.grad_y = [amp](const Vec&, const Vec& y, const Vec&, const Vec&) { return Vec{amp * std::sin(y[0])}; };
    return m;
}

CellQuery query(std::size_t n, double half = kPi, double xb = 0.0, double pb = 0.0) {
    CellQuery q;
    q.fast_grid = build_grid({}, {Axis{-half, half, n}}, 1.0, 0.5);
    q.x_bar[0] = xb;
    q.p_bar[0] = pb;
    return q;
}

}  // namespace

TEST_CASE("discounted problem with constant solutions") {
    auto q = query(65);
    for (double c : {0.0, 0.3, -1.25}) {
        auto s = solve_discounted(fast_model(0.0, c), q, 0.1);
        for (double v : s.w.values) CHECK(v == doctest::Approx(-c / 0.1).epsilon(1e-12));
        CHECK(s.residual < 1e-8);
        CHECK(discrete_cell_residual(fast_model(0.0, c), q, 0.1, s.w) < 1e-8);
    }
    auto z = solve_discounted(fast_model(0.0, 0.0), q, 0.05);
    CHECK(sup_norm(z.w) == 0.0);
}

TEST_CASE("discounted pendulum under 4x refinement") {
    // compared as delta * w_delta, the quantity that converges to -H-bar
    auto coarse = query(513), fine = query(2049);
    auto m = fast_model(1.0, 0.0);
    auto a = solve_discounted(m, coarse, 0.1), b = solve_discounted(m, fine, 0.1);
    double worst = 0;
    for (std::size_t j = 0; j < 513; ++j) worst = std::max(worst, 0.1 * std::abs(a.w[j] - b.w[4 * j]));
    CHECK(worst < 1e-3);
}

TEST_CASE("effective Hamiltonian identities") {
    auto q = query(65, 3.0, 0.4, 0.7);
    for (double c : {0.0, 0.5}) CHECK(effective_hamiltonian(fast_model(0.0, c), q).value == doctest::Approx(0.5 * 0.49 + c).epsilon(1e-12));

    // mechanical: the fast part averages to zero and the slow part survives
    auto mech = make_quadratic(slow_variable_kinetic());
    double worst = 0;
    for (double xb : {-1.0, 0.2, 0.9})
        for (double pb : {-0.5, 0.0, 0.3}) {
            auto qq = query(81, 4.0, xb, pb);
            worst = std::max(worst, std::abs(effective_hamiltonian(mech, qq).value - (1 + std::cos(xb) / 4) * pb * pb / 2));
        }
    CHECK(worst <= 1e-4);

    // shift covariance
    auto qp = query(129);
    const double base = effective_hamiltonian(fast_model(1.0, 0.0), qp).value;
    CHECK(effective_hamiltonian(fast_model(1.0, 0.3), qp).value - base == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("pendulum cell value against a long-time average") {
    auto qp = query(129);
    const auto ev = effective_hamiltonian(fast_model(1.0, 0.0), qp);

    CauchyProblem pb;
    pb.model = fast_model(1.0, 0.0, 0);
    pb.eps = 1.0;
    pb.u0 = make_datum("zero");
    SolveOptions so;
    so.output_times = {100, 200};
    auto out = solve_viscous(pb, build_grid({}, {Axis{-kPi, kPi, 129}}, 200, 0.5), so);
    const double avg = -(out.nearest(200)[64] - out.nearest(100)[64]) / 100;
    CHECK(std::abs(ev.value - avg) < 1e-2);
    CHECK(ev.value == doctest::Approx(1.0).epsilon(1e-2));

    // flatness: the oscillation of delta w_delta shrinks with delta
    const auto& sp = ev.diagnostics.spreads;
    for (std::size_t i = 1; i < sp.size(); ++i) CHECK(sp[i] <= sp[i - 1]);
    CHECK(ev.diagnostics.flagged == (ev.diagnostics.spread > 1e-2));
}

TEST_CASE("tables") {
    CellTemplate mech;
    mech.model = make_quadratic(slow_variable_kinetic());
    mech.fast_grid = build_grid({}, {Axis{-4, 4, 81}}, 1.0, 0.5);
    const Axis xa{-1, 1, 5}, pa{-0.5, 0.5, 11};
    const auto t = tabulate_hbar(xa, pa, mech, 2);
    double worst = 0;
    for (std::size_t i = 0; i < xa.n; ++i)
        for (std::size_t j = 0; j < pa.n; ++j) {
            const double x = xa.coord(i), p = pa.coord(j);
            worst = std::max(worst, std::abs(t.at(i, j) - (1 + std::cos(x) / 4) * p * p / 2));
            CHECK(t.value(x, p) == t.at(i, j));
        }
    CHECK(worst <= 1e-4);
    CHECK(t.flagged_count() == 0);

    CellTemplate shifted = mech;
    shifted.model = make_quadratic(slow_constant(0.25));
    const auto ts = tabulate_hbar(xa, pa, shifted);
    for (double v : ts.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    const auto path = (std::filesystem::temp_directory_path() / "sphj_table.bin").string();
    write_table_binary(t, path);
    const auto back = read_table_binary(path);
    CHECK(back.values == t.values);
    CHECK(back.spreads == t.spreads);
    CHECK(back.x_axis == t.x_axis);
    CHECK(back.p_axis == t.p_axis);
    std::filesystem::remove(path);

    auto lm = limit_model(t);
    CHECK(lm.d2 == 0);
    CHECK(lm.eval(Vec{xa.coord(2)}, Vec{}, Vec{pa.coord(3)}, Vec{}) == t.at(2, 3));
}
