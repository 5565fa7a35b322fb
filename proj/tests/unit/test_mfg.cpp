#include <cmath>

#include "doctest.h"
#include "sphj/error.hpp"
#include "sphj/mfg.hpp"

using namespace sphj;

namespace {

// shipped scenario on a coarser grid and a shorter horizon
MFGProblem small(const std::string& key, double eps = 0.2) {
    auto pb = make_mfg_scenario(key, eps);
    auto g = build_grid({Axis{-4, 4, 41}}, {Axis{-4, 4, 41}}, 1.0, 0.5);
    pb.mu0 = gaussian_bump(g, Vec{-1.0}, Vec{0.0}, 0.4);
    pb.time_slices = 20;
    return pb;
}

void check_measures(const std::vector<DensityField>& mu) {
    for (const auto& m : mu) {
        CHECK(std::abs(m.mass() - 1.0) <= 1e-8);
        CHECK(m.min() >= -1e-12);
    }
}

}  // namespace

TEST_CASE("uncoupled problems converge after one pass") {
    auto pb = small("uncoupled");
    auto r = solve_mfg_acc(pb);
    CHECK(r.converged);
    REQUIRE(r.diagnostics.size() <= 2);
    CHECK(r.diagnostics.back().du == 0.0);
    CHECK(r.diagnostics.back().dmu == 0.0);
    check_measures(r.state.mu);
    CHECK(r.state.mu.size() == pb.time_slices + 1);

    auto lim = solve_mfg_control_limit(pb);
    CHECK(lim.converged);
    CHECK(lim.diagnostics.size() <= 2);
}

TEST_CASE("constant running cost matches a direct backward solve") {
    auto pb = small("constant-cost");
    auto r = solve_mfg_acc(pb);
    REQUIRE(r.converged);

    CauchyProblem cp;
    cp.model = acceleration_hamiltonian();
    cp.eps = pb.eps;
    cp.direction = Direction::Backward;
    const auto g = pb.g;
    cp.u0.eval = [g](const Vec& x, const Vec&) { return g.eval(x[0], MeasureView{}); };
    cp.running_cost = [](double, std::vector<double>& extra) { std::fill(extra.begin(), extra.end(), -0.3); };
    SolveOptions so;
    for (std::size_t j = 0; j <= pb.time_slices; ++j) so.output_times.push_back(pb.grid()->t_final * j / pb.time_slices);
    auto direct = solve_viscous(cp, pb.grid(), so);
    REQUIRE(direct.trajectory.size() == r.state.u.trajectory.size());
    double worst = 0;
    for (std::size_t k = 0; k < direct.trajectory.size(); ++k)
        worst = std::max(worst, sup_diff(direct.trajectory[k], r.state.u.trajectory[k]));
    CHECK(worst <= 1e-10);
}

TEST_CASE("weak coupling: measures, bounds and contraction") {
    auto pb = small("weak-coupling");
    MFGOptions o;
    o.tol = 1e-8;
    auto r = solve_mfg_acc(pb, o);
    CHECK(r.converged);
    check_measures(r.state.mu);
    const double bound = mfg_value_bound(pb, r.state);
    for (const auto& f : r.state.u.trajectory) CHECK(sup_norm(f) <= bound + 1e-9);
    REQUIRE(r.diagnostics.size() > 3);
    for (std::size_t k = 2; k < r.diagnostics.size(); ++k) {
        CHECK(r.diagnostics[k].du <= r.diagnostics[k - 1].du);
        CHECK(r.diagnostics[k].dmu <= r.diagnostics[k - 1].dmu);
    }
    for (const auto& d : r.diagnostics) {
        CHECK(d.du >= 0.0);
        CHECK(d.dmu >= 0.0);
    }
}

TEST_CASE("limit system") {
    auto pb = small("uncoupled");
    auto lim = solve_mfg_control_limit(pb);
    REQUIRE(lim.converged);
    REQUIRE(lim.state.m.size() == lim.state.mu.size());
    for (std::size_t j = 0; j < lim.state.m.size(); ++j)
        CHECK(lim.state.mu[j].mass() == doctest::Approx(lim.state.m[j].mass()).epsilon(1e-12));
    check_measures(lim.state.mu);

    // H0(p) = p^2/2 while the best velocity stays inside the unclipped range
    CauchyProblem cp;
    cp.model = limit_model(slow_kinetic());
    cp.eps = 1.0;
    cp.direction = Direction::Backward;
    const auto g = pb.g;
    cp.u0.eval = [g](const Vec& x, const Vec&) { return g.eval(x[0], MeasureView{}); };
    SolveOptions so;
    for (std::size_t j = 0; j <= pb.time_slices; ++j) so.output_times.push_back(pb.grid()->t_final * j / pb.time_slices);
    auto direct = solve_viscous(cp, lim.state.u.grid, so);
    REQUIRE(direct.trajectory.size() == lim.state.u.trajectory.size());
    double worst = 0;
    for (std::size_t k = 0; k < direct.trajectory.size(); ++k)
        worst = std::max(worst, sup_diff(direct.trajectory[k], lim.state.u.trajectory[k]));
    CHECK(worst <= 1e-8);
}

TEST_CASE("rate study guards and degenerate case") {
    auto pb = small("flat");
    CHECK_THROWS_AS(mfg_rate_study(pb, {0.2, 0.1}, {0.5}, 2.0), Error);
    CHECK_THROWS_AS(mfg_rate_study(pb, {0.1, 0.2, 0.05}, {0.5}, 2.0), Error);
    auto rep = mfg_rate_study(pb, {0.4, 0.2, 0.1}, {0.25, 1.0}, 2.0);
    CHECK(rep.report.degenerate);
    for (double e : rep.max_errors) CHECK(e <= kDegenerateFloor);
    for (bool c : rep.converged) CHECK(c);
}

TEST_CASE("mollified density") {
    auto pb = small("uncoupled");
    const auto rho = mollified_density(pb.mu0, 0.0);
    const Axis& ax = pb.grid()->axis(0);
    double mass = 0;
    for (double v : rho) {
        CHECK(v >= 0.0);
        mass += v * ax.h();
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(make_mfg_scenario("nope"), Error);
    CHECK(mfg_scenario_keys().size() == 5);
}
