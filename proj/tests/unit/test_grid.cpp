#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "sphj/error.hpp"
#include "sphj/grid.hpp"

using namespace sphj;

namespace {

ScalarField fill(GridPtr g, double (*f)(double)) {
    ScalarField s(g, 0.0);
    for (std::size_t i = 0; i < g->node_count(); ++i) s[i] = f(g->coord(i, 0));
    return s;
}

std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("sphj_" + name)).string();
}

}  // namespace

TEST_CASE("axis spacing and node counts") {
    auto g = build_grid({Axis{-1, 1, 3}}, {}, 1.0, 0.5);
    CHECK(g->axis(0).h() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g->node_count() == 3);

    auto big = build_grid({Axis{-2, 2, 401}}, {Axis{-2, 2, 401}}, 1.0, 0.5);
    CHECK(big->node_count() == 401u * 401u);
    CHECK(big->stride(0) == 401);
    CHECK(big->stride(1) == 1);
    CHECK(big->is_fast(1));
    CHECK_FALSE(big->is_fast(0));
}

TEST_CASE("degenerate axes are rejected") {
    CHECK_THROWS_AS(build_grid({Axis{1, 1, 5}}, {}, 1.0, 0.5), Error);
    CHECK_THROWS_AS(build_grid({Axis{0, 1, 1}}, {}, 1.0, 0.5), Error);
    CHECK_THROWS_AS(build_grid({Axis{0, 1, 5}}, {}, -1.0, 0.5), Error);
}

TEST_CASE("row-major coordinates") {
    auto g = build_grid({Axis{0, 1, 3}}, {Axis{-1, 1, 5}}, 1.0, 0.5);
    Vec x{}, y{};
    g->coords(7, x, y);  // ix = 1, iy = 2
    CHECK(x[0] == doctest::Approx(0.5));
    CHECK(y[0] == doctest::Approx(0.0));
}

TEST_CASE("upwind differences") {
    auto g = build_grid({Axis{-1, 1, 5}}, {}, 1.0, 0.5);
    auto lin = fill(g, [](double x) { return 2 * x; });
    for (int s : {-1, 0, 1}) {
        auto d = upwind_gradient(lin, 0, s);
        for (std::size_t i = 1; i + 1 < 5; ++i) CHECK(d[i] == doctest::Approx(2.0).epsilon(1e-14));
    }
    auto c = fill(g, [](double) { return 3.0; });
    for (int s : {-1, 0, 1}) CHECK(sup_norm(upwind_gradient(c, 0, s)) == 0.0);

    // |x| on nodes -1,-0.5,0,0.5,1: backward quotient at 0 is -1, forward is +1, central 0
    auto a = fill(g, [](double x) { return std::abs(x); });
    const double backward[5] = {-1, -1, -1, 1, 1};
    const double forward[5] = {-1, -1, 1, 1, 1};
    auto dp = upwind_gradient(a, 0, +1), dm = upwind_gradient(a, 0, -1), d0 = upwind_gradient(a, 0, 0);
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(dp[i] == doctest::Approx(backward[i]));
        CHECK(dm[i] == doctest::Approx(forward[i]));
    }
    CHECK(d0[2] == doctest::Approx(0.0));
}

TEST_CASE("laplacian") {
    auto g = build_grid({Axis{-1, 1, 21}}, {}, 1.0, 0.5);
    auto sq = laplacian(fill(g, [](double x) { return x * x; }));
    for (std::size_t i = 1; i + 1 < 21; ++i) CHECK(sq[i] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sup_norm(laplacian(fill(g, [](double) { return -4.0; }))) == 0.0);

    auto fine = build_grid({Axis{0, 3, 301}}, {}, 1.0, 0.5);
    auto s = laplacian(fill(fine, [](double x) { return std::sin(x); }));
    double worst = 0;
    for (std::size_t i = 1; i + 1 < 301; ++i) worst = std::max(worst, std::abs(s[i] + std::sin(fine->coord(i, 0))));
    CHECK(worst < 1e-3);
}

TEST_CASE("sup norm against an exhaustive scan") {
    auto g = build_grid({Axis{-1, 1, 9}}, {Axis{-4, 4, 33}}, 1.0, 0.5);
    CHECK(sup_norm(ScalarField(g, 0.0)) == 0.0);
    ScalarField c(g, 0.0, std::vector<double>(g->node_count(), -2.5));
    CHECK(sup_norm(c) == 2.5);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    ScalarField r(g, 0.0);
    for (auto& v : r.values) v = nd(rng);
    double scan = 0, scan_ball = 0;
    Vec x{}, y{};
    for (std::size_t i = 0; i < g->node_count(); ++i) {
        scan = std::max(scan, std::abs(r[i]));
        g->coords(i, x, y);
        if (std::abs(y[0]) <= 2.0) scan_ball = std::max(scan_ball, std::abs(r[i]));
    }
    CHECK(sup_norm(r) == scan);
    CHECK(sup_norm(r, Window::ball(2.0)) == scan_ball);
    // larger windows never decrease the norm
    double prev = 0;
    for (double rad : {0.0, 0.5, 1.0, 2.0, 3.0, 4.0}) {
        const double v = sup_norm(r, Window::ball(rad));
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(prev == scan);
}

TEST_CASE("binary and csv round trip") {
    auto g = build_grid({Axis{-1, 1, 5}}, {Axis{0, 2, 7}}, 2.0, 0.4);
    ScalarField f(g, 0.75);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(0.3 * static_cast<double>(i)) + 1e-17 * i;
    const auto bin = tmp_path("field.bin");
    write_field_binary(f, bin);
    auto back = read_field_binary(bin);
    CHECK(back.t == f.t);
    CHECK(back.grid->same_space(*g));
    CHECK(back.values == f.values);
    std::filesystem::remove(bin);

    const auto csv = tmp_path("field.csv");
    write_field_csv(f, csv);
    std::ifstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "x0,y0,value");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        const double v = std::stod(line.substr(line.rfind(',') + 1));
        CHECK(v == f[rows]);
        ++rows;
    }
    CHECK(rows == f.size());
    std::filesystem::remove(csv);

    CHECK_THROWS_AS(read_field_binary(tmp_path("missing.bin")), Error);
}
