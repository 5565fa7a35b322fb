#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "sphj/sphj.h"

namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "model: quadratic\n"
    "eps: 0.4\n"
    "t_list: [0.25, 0.5]\n"
    "grid:\n"
    "  slow: [-1, 1, 5]\n"
    "  fast: [-2, 2, 21]\n"
    "  t_final: 0.5\n";

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("sphj_capi_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("version and exit codes") {
    CHECK(std::strlen(sphj_version()) > 0);
    CHECK(sphj_exit_code(SPHJ_OK) == 0);
    CHECK(sphj_exit_code(SPHJ_ERR_CONFIG) == 2);
    CHECK(sphj_exit_code(SPHJ_ERR_NUMERICAL) == 3);
    CHECK(sphj_exit_code(SPHJ_ERR_NONCONVERGENCE) == 4);
}

TEST_CASE("model handles") {
    sphj_model* m = nullptr;
    REQUIRE(sphj_model_create("quadratic", &m) == SPHJ_OK);
    size_t d1 = 0, d2 = 0;
    CHECK(sphj_model_dims(m, &d1, &d2) == SPHJ_OK);
    CHECK(d1 == 1);
    CHECK(d2 == 1);
    const double x = 0.2, y = 0.1, p = 1.0, q = 3.0;
    double h = 0;
    CHECK(sphj_model_eval(m, &x, &y, &p, &q, &h) == SPHJ_OK);
    CHECK(h == doctest::Approx(5.0));
    CHECK(sphj_model_eval(m, nullptr, &y, &p, &q, &h) == SPHJ_ERR_INVALID_ARGUMENT);
    sphj_model_free(m);

    sphj_model* bad = nullptr;
    CHECK(sphj_model_create("nope", &bad) == SPHJ_ERR_CONFIG);
    CHECK(bad == nullptr);
    CHECK(std::string(sphj_last_error()).find("nope") != std::string::npos);
}

TEST_CASE("in-memory solve") {
    sphj_config* cfg = nullptr;
    REQUIRE(sphj_config_parse(kSmall, &cfg) == SPHJ_OK);
    CHECK(sphj_config_check(cfg) == SPHJ_OK);
    sphj_solution* sol = nullptr;
    REQUIRE(sphj_solve(cfg, &sol) == SPHJ_OK);
    const size_t n = sphj_solution_nodes(sol);
    CHECK(n == 5 * 21);
    REQUIRE(sphj_solution_slices(sol) >= 2);
    double t = -1;
    CHECK(sphj_solution_time(sol, sphj_solution_slices(sol) - 1, &t) == SPHJ_OK);
    CHECK(t == doctest::Approx(0.5));
    std::vector<double> buf(n);
    CHECK(sphj_solution_values(sol, 0, buf.data(), n) == SPHJ_OK);
    CHECK(sphj_solution_values(sol, 0, buf.data(), n - 1) == SPHJ_ERR_INVALID_ARGUMENT);
    CHECK(sphj_solution_time(sol, 999, &t) == SPHJ_ERR_INVALID_ARGUMENT);
    for (double v : buf) CHECK(std::isfinite(v));
    sphj_solution_free(sol);
    sphj_config_free(cfg);
}

TEST_CASE("config errors leave no artifacts") {
    sphj_config* cfg = nullptr;
    REQUIRE(sphj_config_parse(kSmall, &cfg) == SPHJ_OK);
    CHECK(sphj_config_set(cfg, "model", "no_such_model") == SPHJ_OK);
    const auto dir = scratch("bad");
    char* summary = nullptr;
    const auto s = sphj_run(cfg, "solve", dir.string().c_str(), &summary);
    CHECK(s == SPHJ_ERR_CONFIG);
    CHECK(sphj_exit_code(s) == 2);
    CHECK_FALSE(fs::exists(dir));
    sphj_string_free(summary);
    sphj_config_free(cfg);

    sphj_config* bad = nullptr;
    CHECK(sphj_config_parse("grid: {slow: [-1, 1, 5], bogus: 3}\n", &bad) == SPHJ_OK);
    CHECK(sphj_config_check(bad) == SPHJ_ERR_CONFIG);
    sphj_config_free(bad);
}

TEST_CASE("run writes a manifest") {
    sphj_config* cfg = nullptr;
    REQUIRE(sphj_config_parse(kSmall, &cfg) == SPHJ_OK);
    const auto dir = scratch("run");
    char* summary = nullptr;
    REQUIRE(sphj_run(cfg, "solve", dir.string().c_str(), &summary) == SPHJ_OK);
    REQUIRE(summary != nullptr);
    CHECK(std::string(summary).find('{') == 0);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "trajectory.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    sphj_string_free(summary);

    char* report = nullptr;
    REQUIRE(sphj_config_validate(cfg, "solve", &report) == SPHJ_OK);
    CHECK(std::string(report).find("\"ok\": true") != std::string::npos);
    sphj_string_free(report);
    sphj_config_free(cfg);
    fs::remove_all(dir);
}

TEST_CASE("metric and fit helpers") {
    std::vector<double> a(11, 0.0), b(11, 0.0);
    a[5] = 1.0;  // y = 0
    b[6] = 1.0;  // y = 0.5
    double w = -1;
    REQUIRE(sphj_wasserstein1_1d(a.data(), b.data(), a.size(), -2.5, 2.5, &w) == SPHJ_OK);
    CHECK(w == doctest::Approx(0.5).epsilon(1e-14));
    std::vector<double> bad(11, 0.0);
    CHECK(sphj_wasserstein1_1d(a.data(), bad.data(), a.size(), -2.5, 2.5, &w) != SPHJ_OK);

    const double eps[4] = {0.4, 0.2, 0.1, 0.05};
    double e[4];
    for (int i = 0; i < 4; ++i) e[i] = 3 * eps[i];
    double slope = 0, icpt = 0, r2 = 0;
    REQUIRE(sphj_fit_order(eps, e, 4, &slope, &icpt, &r2) == SPHJ_OK);
    CHECK(slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(icpt == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}
