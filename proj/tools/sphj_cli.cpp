#include <cstdio>
#include <fstream>
#include <sstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sphj/sphj.h"

namespace {

struct Overrides {
    std::map<std::string, std::string> values;
    void bind(CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
    }
};

int report(sphj_status s) {
    std::fprintf(stderr, "error: %s\n", sphj_last_error());
    return sphj_exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singularly perturbed Hamilton-Jacobi laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir = "out";
    std::optional<long> jobs, seed;
    app.add_option("--config", config_path, "YAML or JSON experiment config");
    app.add_option("--out", out_dir, "artifact directory");
    app.add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed recorded with the run");
    app.set_version_flag("--version", std::string(sphj_version()));

    Overrides ov;
    auto* solve = app.add_subcommand("solve", "single Cauchy problem");
    ov.bind(solve, "--model", "model", "model key");
    ov.bind(solve, "--eps", "eps", "eps");
    ov.bind(solve, "--sigma", "sigma", "viscosity");
    std::string grid_file;
    solve->add_option("--grid", grid_file, "YAML or JSON file holding the grid section")->check(CLI::ExistingFile);
    auto* duality = app.add_subcommand("duality", "adjoint certificates on the quadratic demo");
    ov.bind(duality, "--sigma", "sigma", "viscosity");
    auto* cell = app.add_subcommand("cell", "effective Hamiltonian table");
    ov.bind(cell, "--scenario", "scenario", "scenario key");
    ov.bind(cell, "--model", "model", "registry model key");
    ov.bind(cell, "--xbar-axis", "cell.x_axis", "slow state axis, e.g. \"[-2, 2, 5]\"");
    ov.bind(cell, "--pbar-axis", "cell.p_axis", "slow momentum axis");
    auto* rate = app.add_subcommand("rate", "eps sweep with rate fits");
    ov.bind(rate, "--scenario", "scenario", "homogeneous | gamma | fully-nonlinear | isaacs-upper | isaacs-lower");
    auto* isaacs = app.add_subcommand("isaacs", "upper and lower game sweeps");
    auto* mfg = app.add_subcommand("mfg", "mean field game of acceleration");
    ov.bind(mfg, "--scenario", "scenario", "weak-coupling | uncoupled | constant-cost | flat | free");
    ov.bind(mfg, "--eps", "eps", "eps");
    ov.bind(mfg, "--iters", "mfg.iters", "fixed point iterations");
    ov.bind(mfg, "--tol", "mfg.tol", "fixed point tolerance");
    ov.bind(mfg, "--eps-list", "eps_list", "sweep, e.g. \"[0.4, 0.2, 0.1]\"");
    auto* validate = app.add_subcommand("validate", "dry run: config, CFL and memory checks");
    ov.bind(validate, "--command", "command", "command to check");
    (void)isaacs;

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    sphj_config* cfg = nullptr;
    sphj_status s = config_path.empty() ? sphj_config_parse("{}", &cfg) : sphj_config_load(config_path.c_str(), &cfg);
    if (s != SPHJ_OK) return report(s);
    auto set = [&](const std::string& k, const std::string& v) { return sphj_config_set(cfg, k.c_str(), v.c_str()); };
    if (jobs) s = set("jobs", std::to_string(*jobs));
    if (s == SPHJ_OK && seed) s = set("seed", std::to_string(*seed));
    if (s == SPHJ_OK && !grid_file.empty()) {
        std::ifstream is(grid_file);
        std::stringstream text;
        text << is.rdbuf();
        s = set("grid", text.str());
    }
    for (const auto& [k, v] : ov.values)
        if (s == SPHJ_OK) s = set(k, v);
    if (s != SPHJ_OK) {
        sphj_config_free(cfg);
        return report(s);
    }
    char* summary = nullptr;
    s = sphj_run(cfg, command.c_str(), out_dir.c_str(), &summary);
    if (summary) {
        std::fputs(summary, stdout);
        sphj_string_free(summary);
    }
    sphj_config_free(cfg);
    if (s != SPHJ_OK) return report(s);
    return 0;
}
