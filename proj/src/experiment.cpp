#include "sphj/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "artifacts.hpp"
#include "sphj/adjoint.hpp"
#include "sphj/error.hpp"
#include "sphj/mfg.hpp"
#include "sphj/rate_harness.hpp"

namespace sphj {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

json scalar_from_yaml(const YAML::Node& n) {
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    if (s == "null" || s == "~" || s.empty()) return nullptr;
    long long iv = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), iv);
    if (ec == std::errc() && p == s.data() + s.size()) return iv;
    char* end = nullptr;
    const double dv = std::strtod(s.c_str(), &end);
    if (end && *end == '\0' && end != s.c_str()) return dv;
    return s;
}

json from_yaml(const YAML::Node& n) {
    switch (n.Type()) {
    case YAML::NodeType::Scalar: return scalar_from_yaml(n);
    case YAML::NodeType::Sequence: {
        json a = json::array();
        for (const auto& e : n) a.push_back(from_yaml(e));
        return a;
    }
    case YAML::NodeType::Map: {
        json o = json::object();
        for (const auto& kv : n) o[kv.first.as<std::string>()] = from_yaml(kv.second);
        return o;
    }
    default: return nullptr;
    }
}

json parse_text(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return json::object();
    if (text[first] == '{' || text[first] == '[') {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Config, std::string("malformed JSON config: ") + e.what());
        }
    }
    try {
        return from_yaml(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed YAML config: ") + e.what());
    }
}

const json& schema() {
    static const json s = json::parse(R"({
      "command": "string", "scenario": "string", "model": "string",
      "model_params": {"gamma": "number", "controls": "integer", "singleton_a": "boolean"},
      "grid": {"slow": "axes", "fast": "axes", "t_final": "number", "cfl_safety": "number", "dt": "number"},
      "datum": {"key": "string", "width": "number", "wall_at": "number", "wall_width": "number",
                "wall_height": "number", "slow_amplitude": "number", "value": "number", "slope": "number",
                "shift": "number"},
      "eps": "number", "eps_list": "numbers", "sigma": "number", "sigma_list": "numbers",
      "t_list": "numbers", "refinements": "integers", "window_radius": "number",
      "gradient_radius": "number", "seed": "integer", "jobs": "integer", "memory_cap_mb": "number",
      "store_every": "integer", "check_discretization": "boolean", "delta_list": "numbers",
      "mfg": {"iters": "integer", "tol": "number", "theta": "number", "v_radius": "number", "sweep": "boolean"},
      "cell": {"x_axis": "axis", "p_axis": "axis"}
    })");
    return s;
}

bool is_axis(const json& v) {
    if (v.is_array()) return v.size() == 3 && v[0].is_number() && v[1].is_number() && v[2].is_number_integer();
    if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it)
            if (it.key() != "lo" && it.key() != "hi" && it.key() != "n") return false;
        return v.contains("lo") && v.contains("hi") && v.contains("n") && v["lo"].is_number() &&
               v["hi"].is_number() && v["n"].is_number_integer();
    }
    return false;
}

bool type_ok(const std::string& type, const json& v) {
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "boolean") return v.is_boolean();
    if (type == "numbers")
        return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
    if (type == "integers")
        return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
    if (type == "axis") return is_axis(v);
    // one axis or a list of axes
    if (type == "axes") return is_axis(v) || (v.is_array() && std::all_of(v.begin(), v.end(), is_axis));
    return false;
}

void check_against(const json& node, const json& sch, const std::string& prefix) {
    require(node.is_object(), ErrorKind::Config, "'" + (prefix.empty() ? std::string("config") : prefix) + "' must be a mapping");
    for (auto it = node.begin(); it != node.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        require(sch.contains(it.key()), ErrorKind::Config, "unknown config key '" + key + "'");
        const json& expect = sch[it.key()];
        if (expect.is_object()) check_against(it.value(), expect, key);
        else
            require(type_ok(expect.get<std::string>(), it.value()), ErrorKind::Config,
                    "config key '" + key + "' must be of type " + expect.get<std::string>());
    }
}

Axis axis_of(const json& v) {
    if (v.is_array()) return Axis{v[0].get<double>(), v[1].get<double>(), v[2].get<std::size_t>()};
    return Axis{v["lo"].get<double>(), v["hi"].get<double>(), v["n"].get<std::size_t>()};
}

std::vector<Axis> axes_of(const json& v) {
    if (is_axis(v)) return {axis_of(v)};
    std::vector<Axis> out;
    for (const auto& e : v) out.push_back(axis_of(e));
    return out;
}

// typed access with defaults
struct View {
    const json& t;
    const json* find(const std::string& dotted) const {
        const json* cur = &t;
        std::size_t start = 0;
        while (true) {
            const auto dot = dotted.find('.', start);
            const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!cur->is_object() || !cur->contains(part)) return nullptr;
            cur = &(*cur)[part];
            if (dot == std::string::npos) return cur;
            start = dot + 1;
        }
    }
    bool has(const std::string& k) const { return find(k) != nullptr; }
    double num(const std::string& k, double d) const { const json* v = find(k); return v ? v->get<double>() : d; }
    long integer(const std::string& k, long d) const { const json* v = find(k); return v ? v->get<long>() : d; }
    bool flag(const std::string& k, bool d) const { const json* v = find(k); return v ? v->get<bool>() : d; }
    std::string str(const std::string& k, const std::string& d) const {
        const json* v = find(k);
        return v ? v->get<std::string>() : d;
    }
    std::vector<double> nums(const std::string& k, std::vector<double> d) const {
        const json* v = find(k);
        return v ? v->get<std::vector<double>>() : d;
    }
    Axis axis(const std::string& k, Axis d) const { const json* v = find(k); return v ? axis_of(*v) : d; }
};

std::size_t jobs_of(const View& v) {
    const long j = v.integer("jobs", 1);
    require(j >= 1, ErrorKind::Config, "jobs must be at least 1");
    return static_cast<std::size_t>(j);
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

ojson fit_json(const FitResult& f) {
    ojson o;
    o["slope"] = std::isfinite(f.slope) ? ojson(f.slope) : ojson(nullptr);
    o["intercept"] = std::isfinite(f.intercept) ? ojson(f.intercept) : ojson(nullptr);
    o["r2"] = std::isfinite(f.r2) ? ojson(f.r2) : ojson(nullptr);
    o["points"] = f.points;
    return o;
}

double mean_slope(const std::vector<FitResult>& fits) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& f : fits)
        if (f.ok()) s += f.slope, ++n;
    return n ? s / double(n) : std::nan("");
}

ojson report_json(const RateReport& r) {
    ojson o;
    o["kind"] = r.kind;
    o["eps"] = r.eps;
    o["t_list"] = r.t_list;
    o["errors"] = r.errors;
    o["predicted"] = r.predicted;
    ojson fits = ojson::array();
    for (const auto& f : r.fits) fits.push_back(fit_json(f));
    o["fits"] = fits;
    if (!r.kappa_fits.empty()) {
        ojson k = ojson::array();
        for (const auto& f : r.kappa_fits) k.push_back(fit_json(f));
        o["kappa_fits"] = k;
    }
    if (!r.time_fits.empty()) {
        ojson k = ojson::array();
        for (const auto& f : r.time_fits) k.push_back(fit_json(f));
        o["time_fits"] = k;
    }
    const double m = mean_slope(r.fits);
    o["slope"] = std::isfinite(m) ? ojson(m) : ojson(nullptr);
    o["degenerate"] = r.degenerate;
    o["refused"] = r.refused;
    ojson d;
    d["performed"] = r.discretization.performed;
    d["estimate"] = r.discretization.estimate;
    d["smallest_gap"] = r.discretization.smallest_gap;
    d["ok"] = r.discretization.ok;
    o["discretization"] = d;
    o["notes"] = r.notes;
    return o;
}

std::string errors_csv(const RateReport& r) {
    std::vector<std::string> head{"eps"};
    for (double t : r.t_list) head.push_back("t=" + fmt_num(t));
    CsvTable c(head);
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
        std::vector<double> row{r.eps[i]};
        row.insert(row.end(), r.errors[i].begin(), r.errors[i].end());
        c.row(row);
    }
    return c.str();
}

std::string errors_svg(const RateReport& r, const std::string& title, const std::string& ylabel) {
    PlotSpec p;
    p.title = title;
    p.x_label = "eps";
    p.y_label = ylabel;
    for (std::size_t j = 0; j < r.t_list.size(); ++j) {
        PlotSeries s;
        s.label = "t=" + fmt_num(r.t_list[j]);
        for (std::size_t i = 0; i < r.errors.size(); ++i) {
            s.x.push_back(r.eps[i]);
            s.y.push_back(r.errors[i][j]);
        }
        p.series.push_back(std::move(s));
    }
    return render_svg(p);
}

void log_line(const std::string& s) { std::fprintf(stderr, "[sphj] %s\n", s.c_str()); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- solve ----

struct SolveSetup {
    CauchyProblem problem;
    GridPtr grid;
    SolveOptions options;
};

SolveSetup solve_setup(const View& v) {
    SolveSetup s;
    const std::string key = v.str("model", "quadratic");
    require(has_model(key), ErrorKind::Config, "unknown model key '" + key + "'");
    ModelParams mp;
    mp.gamma = v.num("model_params.gamma", mp.gamma);
    mp.controls = static_cast<std::size_t>(v.integer("model_params.controls", static_cast<long>(mp.controls)));
    mp.singleton_a = v.flag("model_params.singleton_a", false);
    s.problem.model = make_model(key, mp);
    const auto& m = s.problem.model;
    std::vector<Axis> slow, fast;
    if (const json* a = v.find("grid.slow")) slow = axes_of(*a);
    else slow.assign(m.d1, Axis{-2.0, 2.0, 41});
    if (const json* a = v.find("grid.fast")) fast = axes_of(*a);
    else fast.assign(m.d2, Axis{-3.0, 3.0, 61});
    require(slow.size() == m.d1 && fast.size() == m.d2, ErrorKind::Config,
            "grid axes do not match the model dimensions (" + std::to_string(m.d1) + " slow, " +
                std::to_string(m.d2) + " fast)");
    auto g = std::make_shared<Grid>(slow, fast, v.num("grid.t_final", 1.0), v.num("grid.cfl_safety", 0.5));
    g->dt = v.num("grid.dt", 0.0);
    require(g->dt >= 0.0, ErrorKind::Config, "grid.dt must be nonnegative");
    s.grid = g;
    const std::string dk = v.str("datum.key", "cos_y");
    const auto dks = datum_keys();
    require(std::find(dks.begin(), dks.end(), dk) != dks.end(), ErrorKind::Config, "unknown datum key '" + dk + "'");
    DatumParams dp;
    dp.width = v.num("datum.width", dp.width);
    dp.wall_at = v.num("datum.wall_at", dp.wall_at);
    dp.wall_width = v.num("datum.wall_width", dp.wall_width);
    dp.wall_height = v.num("datum.wall_height", dp.wall_height);
    dp.slow_amplitude = v.num("datum.slow_amplitude", dp.slow_amplitude);
    dp.value = v.num("datum.value", dp.value);
    dp.slope = v.num("datum.slope", dp.slope);
    dp.shift = v.num("datum.shift", dp.shift);
    s.problem.u0 = make_datum(dk, dp);
    s.problem.eps = v.num("eps", 0.1);
    require(s.problem.eps > 0.0, ErrorKind::Config, "eps must be positive");
    s.problem.sigma = v.num("sigma", 0.0);
    require(s.problem.sigma >= 0.0, ErrorKind::Config, "sigma must be nonnegative");
    s.options.output_times = v.nums("t_list", {0.5 * g->t_final, g->t_final});
    for (double t : s.options.output_times)
        require(t >= 0.0 && t <= g->t_final, ErrorKind::Config, "t_list entries must lie in [0, t_final]");
    s.options.store_every = static_cast<std::size_t>(v.integer("store_every", 0));
    s.options.memory_cap_mb = v.num("memory_cap_mb", 256.0);
    return s;
}

ArtifactSet run_solve(const View& v, ojson& summary) {
    SolveSetup s = solve_setup(v);
    const auto out = solve_viscous(s.problem, s.grid, s.options);
    const Grid& g = *s.grid;
    std::vector<std::string> head{"t"};
    for (std::size_t k = 0; k < g.d1(); ++k) head.push_back("x" + std::to_string(k));
    for (std::size_t k = 0; k < g.d2(); ++k) head.push_back("y" + std::to_string(k));
    head.push_back("u");
    CsvTable traj(head);
    Vec x{}, y{};
    for (const auto& f : out.trajectory)
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            g.coords(i, x, y);
            std::vector<double> row{f.t};
            for (std::size_t k = 0; k < g.d1(); ++k) row.push_back(x[k]);
            for (std::size_t k = 0; k < g.d2(); ++k) row.push_back(y[k]);
            row.push_back(f[i]);
            traj.row(row);
        }
    summary["model"] = s.problem.model.key;
    summary["datum"] = s.problem.u0.key;
    summary["eps"] = s.problem.eps;
    summary["sigma"] = s.problem.sigma;
    summary["nodes"] = g.node_count();
    const auto& d = out.diagnostics;
    summary["steps"] = d.steps;
    summary["dt_min"] = d.dt_min;
    summary["dt_max"] = d.dt_max;
    summary["binding"] = d.binding;
    ojson sl = ojson::array();
    for (const auto& h : d.history)
        sl.push_back({{"t", h.t}, {"sup", h.sup}, {"min", h.min}, {"max", h.max}, {"cfl_max", h.cfl_max}});
    summary["slices"] = sl;
    ArtifactSet a;
    a.add("trajectory.csv", traj.str());
    return a;
}

// ---- duality ----

struct DualityDemo {
    double half = 1.5, width = 0.25, eps = 0.5, amp = 0.2, tau = 0.5;
    Vec cx{0.3, 0, 0}, cy{-0.2, 0, 0};
};

CauchyProblem duality_problem(const DualityDemo& d, double sigma) {
    CauchyProblem pb;
    pb.model = make_quadratic(slow_kinetic());
    pb.eps = d.eps;
    pb.sigma = sigma;
    const double amp = d.amp;
    pb.u0.key = "duality_demo";
    pb.u0.eval = [amp](const Vec& x, const Vec& y) { return amp * (0.5 * (1.0 - std::cos(x[0])) + (1.0 - std::cos(y[0]))); };
    return pb;
}

GridPtr duality_grid(const DualityDemo& d, std::size_t n) {
    return build_grid({Axis{-d.half, d.half, n}}, {Axis{-d.half, d.half, n}}, d.tau, 0.5);
}

SolveOutput duality_solve(const DualityDemo& d, std::size_t n, double sigma, GridPtr* grid_out = nullptr) {
    auto g = duality_grid(d, n);
    const CauchyProblem pb = duality_problem(d, sigma);
    SolveOptions o;
    o.store_every = 1;
    o.memory_cap_mb = 1024.0;
    if (grid_out) *grid_out = g;
    return solve_viscous(pb, g, o);
}

ArtifactSet run_duality(const View& v, ojson& summary) {
    DualityDemo demo;
    demo.eps = v.num("eps", demo.eps);
    const double sigma = v.num("sigma", 0.01);
    require(sigma > 0.0, ErrorKind::Config, "duality needs sigma > 0");
    std::vector<long> ns{65, 129, 257};
    if (const json* r = v.find("refinements")) ns = r->get<std::vector<long>>();
    require(ns.size() >= 2, ErrorKind::Config, "refinements needs at least two grids");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        require(ns[i] >= 9, ErrorKind::Config, "refinement grids need at least 9 nodes");
        if (i) require(ns[i] > ns[i - 1], ErrorKind::Config, "refinements must increase");
    }
    const auto sigmas = v.nums("sigma_list", {1e-2, 5e-3, 2.5e-3});
    for (double s : sigmas) require(s > 0.0, ErrorKind::Config, "sigma_list entries must be positive");

    CsvTable res({"n", "h", "residual", "mass_drift"});
    std::vector<double> hs, rs;
    double drift = 0.0;
    ojson cert;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        GridPtr g;
        const auto u = duality_solve(demo, static_cast<std::size_t>(ns[k]), sigma, &g);
        const auto rho = gaussian_bump(g, demo.cx, demo.cy, demo.width, demo.tau);
        const auto dual = solve_fokker_planck_dual(u, rho, sigma);
        const double r = duality_residual(u, dual, 0.0, demo.tau);
        hs.push_back(g->axis(0).h());
        rs.push_back(r);
        drift = std::max(drift, dual.diagnostics.max_mass_drift);
        res.row({double(ns[k]), hs.back(), r, dual.diagnostics.max_mass_drift});
        if (k + 1 == ns.size()) {
            const auto c = supnorm_certificate(u);
            cert = {{"applicable", c.applicable}, {"pass", c.pass}, {"max_sup", c.max_sup},
                    {"initial_sup", c.initial_sup}, {"slack", c.slack}};
        }
    }
    std::vector<double> orders;
    for (std::size_t k = 1; k < rs.size(); ++k) orders.push_back(std::log(rs[k - 1] / rs[k]) / std::log(hs[k - 1] / hs[k]));
    CsvTable mom({"sigma", "gamma_moment"});
    std::vector<double> moments;
    for (double s : sigmas) {
        GridPtr g;
        const auto u = duality_solve(demo, static_cast<std::size_t>(ns.front()), s, &g);
        const auto rho = gaussian_bump(g, demo.cx, demo.cy, demo.width, demo.tau);
        const auto dual = solve_fokker_planck_dual(u, rho, s);
        moments.push_back(gamma_moment(u, dual));
        mom.row({s, moments.back()});
    }
    const auto [mn, mx] = std::minmax_element(moments.begin(), moments.end());
    summary["eps"] = demo.eps;
    summary["sigma"] = sigma;
    summary["refinements"] = ns;
    summary["residuals"] = rs;
    summary["orders"] = orders;
    summary["min_order"] = orders.empty() ? 0.0 : *std::min_element(orders.begin(), orders.end());
    summary["max_mass_drift"] = drift;
    summary["supnorm_certificate"] = cert;
    summary["sigma_list"] = sigmas;
    summary["gamma_moments"] = moments;
    summary["gamma_moment_spread"] = moments.empty() || *mn <= 0.0 ? 0.0 : *mx / *mn;
    ArtifactSet a;
    a.add("residuals.csv", res.str());
    a.add("moments.csv", mom.str());
    PlotSpec p;
    p.title = "duality residual";
    p.x_label = "h";
    p.y_label = "residual";
    p.series.push_back({"residual", hs, rs, true});
    a.add("residual.svg", render_svg(p));
    return a;
}

// ---- rate ----

void apply_sweep_overrides(const View& v, EpsSweep& s) {
    s.eps_list = v.nums("eps_list", s.eps_list);
    s.t_list = v.nums("t_list", s.t_list);
    if (v.has("window_radius")) s.window = Window::ball(v.num("window_radius", 6.0));
    if (v.has("gradient_radius")) s.gradient_window = Window::ball(v.num("gradient_radius", 6.0));
    s.check_discretization = v.flag("check_discretization", s.check_discretization);
    s.jobs = jobs_of(v);
    s.validate();
}

ArtifactSet run_rate(const View& v, ojson& summary) {
    const std::string key = v.str("scenario", "homogeneous");
    Scenario sc = make_scenario(key);
    apply_sweep_overrides(v, sc.sweep);
    const auto t0 = std::chrono::steady_clock::now();
    const auto run = run_sweep(sc.sweep);
    const auto stab = stability_sweep(sc.sweep, run);
    const auto grad = gradient_decay_fit(sc.sweep, run);
    ArtifactSet a;
    ojson rep;
    rep["scenario"] = key;
    rep["model"] = sc.sweep.problem.model.key;
    rep["band"] = {std::isfinite(sc.band_lo) ? ojson(sc.band_lo) : ojson(nullptr),
                   std::isfinite(sc.band_hi) ? ojson(sc.band_hi) : ojson(nullptr)};
    rep["stability"] = report_json(stab);
    rep["slope"] = rep["stability"]["slope"];
    rep["gradient_decay"] = report_json(grad);
    a.add("errors_stability.csv", errors_csv(stab));
    a.add("errors_gradient.csv", errors_csv(grad));
    a.add("stability.svg", errors_svg(stab, key + ": stability", "sup |u_eps - u_eta|"));
    a.add("gradient.svg", errors_svg(grad, key + ": fast gradient", "sup |D_y u|"));
    if (sc.has_limit) {
        HbarTable table;
        const auto lp = build_limit(sc, sc.sweep.jobs, &table);
        const auto gap = limit_gap(sc.sweep, run, lp);
        rep["limit_gap"] = report_json(gap);
        rep["hbar_flagged"] = table.flagged_count();
        a.add("errors_limit.csv", errors_csv(gap));
        a.add("limit.svg", errors_svg(gap, key + ": limit gap", "sup |u_eps - u_bar|"));
    }
    if (std::isfinite(sc.band_lo)) {
        const double m = stab.margin(sc.band_lo, sc.band_hi);
        rep["band_margin"] = std::isfinite(m) ? ojson(m) : ojson(nullptr);
    }
    a.add("report.json", dump(rep));
    log_line("rate " + key + " finished in " + std::to_string(seconds_since(t0)) + " s");
    summary["scenario"] = key;
    summary["slope"] = rep["slope"];
    summary["band"] = rep["band"];
    summary["refused"] = stab.refused;
    summary["degenerate"] = stab.degenerate;
    return a;
}

// ---- isaacs ----

ArtifactSet run_isaacs(const View& v, ojson& summary) {
    Scenario up = make_scenario("isaacs-upper"), lo = make_scenario("isaacs-lower");
    apply_sweep_overrides(v, up.sweep);
    apply_sweep_overrides(v, lo.sweep);
    const auto ru = run_sweep(up.sweep);
    const auto rl = run_sweep(lo.sweep);
    const auto su = stability_sweep(up.sweep, ru), sl = stability_sweep(lo.sweep, rl);
    ArtifactSet a;
    // the max-min Hamiltonian is the smaller one, so its value is the larger
    CsvTable ord({"eps", "margin", "h"});
    double worst = std::numeric_limits<double>::infinity();
    const double h = up.sweep.grid->axis(1).h();
    for (std::size_t i = 0; i < ru.members.size(); ++i) {
        const double m = ordering_margin(rl.members[i], ru.members[i]);
        worst = std::min(worst, m);
        ord.row({up.sweep.eps_list[i], m, h});
    }
    // singleton minimizing player: both orders of optimisation agree
    ModelParams mp;
    mp.controls = 21;
    mp.singleton_a = true;
    CauchyProblem pu = up.sweep.problem, pl = lo.sweep.problem;
    pu.model = make_model("isaacs_upper", mp);
    pl.model = make_model("isaacs_lower", mp);
    pu.eps = pl.eps = 0.1;
    SolveOptions so;
    so.output_times = up.sweep.t_list;
    const auto a1 = solve_viscous(pu, up.sweep.grid, so), a2 = solve_viscous(pl, up.sweep.grid, so);
    double single = 0.0;
    for (std::size_t k = 0; k < a1.trajectory.size(); ++k) single = std::max(single, sup_diff(a1.trajectory[k], a2.trajectory[k]));
    ojson rep;
    rep["upper"] = report_json(su);
    rep["lower"] = report_json(sl);
    rep["ordering_margin"] = worst;
    rep["h"] = h;
    rep["singleton_gap"] = single;
    a.add("report.json", dump(rep));
    a.add("errors_upper.csv", errors_csv(su));
    a.add("errors_lower.csv", errors_csv(sl));
    a.add("ordering.csv", ord.str());
    a.add("upper.svg", errors_svg(su, "isaacs upper: stability", "sup |u_eps - u_eta|"));
    a.add("lower.svg", errors_svg(sl, "isaacs lower: stability", "sup |u_eps - u_eta|"));
    summary["upper_slope"] = report_json(su)["slope"];
    summary["lower_slope"] = report_json(sl)["slope"];
    summary["ordering_margin"] = worst;
    summary["singleton_gap"] = single;
    return a;
}

// ---- cell ----

Scenario cell_scenario(const std::string& key) {
    if (key != "pendulum") return make_scenario(key);
    Scenario sc;
    sc.key = key;
    sc.cell.model = make_model("pendulum");
    sc.cell.fast_grid = build_grid({}, {Axis{-M_PI, M_PI, 129}}, 1.0, 0.5);
    return sc;
}

// a registry model on its own fast grid, or a named scenario
Scenario cell_setup(const View& v) {
    if (!v.has("model")) return cell_scenario(v.str("scenario", "pendulum"));
    const std::string key = v.str("model", "");
    require(has_model(key), ErrorKind::Config, "unknown model key '" + key + "'");
    ModelParams mp;
    mp.gamma = v.num("model_params.gamma", mp.gamma);
    mp.controls = static_cast<std::size_t>(v.integer("model_params.controls", static_cast<long>(mp.controls)));
    mp.singleton_a = v.flag("model_params.singleton_a", false);
    Scenario sc;
    sc.key = key;
    sc.cell.model = make_model(key, mp);
    std::vector<Axis> fast(sc.cell.model.d2, key == "pendulum" ? Axis{-M_PI, M_PI, 129} : Axis{-4.0, 4.0, 81});
    if (const json* a = v.find("grid.fast")) fast = axes_of(*a);
    require(fast.size() == sc.cell.model.d2, ErrorKind::Config, "grid.fast does not match the model's fast dimension");
    for (const auto& ax : fast) ax.validate("grid.fast");
    sc.cell.fast_grid = build_grid({}, fast, 1.0, 0.5);
    return sc;
}

ArtifactSet run_cell(const View& v, ojson& summary) {
    Scenario sc = cell_setup(v);
    const std::string key = sc.key;
    if (v.has("delta_list")) sc.cell.deltas = v.nums("delta_list", {});
    const Axis xa = v.axis("cell.x_axis", Axis{-2.0, 2.0, 3});
    const Axis pa = v.axis("cell.p_axis", Axis{-0.5, 0.5, 11});
    xa.validate("cell.x_axis");
    pa.validate("cell.p_axis");
    const auto t = tabulate_hbar(xa, pa, sc.cell, jobs_of(v));
    CsvTable c({"x", "p", "hbar", "spread", "flagged"});
    for (std::size_t ix = 0; ix < xa.n; ++ix)
        for (std::size_t ip = 0; ip < pa.n; ++ip) {
            const std::size_t k = ix * pa.n + ip;
            c.row({xa.coord(ix), pa.coord(ip), t.values[k], t.spreads[k], t.flagged[k] ? 1.0 : 0.0});
        }
    PlotSpec p;
    p.title = key + ": effective Hamiltonian";
    p.x_label = "p";
    p.y_label = "H-bar";
    p.log_x = p.log_y = false;
    for (std::size_t ix = 0; ix < xa.n; ++ix) {
        PlotSeries s;
        s.label = "x=" + fmt_num(xa.coord(ix));
        for (std::size_t ip = 0; ip < pa.n; ++ip) {
            s.x.push_back(pa.coord(ip));
            s.y.push_back(t.at(ix, ip));
        }
        p.series.push_back(std::move(s));
    }
    std::ostringstream bin;
    write_table_binary(t, bin);
    ArtifactSet a;
    a.add("hbar.csv", c.str());
    a.add("hbar.svg", render_svg(p));
    a.add("table.bin", bin.str());
    summary["scenario"] = key;
    summary["entries"] = t.values.size();
    summary["flagged"] = t.flagged_count();
    summary["deltas"] = sc.cell.deltas;
    return a;
}

// ---- mfg ----

MFGOptions mfg_options(const View& v) {
    MFGOptions o;
    o.max_iters = static_cast<std::size_t>(v.integer("mfg.iters", 200));
    o.tol = v.num("mfg.tol", 1e-6);
    o.theta = v.num("mfg.theta", 0.5);
    o.jobs = jobs_of(v);
    require(o.max_iters >= 1, ErrorKind::Config, "mfg.iters must be positive");
    return o;
}

std::string diag_csv(const std::vector<FixedPointDiag>& d) {
    CsvTable c({"iteration", "du", "dmu", "theta"});
    for (const auto& e : d) c.row({double(e.iteration), e.du, e.dmu, e.theta});
    return c.str();
}

ArtifactSet run_mfg(const View& v, ojson& summary, int& code) {
    const std::string key = v.str("scenario", "weak-coupling");
    MFGProblem pb = make_mfg_scenario(key, v.num("eps", 0.1));
    pb.sigma = v.num("sigma", 0.0);
    const MFGOptions opts = mfg_options(v);
    pb.validate();
    ArtifactSet a;
    summary["scenario"] = key;
    if (v.has("eps_list") || v.flag("mfg.sweep", false)) {
        const auto eps = v.nums("eps_list", {0.4, 0.2, 0.1, 0.05, 0.025});
        const auto ts = v.nums("t_list", {0.25, 0.5, 1.0});
        const auto r = mfg_rate_study(pb, eps, ts, v.num("mfg.v_radius", 2.0), opts);
        ojson rep = report_json(r.report);
        rep["max_errors"] = r.max_errors;
        rep["max_fit"] = fit_json(r.max_fit);
        rep["slope"] = rep["max_fit"]["slope"];
        rep["w1_exploratory"] = r.w1;
        rep["converged"] = r.converged;
        rep["iterations"] = r.iterations;
        a.add("report.json", dump(rep));
        a.add("errors.csv", errors_csv(r.report));
        std::vector<std::string> head{"eps"};
        for (double t : ts) head.push_back("t=" + fmt_num(t));
        CsvTable wc(head);
        for (std::size_t i = 0; i < r.w1.size(); ++i) {
            std::vector<double> row{r.report.eps[i]};
            row.insert(row.end(), r.w1[i].begin(), r.w1[i].end());
            wc.row(row);
        }
        a.add("w1.csv", wc.str());
        a.add("rate.svg", errors_svg(r.report, key + ": u stability", "sup |u_eps - u_eta|"));
        for (std::size_t i = 0; i < r.members.size(); ++i)
            a.add("diagnostics_eps" + std::to_string(i) + ".csv", diag_csv(r.members[i].diagnostics));
        summary["slope"] = rep["slope"];
        summary["converged"] = r.converged;
        std::size_t ok = std::count(r.converged.begin(), r.converged.end(), true);
        if (ok < 3) code = 4;
        return a;
    }
    const auto res = solve_mfg_acc(pb, opts);
    const Grid& g = *pb.grid();
    a.add("diagnostics.csv", diag_csv(res.diagnostics));
    CsvTable u0({"x", "v", "u"});
    const ScalarField& f = res.state.u_at(0.0);
    Vec x{}, y{};
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        g.coords(i, x, y);
        u0.row({x[0], y[0], f[i]});
    }
    a.add("u_t0.csv", u0.str());
    CsvTable mt({"x", "v", "mu"});
    const auto& mu = res.state.mu.back();
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        g.coords(i, x, y);
        mt.row({x[0], y[0], mu.values[i]});
    }
    a.add("mu_T.csv", mt.str());
    double mass_err = 0.0, mn = 0.0;
    for (const auto& m : res.state.mu) {
        mass_err = std::max(mass_err, std::abs(m.mass() - 1.0));
        mn = std::min(mn, m.min());
    }
    summary["eps"] = pb.eps;
    summary["converged"] = res.converged;
    summary["iterations"] = res.diagnostics.size();
    summary["final_du"] = res.diagnostics.back().du;
    summary["final_dmu"] = res.diagnostics.back().dmu;
    summary["mass_error"] = mass_err;
    summary["min_density"] = mn;
    summary["value_bound"] = mfg_value_bound(pb, res.state);
    if (!res.converged) code = 4;
    return a;
}

// ---- validate ----

struct Probe {
    CauchyProblem problem;
    GridPtr grid;
    SolveOptions options;
    std::string label;
};

std::vector<Probe> probes_for(const View& v, const std::string& command) {
    std::vector<Probe> out;
    if (command == "solve") {
        auto s = solve_setup(v);
        out.push_back({s.problem, s.grid, s.options, "solve"});
    } else if (command == "rate" || command == "isaacs") {
        std::vector<std::string> keys =
            command == "rate" ? std::vector<std::string>{v.str("scenario", "homogeneous")}
                              : std::vector<std::string>{"isaacs-upper", "isaacs-lower"};
        for (const auto& k : keys) {
            Scenario sc = make_scenario(k);
            apply_sweep_overrides(v, sc.sweep);
            Probe p{sc.sweep.problem, sc.sweep.grid, {}, k};
            p.problem.eps = *std::min_element(sc.sweep.eps_list.begin(), sc.sweep.eps_list.end());
            p.options.output_times = sc.sweep.t_list;
            out.push_back(std::move(p));
        }
    } else if (command == "duality") {
        std::vector<long> ns{65, 129, 257};
        if (const json* r = v.find("refinements")) ns = r->get<std::vector<long>>();
        require(!ns.empty() && ns.back() >= 9, ErrorKind::Config, "refinement grids need at least 9 nodes");
        DualityDemo d;
        d.eps = v.num("eps", d.eps);
        Probe p;
        p.problem = duality_problem(d, v.num("sigma", 0.01));
        p.grid = duality_grid(d, static_cast<std::size_t>(ns.back()));
        p.options.store_every = 1;
        p.options.memory_cap_mb = 1024.0;
        p.label = "duality finest grid";
        out.push_back(std::move(p));
    } else if (command == "mfg") {
        MFGProblem pb = make_mfg_scenario(v.str("scenario", "weak-coupling"), v.num("eps", 0.1));
        mfg_options(v);
        Probe p;
        p.problem.model = acceleration_hamiltonian();
        p.problem.eps = pb.eps;
        p.problem.sigma = v.num("sigma", 0.0);
        p.problem.u0.key = "terminal";
        const auto gT = pb.g;
        auto xa = std::make_shared<Axis>(pb.grid()->axis(0));
        auto rho = std::make_shared<std::vector<double>>(mollified_density(pb.mu0, pb.mollifier_width));
        p.problem.u0.eval = [gT, xa, rho](const Vec& x, const Vec&) { return gT.eval(x[0], MeasureView{xa.get(), rho.get()}); };
        p.grid = pb.grid();
        p.label = "mfg backward solve";
        out.push_back(std::move(p));
    } else if (command == "cell") {
        cell_setup(v);
        v.axis("cell.x_axis", Axis{-2.0, 2.0, 3}).validate("cell.x_axis");
        v.axis("cell.p_axis", Axis{-0.5, 0.5, 11}).validate("cell.p_axis");
    } else {
        throw Error(ErrorKind::Config, "unknown command '" + command + "'");
    }
    return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    c.tree_ = parse_text(text);
    if (c.tree_.is_null()) c.tree_ = json::object();
    require(c.tree_.is_object(), ErrorKind::Config, "config root must be a mapping");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), ErrorKind::Config, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    require(!key.empty(), ErrorKind::Config, "empty config key");
    json val;
    try {
        val = from_yaml(YAML::Load(value));
    } catch (const YAML::Exception& e) {
        throw Error(ErrorKind::Config, "cannot parse value for '" + key + "': " + e.what());
    }
    json* cur = &tree_;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        require(!part.empty(), ErrorKind::Config, "malformed config key '" + key + "'");
        if (dot == std::string::npos) {
            (*cur)[part] = val;
            return;
        }
        json& next = (*cur)[part];
        if (!next.is_object()) next = json::object();
        cur = &next;
        start = dot + 1;
    }
}

void ExperimentConfig::check_keys() const { check_against(tree_, schema(), ""); }

std::string ExperimentConfig::canonical() const { return tree_.dump(); }

SolveOutput solve_from_config(const ExperimentConfig& cfg) {
    cfg.check_keys();
    const View v{cfg.tree()};
    SolveSetup s = solve_setup(v);
    return solve_viscous(s.problem, s.grid, s.options);
}

std::vector<std::string> experiment_commands() { return {"solve", "duality", "cell", "rate", "isaacs", "mfg", "validate"}; }

int exit_code_for(int kind) {
    switch (static_cast<ErrorKind>(kind)) {
    case ErrorKind::Numerical: return 3;
    case ErrorKind::NonConvergence: return 4;
    default: return 2;
    }
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& command, const std::string& out_dir) {
    cfg.check_keys();
    const View v{cfg.tree()};
    const auto cmds = experiment_commands();
    require(std::find(cmds.begin(), cmds.end(), command) != cmds.end(), ErrorKind::Config,
            "unknown command '" + command + "'");
    require(!out_dir.empty(), ErrorKind::Config, "empty output directory");
    RunOutcome r;
    ojson summary;
    summary["command"] = command;
    ArtifactSet a;
    if (command == "validate") {
        const std::string target = v.str("command", "solve");
        require(target != "validate", ErrorKind::Config, "validate needs a target command");
        const std::string report = validate_experiment(cfg, target);
        a.add("validate.json", report);
        summary["report"] = ojson::parse(report);
    } else {
        // every key is resolved before any solve, so bad configs leave no files
        probes_for(v, command);
        const auto t0 = std::chrono::steady_clock::now();
        if (command == "solve") a = run_solve(v, summary);
        else if (command == "duality") a = run_duality(v, summary);
        else if (command == "rate") a = run_rate(v, summary);
        else if (command == "isaacs") a = run_isaacs(v, summary);
        else if (command == "cell") a = run_cell(v, summary);
        else if (command == "mfg") a = run_mfg(v, summary, r.code);
        log_line(command + " done in " + std::to_string(seconds_since(t0)) + " s");
    }
    summary["seed"] = v.integer("seed", 0);
    summary["exit_code"] = r.code;
    r.summary = dump(summary);
    a.add("summary.json", r.summary);
    a.add("config.json", ojson::parse(cfg.canonical()).dump(2) + "\n");
    a.commit(out_dir, cfg.canonical(), command);
    r.files = a.names();
    r.files.push_back("manifest.json");
    r.message = r.code == 0 ? "ok" : "fixed point did not converge";
    return r;
}

std::string validate_experiment(const ExperimentConfig& cfg, const std::string& command) {
    ojson rep;
    rep["command"] = command;
    ojson errors = ojson::array(), warnings = ojson::array(), checks = ojson::array();
    try {
        cfg.check_keys();
        const View v{cfg.tree()};
        const auto probes = probes_for(v, command);
        if (probes.empty()) warnings.push_back("no explicit time stepping for '" + command + "'; no CFL pre-check");
        for (const auto& p : probes) {
            SolveOptions o = p.options;
            o.dry_run = true;
            const auto out = solve_viscous(p.problem, p.grid, o);
            const Grid& g = *p.grid;
            const double rate = out.diagnostics.initial_rate;
            ojson c;
            c["label"] = p.label;
            c["rate"] = rate;
            c["binding"] = out.diagnostics.binding;
            c["cfl_safety"] = g.cfl_safety;
            c["adaptive_dt"] = rate > 0.0 ? g.cfl_safety / rate : g.t_final;
            double steps = rate > 0.0 ? g.t_final * rate / g.cfl_safety : 1.0;
            if (g.dt > 0.0) {
                const double number = g.dt * rate;
                c["dt"] = g.dt;
                c["cfl_number"] = number;
                steps = g.t_final / g.dt;
                if (number > g.cfl_safety * (1.0 + 1e-9))
                    errors.push_back("CFL violation in " + p.label + ": dt * rate = " + fmt_num(number) + " exceeds " +
                                     fmt_num(g.cfl_safety) + " (binding constraint: " + out.diagnostics.binding + ")");
            }
            const double N = static_cast<double>(g.node_count());
            double slices = static_cast<double>(o.output_times.size() + 2);
            if (o.store_every > 0) slices += std::ceil(steps / static_cast<double>(o.store_every));
            const double bytes = slices * N * 8.0;
            const double cap = o.memory_cap_mb * 1024.0 * 1024.0;
            ojson mem;
            mem["nodes"] = g.node_count();
            mem["estimated_steps"] = std::ceil(steps);
            mem["slices"] = slices;
            mem["bytes"] = bytes;
            mem["cap_bytes"] = cap;
            const double per_slice = N * 8.0;
            const double fixed = double(o.output_times.size() + 2);
            if (bytes > cap && std::floor(cap / per_slice) <= fixed) {
                mem["minimum_bytes"] = fixed * per_slice;
                warnings.push_back("memory cap of " + fmt_num(o.memory_cap_mb) + " MB for " + p.label +
                                   " is below the output slices alone (" + fmt_num(fixed * per_slice / 1048576.0) +
                                   " MB); no stride helps");
            } else if (bytes > cap) {
                const double room = std::floor(cap / per_slice) - fixed;
                const auto stride = static_cast<std::size_t>(std::ceil(steps / room));
                mem["suggested_stride"] = stride;
                warnings.push_back("memory estimate " + fmt_num(bytes / 1048576.0) + " MB for " + p.label +
                                   " exceeds the cap of " + fmt_num(o.memory_cap_mb) +
                                   " MB; suggested store_every >= " + std::to_string(stride));
            }
            c["memory"] = mem;
            checks.push_back(c);
        }
    } catch (const Error& e) {
        errors.push_back(e.what());
    }
    rep["ok"] = errors.empty();
    rep["errors"] = errors;
    rep["warnings"] = warnings;
    rep["checks"] = checks;
    return dump(rep);
}

}  // namespace sphj
