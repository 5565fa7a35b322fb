#include "sphj/rate_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sphj/error.hpp"
#include "sphj/parallel.hpp"

namespace sphj {

FitResult fit_order(const std::vector<double>& a, const std::vector<double>& e) {
    require_arg(a.size() == e.size(), "fit_order: size mismatch");
    require_arg(a.size() >= 3, "fit_order: need at least 3 points");
    const std::size_t n = a.size();
    std::vector<double> la(n), le(n);
    for (std::size_t i = 0; i < n; ++i) {
        require_arg(a[i] > 0.0 && e[i] > 0.0 && std::isfinite(a[i]) && std::isfinite(e[i]),
                    "fit_order: entries must be positive and finite");
        la[i] = std::log(a[i]);
        le[i] = std::log(e[i]);
    }
    double ma = 0.0, me = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += la[i];
        me += le[i];
    }
    ma /= double(n);
    me /= double(n);
    double saa = 0.0, sae = 0.0, see = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (la[i] - ma) * (la[i] - ma);
        sae += (la[i] - ma) * (le[i] - me);
        see += (le[i] - me) * (le[i] - me);
    }
    require_arg(saa > 0.0, "fit_order: abscissae coincide");
    FitResult f;
    f.points = n;
    f.slope = sae / saa;
    f.intercept = me - f.slope * ma;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = le[i] - (f.intercept + f.slope * la[i]);
        ssr += d * d;
    }
    f.r2 = see > 0.0 ? 1.0 - ssr / see : 1.0;
    return f;
}

void EpsSweep::validate() const {
    require(static_cast<bool>(grid), ErrorKind::Config, "sweep without a grid");
    require(eps_list.size() >= 3, ErrorKind::Config, "eps list needs at least 3 entries");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        require(eps_list[i] > 0.0 && std::isfinite(eps_list[i]), ErrorKind::Config, "eps values must be positive");
        if (i) require(eps_list[i] < eps_list[i - 1], ErrorKind::Config, "eps list must be strictly decreasing");
    }
    require(!t_list.empty(), ErrorKind::Config, "need at least one probe time");
    for (double t : t_list)
        require(t > 0.0 && t <= grid->t_final * (1 + 1e-12), ErrorKind::Config, "probe times must lie in (0, T]");
    window.validate(*grid);
    gradient_window.validate(*grid);
}

namespace {

// fast axes with twice the spacing; slow axes untouched
GridPtr coarsen_fast(const Grid& g) {
    std::vector<Axis> fast;
    for (const Axis& a : g.fast_axes()) {
        require((a.n - 1) % 2 == 0, ErrorKind::Config, "fast axes need an even number of cells for the coarse check");
        fast.push_back(Axis{a.lo, a.hi, (a.n - 1) / 2 + 1});
    }
    return build_grid(g.slow_axes(), fast, g.t_final, g.cfl_safety);
}

std::size_t fine_index(const Grid& coarse, const Grid& fine, std::size_t node) {
    std::size_t out = 0;
    for (std::size_t k = 0; k < coarse.dims(); ++k) {
        const std::size_t j = coarse.index_along(node, k);
        out += (coarse.is_fast(k) ? 2 * j : j) * fine.stride(k);
    }
    return out;
}

const ScalarField& slice_at(const SolveOutput& out, double t) {
    const ScalarField& f = out.nearest(t);
    require(std::abs(f.t - t) <= 1e-9 * std::max(1.0, t), ErrorKind::InvalidArgument,
            "no stored slice at probe time " + std::to_string(t));
    return f;
}

SolveOptions probe_options(const std::vector<double>& t_list) {
    SolveOptions o;
    o.output_times = t_list;
    return o;
}

// marks degenerate columns, records notes, returns true if at least one column is usable
bool classify_columns(RateReport& r) {
    const std::size_t nt = r.t_list.size();
    r.degenerate_columns.assign(nt, false);
    std::size_t usable = 0;
    for (std::size_t j = 0; j < nt; ++j) {
        bool all_small = true;
        for (const auto& row : r.errors) all_small = all_small && row[j] < kDegenerateFloor;
        r.degenerate_columns[j] = all_small;
        if (all_small)
            r.notes.push_back("column t=" + std::to_string(r.t_list[j]) + " below the degenerate floor, excluded");
        else
            ++usable;
    }
    r.degenerate = usable == 0;
    return usable > 0;
}

FitResult fit_column(const RateReport& r, const std::vector<double>& abscissa, std::size_t j) {
    std::vector<double> a, e;
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
        if (r.errors[i][j] < kDegenerateFloor) continue;
        a.push_back(abscissa[i]);
        e.push_back(r.errors[i][j]);
    }
    require(a.size() >= 3, ErrorKind::Numerical,
            "fewer than 3 usable pairs at t=" + std::to_string(r.t_list[j]));
    return fit_order(a, e);
}

void apply_discretization(RateReport& r, const EpsSweep& s, const SweepRun& run, const Window& w) {
    if (!s.check_discretization || r.degenerate) return;
    const Grid& fine = *s.grid;
    auto coarse = coarsen_fast(fine);
    CauchyProblem pb = s.problem;
    pb.eps = s.eps_list.back();
    const SolveOutput c = solve_viscous(pb, coarse, probe_options(s.t_list));
    const SolveOutput& f = run.members.back();
    const auto nodes = window_nodes(*coarse, w);
    double est = 0.0;
    for (double t : s.t_list) {
        const ScalarField& a = slice_at(c, t);
        const ScalarField& b = slice_at(f, t);
        for (std::size_t i : nodes) est = std::max(est, std::abs(a[i] - b[fine_index(*coarse, fine, i)]));
    }
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < r.t_list.size(); ++j) {
        if (r.degenerate_columns[j]) continue;
        for (const auto& row : r.errors)
            if (row[j] >= kDegenerateFloor) gap = std::min(gap, row[j]);
    }
    r.discretization.performed = true;
    r.discretization.estimate = est;
    r.discretization.smallest_gap = gap;
    r.discretization.ok = est <= gap / 3.0;
    if (!r.discretization.ok) {
        r.refused = true;
        r.notes.push_back("discretization estimate " + std::to_string(est) + " exceeds a third of the smallest gap " +
                          std::to_string(gap) + "; fits withheld");
    }
}

}  // namespace

SweepRun run_sweep(const EpsSweep& s) {
    s.validate();
    SweepRun run;
    run.members.resize(s.eps_list.size());
    run.seconds.assign(s.eps_list.size(), 0.0);
    const SolveOptions opts = probe_options(s.t_list);
    parallel_for(s.eps_list.size(), s.jobs, [&](std::size_t i) {
        CauchyProblem pb = s.problem;
        pb.eps = s.eps_list[i];
        const auto t0 = std::chrono::steady_clock::now();
        run.members[i] = solve_viscous(pb, s.grid, opts);
        run.seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    return run;
}

double RateReport::margin(double lo, double hi) const {
    double worst = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& f : fits) {
        if (!f.ok()) continue;
        any = true;
        worst = std::min(worst, std::min(f.slope - lo, hi - f.slope));
    }
    return any ? worst : -std::numeric_limits<double>::infinity();
}

RateReport stability_sweep(const EpsSweep& s, const SweepRun& run) {
    s.validate();
    require(run.members.size() == s.eps_list.size(), ErrorKind::InvalidArgument, "sweep run does not match the sweep");
    RateReport r;
    r.kind = "stability";
    r.t_list = s.t_list;
    r.predicted = s.problem.model.predicted_rate;
    const auto nodes = window_nodes(*s.grid, s.window);
    for (std::size_t i = 0; i + 1 < s.eps_list.size(); ++i) {
        r.eps.push_back(s.eps_list[i]);
        std::vector<double> row;
        for (double t : s.t_list) {
            const ScalarField& a = slice_at(run.members[i], t);
            const ScalarField& b = slice_at(run.members[i + 1], t);
            double e = 0.0;
            for (std::size_t n : nodes) e = std::max(e, std::abs(a[n] - b[n]));
            row.push_back(e);
        }
        r.errors.push_back(row);
    }
    if (!classify_columns(r)) return r;
    apply_discretization(r, s, run, s.window);
    if (r.refused) return r;
    const double k = r.predicted;
    std::vector<double> dk;
    for (std::size_t i = 0; i + 1 < s.eps_list.size(); ++i)
        dk.push_back(std::pow(s.eps_list[i], k) - std::pow(s.eps_list[i + 1], k));
    for (std::size_t j = 0; j < r.t_list.size(); ++j) {
        if (r.degenerate_columns[j]) {
            r.fits.emplace_back();
            r.kappa_fits.emplace_back();
            continue;
        }
        r.fits.push_back(fit_column(r, r.eps, j));
        r.kappa_fits.push_back(fit_column(r, dk, j));
    }
    return r;
}

RateReport gradient_decay_fit(const EpsSweep& s, const SweepRun& run) {
    s.validate();
    require(run.members.size() == s.eps_list.size(), ErrorKind::InvalidArgument, "sweep run does not match the sweep");
    RateReport r;
    r.kind = "gradient_decay";
    r.t_list = s.t_list;
    r.eps = s.eps_list;
    r.predicted = s.problem.model.predicted_rate;
    for (std::size_t i = 0; i < s.eps_list.size(); ++i) {
        std::vector<double> row;
        for (double t : s.t_list) row.push_back(fast_gradient_norm(run.members[i], t, s.gradient_window));
        r.errors.push_back(row);
    }
    if (!classify_columns(r)) return r;
    for (std::size_t j = 0; j < r.t_list.size(); ++j)
        r.fits.push_back(r.degenerate_columns[j] ? FitResult{} : fit_column(r, r.eps, j));
    if (r.t_list.size() >= 3) {
        for (std::size_t i = 0; i < r.eps.size(); ++i) {
            std::vector<double> e = r.errors[i];
            const bool usable = std::all_of(e.begin(), e.end(), [](double v) { return v >= kDegenerateFloor; });
            r.time_fits.push_back(usable ? fit_order(r.t_list, e) : FitResult{});
        }
    } else {
        r.notes.push_back("fewer than 3 probe times, no time fits");
    }
    return r;
}

GridPtr slow_grid_of(const Grid& g) {
    require(g.d1() > 0, ErrorKind::Config, "grid has no slow axes");
    auto s = std::make_shared<Grid>(g.slow_axes(), std::vector<Axis>{}, g.t_final, g.cfl_safety);
    s->dt = g.dt;
    return s;
}

InitialDatum limit_datum(const InitialDatum& u0, const Grid& g) {
    std::vector<Vec> ys;
    std::size_t count = 1;
    for (const Axis& a : g.fast_axes()) count *= a.n;
    for (std::size_t c = 0; c < count; ++c) {
        Vec y{};
        std::size_t rem = c;
        for (std::size_t k = g.d2(); k-- > 0;) {
            const Axis& a = g.fast_axes()[k];
            y[k] = a.coord(rem % a.n);
            rem /= a.n;
        }
        ys.push_back(y);
    }
    InitialDatum d;
    d.key = "min_fast(" + u0.key + ")";
    d.eval = [u0, ys](const Vec& x, const Vec&) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& y : ys) best = std::min(best, u0.eval(x, y));
        return best;
    };
    return d;
}

SolveOutput solve_limit(const LimitProblem& lp, const InitialDatum& u0, const Grid& g, const std::vector<double>& t_list) {
    require(lp.model.d2 == 0 && lp.model.d1 == g.d1(), ErrorKind::Config, "limit model must be slow-only");
    CauchyProblem pb;
    pb.model = lp.model;
    pb.eps = 1.0;
    pb.u0 = limit_datum(u0, g);
    return solve_viscous(pb, lp.slow_grid ? lp.slow_grid : slow_grid_of(g), probe_options(t_list));
}

RateReport limit_gap(const EpsSweep& s, const SweepRun& run, const LimitProblem& lp) {
    s.validate();
    require(run.members.size() == s.eps_list.size(), ErrorKind::InvalidArgument, "sweep run does not match the sweep");
    require(static_cast<bool>(lp.model.eval), ErrorKind::Config, "missing H-bar");
    const Grid& g = *s.grid;
    const SolveOutput bar = solve_limit(lp, s.problem.u0, g, s.t_list);
    require(bar.grid->slow_axes() == g.slow_axes(), ErrorKind::Config, "limit grid must share the slow axes");
    RateReport r;
    r.kind = "limit_gap";
    r.t_list = s.t_list;
    r.eps = s.eps_list;
    r.predicted = s.problem.model.predicted_rate;
    const auto nodes = window_nodes(g, s.window);
    std::size_t fast_count = 1;
    for (const Axis& a : g.fast_axes()) fast_count *= a.n;
    for (std::size_t i = 0; i < s.eps_list.size(); ++i) {
        std::vector<double> row;
        for (double t : s.t_list) {
            const ScalarField& a = slice_at(run.members[i], t);
            const ScalarField& b = slice_at(bar, t);
            double e = 0.0;
            for (std::size_t n : nodes) e = std::max(e, std::abs(a[n] - b[n / fast_count]));
            row.push_back(e);
        }
        r.errors.push_back(row);
    }
    if (!classify_columns(r)) return r;
    apply_discretization(r, s, run, s.window);
    if (r.refused) return r;
    for (std::size_t j = 0; j < r.t_list.size(); ++j)
        r.fits.push_back(r.degenerate_columns[j] ? FitResult{} : fit_column(r, r.eps, j));
    return r;
}

double ordering_margin(const SolveOutput& hi, const SolveOutput& lo) {
    require_arg(hi.grid->same_space(*lo.grid), "ordering needs one grid");
    require_arg(hi.trajectory.size() == lo.trajectory.size(), "ordering needs matching slices");
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < hi.trajectory.size(); ++k) {
        require_arg(std::abs(hi.trajectory[k].t - lo.trajectory[k].t) < 1e-9, "slice times differ");
        for (std::size_t i = 0; i < hi.trajectory[k].size(); ++i)
            m = std::min(m, hi.trajectory[k][i] - lo.trajectory[k][i]);
    }
    return m;
}

std::vector<std::string> scenario_keys() {
    return {"homogeneous", "gamma", "fully-nonlinear", "isaacs-upper", "isaacs-lower"};
}

Scenario make_scenario(const std::string& key) {
    Scenario sc;
    sc.key = key;
    DatumParams dp;
    EpsSweep& s = sc.sweep;
    double half = 24.0, hy = 0.025, grad_r = 18.0;
    std::size_t slow_n = 9;
    if (key == "homogeneous") {
        s.problem.model = make_quadratic(slow_kinetic());
        sc.band_lo = 0.4;
        sc.band_hi = 0.6;
        sc.has_limit = true;
    } else if (key == "gamma") {
        s.problem.model = make_gamma_power(slow_kinetic(), 3.0);
        sc.band_lo = s.problem.model.predicted_rate - 0.1;
        sc.band_hi = s.problem.model.predicted_rate + 0.1;
    } else if (key == "fully-nonlinear") {
        s.problem.model = fully_nonlinear_demo();
        sc.band_lo = 0.85;
        sc.band_hi = 1.15;
        sc.has_limit = true;
    } else if (key == "isaacs-upper" || key == "isaacs-lower") {
        ModelParams mp;
        mp.controls = 21;
        s.problem.model = make_model(key == "isaacs-upper" ? "isaacs_upper" : "isaacs_lower", mp);
        half = 12.0;
        hy = 0.1;
        grad_r = 6.0;
        dp.width = 1.0;
    } else {
        throw Error(ErrorKind::Config, "unknown scenario '" + key + "'");
    }
    s.problem.u0 = make_datum("bump_wall", dp);
    const auto ny = static_cast<std::size_t>(std::lround(2.0 * half / hy)) + 1;
    s.grid = build_grid({Axis{-2.0, 2.0, slow_n}}, {Axis{-half, half, ny}}, 1.0, 0.5);
    s.window = Window::ball(6.0);
    s.gradient_window = Window::ball(grad_r);
    sc.cell.model = s.problem.model;
    sc.cell.fast_grid = build_grid({}, {Axis{-4.0, 4.0, 81}}, 1.0, 0.5);
    return sc;
}

LimitProblem build_limit(const Scenario& sc, std::size_t jobs, HbarTable* table_out) {
    require(sc.has_limit, ErrorKind::Config, "scenario '" + sc.key + "' has no homogenized limit");
    const Grid& g = *sc.sweep.grid;
    require(g.d1() == 1, ErrorKind::Config, "tabulated limits need one slow axis");
    HbarTable t = tabulate_hbar(g.slow_axes()[0], sc.pbar_axis, sc.cell, jobs);
    LimitProblem lp;
    lp.model = limit_model(t);
    lp.slow_grid = slow_grid_of(g);
    if (table_out) *table_out = std::move(t);
    return lp;
}

}  // namespace sphj
