#include "sphj/mfg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include "sphj/error.hpp"
#include "sphj/parallel.hpp"

namespace sphj {

void MFGProblem::validate() const {
    require(static_cast<bool>(mu0.grid), ErrorKind::Config, "MFG problem without an initial measure");
    const Grid& g = *mu0.grid;
    require(g.d1() == 1 && g.d2() == 1, ErrorKind::Config, "MFG grids are (x, v) with one axis each");
    require(static_cast<bool>(L0.eval), ErrorKind::Config, "missing running cost L0");
    require(static_cast<bool>(this->g.eval), ErrorKind::Config, "missing terminal cost g");
    require(eps > 0.0 && std::isfinite(eps), ErrorKind::Config, "eps must be positive");
    require(sigma >= 0.0, ErrorKind::Config, "sigma must be nonnegative");
    require(time_slices >= 2, ErrorKind::Config, "need at least 2 coupling slices");
    require(mollifier_width >= 0.0, ErrorKind::Config, "mollifier width must be nonnegative");
    require(mu0.min() >= -1e-12, ErrorKind::Config, "initial measure has negative values");
    require(std::abs(mu0.mass() - 1.0) <= 1e-8, ErrorKind::Config, "initial measure must have unit mass");
}

const ScalarField& MFGState::u_at(double t) const {
    const ScalarField& f = u.nearest(t);
    require(std::abs(f.t - t) < 1e-9, ErrorKind::InvalidArgument, "no value slice at t = " + std::to_string(t));
    return f;
}

HamiltonianModel acceleration_hamiltonian() {
    HamiltonianModel m;
    m.key = "mfg_acceleration";
    m.d1 = 1;
    m.d2 = 1;
    m.gamma = 2.0;
    m.c_h = 1.0;
    m.fast_exponent = 0.5;
    m.predicted_rate = 0.5;
    // every partial depends on its own momentum component only, so two corners bracket the speeds
    m.separable = true;
    m.eval = [](const Vec&, const Vec& v, const Vec& p, const Vec& q) { return 0.5 * q[0] * q[0] - p[0] * v[0]; };
    m.grad_p = [](const Vec&, const Vec& v, const Vec&, const Vec&) { return Vec{-v[0], 0, 0}; };
    m.grad_q = [](const Vec&, const Vec&, const Vec&, const Vec& q) { return Vec{q[0], 0, 0}; };
    m.grad_y = [](const Vec&, const Vec&, const Vec& p, const Vec&) { return Vec{-p[0], 0, 0}; };
    m.jet = [](const Vec&, const Vec& v, const Vec& p, const Vec& q) {
        Jet j;
        j.value = 0.5 * q[0] * q[0] - p[0] * v[0];
        j.dp[0] = -v[0];
        j.dq[0] = q[0];
        return j;
    };
    return m;
}

namespace {

// masses per x node -> smoothed density per unit x
std::vector<double> mollify(const std::vector<double>& mass, const Axis& ax, double width) {
    const double h = ax.h();
    if (width <= 0.0) width = 2.0 * h;
    const auto reach = static_cast<long>(std::floor(width / h + 1e-12));
    std::vector<double> kern;
    double z = 0.0;
    for (long k = -reach; k <= reach; ++k) {
        const double w = std::max(0.0, 1.0 - std::abs(double(k) * h) / width);
        kern.push_back(w);
        z += w * h;
    }
    const long n = static_cast<long>(ax.n);
    std::vector<double> out(ax.n, 0.0);
    for (long i = 0; i < n; ++i)
        for (long k = -reach; k <= reach; ++k) {
            const long j = i + k;
            if (j >= 0 && j < n) out[i] += mass[j] * kern[k + reach] / z;
        }
    return out;
}

std::vector<double> x_masses(const DensityField& mu) {
    const Grid& g = *mu.grid;
    if (g.dims() == 1) {
        std::vector<double> m(mu.values.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = mu.values[i] * g.cell_volume();
        return m;
    }
    return marginal(mu, 0);
}

struct CouplingTimes {
    double T = 1.0;
    double step = 0.0;
    std::size_t n = 0;
    std::vector<double> t;

    CouplingTimes(double horizon, std::size_t slices) : T(horizon), step(horizon / double(slices)), n(slices) {
        for (std::size_t j = 0; j <= slices; ++j) t.push_back(step * double(j));
        t.back() = T;
    }
    // coupling slice used on [t_j, t_{j+1})
    std::size_t slice(double time) const {
        const double s = std::floor(time / step + 1e-9);
        return static_cast<std::size_t>(std::clamp(s, 0.0, double(n)));
    }
};

double max_proxy(const std::vector<DensityField>& a, const std::vector<DensityField>& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, marginal_w1(a[j], b[j]).proxy);
    return d;
}

double sup_change(const SolveOutput& a, const SolveOutput& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.trajectory.size(); ++k) d = std::max(d, sup_diff(a.trajectory[k], b.trajectory[k]));
    return d;
}

void mix(std::vector<DensityField>& cur, const std::vector<DensityField>& push, double theta) {
    for (std::size_t j = 0; j < cur.size(); ++j)
        for (std::size_t i = 0; i < cur[j].values.size(); ++i)
            cur[j].values[i] = (1.0 - theta) * cur[j].values[i] + theta * push[j].values[i];
}

void advance(const Grid& g, std::vector<double>& rho, const FaceVelocity& vel, double sigma, double span,
             std::vector<double>& scratch) {
    const double rate = transport_rate(g, vel, sigma);
    const long sub = std::max(1L, static_cast<long>(std::ceil(span * rate / g.cfl_safety)));
    const double dt = span / double(sub);
    for (long s = 0; s < sub; ++s) transport_step(g, rho, vel, sigma, dt, scratch);
    for (double& v : rho) {
        require(std::isfinite(v), ErrorKind::Numerical, "non-finite density in the forward solve");
        if (v < 0.0 && v > -1e-12) v = 0.0;
    }
}

// damped Picard driver shared by both systems; solve_u(measures) -> value run, push(value run) -> measures
template <class SolveU, class Push, class Out>
std::vector<FixedPointDiag> picard(std::vector<DensityField>& mu, const MFGOptions& opts, SolveU solve_u, Push push,
                                   Out& u_out, bool& converged) {
    require(opts.theta > 0.0 && opts.theta <= 1.0, ErrorKind::Config, "damping must lie in (0,1]");
    require(opts.tol > 0.0, ErrorKind::Config, "tolerance must be positive");
    std::vector<FixedPointDiag> diag;
    converged = false;
    double theta = opts.theta;
    double last_dmu = std::numeric_limits<double>::infinity();
    bool have_u = false;
    for (std::size_t k = 0; k < opts.max_iters; ++k) {
        auto u = solve_u(mu);
        const auto pushed = push(u);
        FixedPointDiag d;
        d.iteration = k;
        d.du = have_u ? sup_change(u, u_out) : std::numeric_limits<double>::infinity();
        d.dmu = max_proxy(pushed, mu);
        // the first pass replaces the initial guess outright
        if (k == 0) {
            d.theta = 1.0;
        } else {
            if (d.dmu > last_dmu) theta = std::max(theta * 0.5, 1.0 / 64.0);
            d.theta = theta;
        }
        last_dmu = d.dmu;
        u_out = std::move(u);
        have_u = true;
        diag.push_back(d);
        if (d.du <= opts.tol && d.dmu <= opts.tol) {
            converged = true;
            break;
        }
        mix(mu, pushed, d.theta);
    }
    return diag;
}

// argmax over the velocity nodes sharpened by a parabola through its neighbours, so the velocity moves continuously with p
struct BestResponse {
    double v = 0.0;
    double value = 0.0;
    std::size_t index = 0;
};

BestResponse best_velocity(const LagrangianModel& L, const ControlSet& vset, const Vec& x, double p, const MeasureView& mu) {
    const auto lv = legendre_h0(L, vset, x, Vec{p, 0, 0}, mu);
    BestResponse b{lv.maximizer[0], lv.value, lv.index};
    const std::size_t k = lv.index, n = vset.points.size();
    if (k == 0 || k + 1 == n) return b;
    auto f = [&](std::size_t j) { return p * vset.points[j][0] - L.eval(x, vset.points[j], mu); };
    const double fm = f(k - 1), fp = f(k + 1);
    const double curv = fm - 2.0 * lv.value + fp;
    if (!(curv < 0.0)) return b;
    const double h = vset.points[k + 1][0] - vset.points[k][0];
    const double v = b.v + h * std::clamp(0.5 * (fm - fp) / curv, -0.5, 0.5);
    const double val = p * v - L.eval(x, Vec{v, 0, 0}, mu);
    if (val >= b.value) {
        b.v = v;
        b.value = val;
    }
    return b;
}

}  // namespace

std::vector<double> mollified_density(const DensityField& mu, double width) {
    return mollify(x_masses(mu), mu.grid->axis(0), width);
}

MFGResult solve_mfg_acc(const MFGProblem& pb, const MFGOptions& opts) {
    pb.validate();
    const GridPtr grid = pb.grid();
    const Grid& g = *grid;
    const Axis& xa = g.axis(0);
    const std::size_t N = g.node_count();
    const CouplingTimes ct(g.t_final, pb.time_slices);
    std::vector<Vec> xs(N), vs(N);
    for (std::size_t i = 0; i < N; ++i) g.coords(i, xs[i], vs[i]);

    auto solve_u = [&](const std::vector<DensityField>& mu) {
        std::vector<std::vector<double>> rho(mu.size());
        for (std::size_t j = 0; j < mu.size(); ++j) rho[j] = mollified_density(mu[j], pb.mollifier_width);
        auto views = std::make_shared<std::vector<std::vector<double>>>(std::move(rho));
        CauchyProblem cp;
        cp.model = acceleration_hamiltonian();
        cp.eps = pb.eps;
        cp.sigma = pb.sigma;
        cp.direction = Direction::Backward;
        const MeasureView mT{&xa, &views->back()};
        const TerminalCost gT = pb.g;
        cp.u0.key = "terminal";
        cp.u0.eval = [gT, mT, views](const Vec& x, const Vec&) { return gT.eval(x[0], mT); };
        const LagrangianModel L = pb.L0;
        cp.running_cost = [&, views, L](double tau, std::vector<double>& extra) {
            const MeasureView mv{&xa, &(*views)[ct.slice(ct.T - tau)]};
            for (std::size_t i = 0; i < N; ++i) extra[i] = -L.eval(xs[i], vs[i], mv);
        };
        SolveOptions so;
        so.output_times = ct.t;
        return solve_viscous(cp, grid, so);
    };

    auto push = [&](const SolveOutput& u) {
        std::vector<DensityField> out;
        std::vector<double> rho = pb.mu0.values, scratch(N);
        out.push_back(pb.mu0);
        out.back().t = 0.0;
        const std::size_t sv = g.stride(1);
        const double hv = g.axis(1).h();
        FaceVelocity vel(N);
        for (std::size_t i = 0; i < N; ++i) vel.c[0][i] = g.index_along(i, 0) + 1 < xa.n ? vs[i][0] : 0.0;
        for (std::size_t j = 0; j < ct.n; ++j) {
            const ScalarField& f = u.nearest(ct.t[j]);
            for (std::size_t i = 0; i < N; ++i)
                vel.c[1][i] = g.index_along(i, 1) + 1 < g.axis(1).n ? -(f[i + sv] - f[i]) / (hv * pb.eps) : 0.0;
            advance(g, rho, vel, pb.sigma, ct.t[j + 1] - ct.t[j], scratch);
            DensityField d(grid, ct.t[j + 1]);
            d.values = rho;
            out.push_back(std::move(d));
        }
        return out;
    };

    MFGResult res;
    std::vector<DensityField> mu;
    for (double t : ct.t) {
        DensityField d = pb.mu0;
        d.t = t;
        mu.push_back(std::move(d));
    }
    res.diagnostics = picard(mu, opts, solve_u, push, res.state.u, res.converged);
    res.state.times = ct.t;
    res.state.mu = push(res.state.u);
    if (!res.converged)
        res.state.mu = mu;
    return res;
}

ControlSet velocity_nodes(const Grid& g) {
    require(g.d2() == 1, ErrorKind::Config, "velocity nodes need one fast axis");
    ControlSet c;
    c.dim = 1;
    c.lo[0] = g.axis(1).lo;
    c.hi[0] = g.axis(1).hi;
    for (std::size_t k = 0; k < g.axis(1).n; ++k) c.points.push_back(Vec{g.axis(1).coord(k), 0, 0});
    return c;
}

LimitMFGResult solve_mfg_control_limit(const MFGProblem& pb, const MFGOptions& opts) {
    pb.validate();
    const Grid& full = *pb.grid();
    const GridPtr xg = slow_grid_of(full);
    const Axis& xa = xg->axis(0);
    const std::size_t nx = xa.n;
    const double hx = xa.h(), hv = full.axis(1).h();
    const CouplingTimes ct(full.t_final, pb.time_slices);
    const ControlSet vset = velocity_nodes(full);
    const LagrangianModel L = pb.L0;

    // current coupling density read by the Hamiltonian during a solve
    struct Current {
        std::vector<std::vector<double>> rho;
        std::size_t slice = 0;
        MeasureView view(const Axis* ax) const { return MeasureView{ax, &rho[slice]}; }
    };
    auto cur = std::make_shared<Current>();
    const Axis* axp = &xa;

    HamiltonianModel H0;
    H0.key = "legendre_h0";
    H0.d1 = 1;
    H0.d2 = 0;
    H0.fast_exponent = 0.0;
    H0.separable = true;
    // H(x, p) = sup_v {-p v - L0}: the agent picks the velocity
    H0.jet = [cur, axp, L, vset](const Vec& x, const Vec&, const Vec& p, const Vec&) {
        const auto b = best_velocity(L, vset, x, -p[0], cur->view(axp));
        Jet j;
        j.value = b.value;
        j.dp[0] = -b.v;
        return j;
    };
    H0.eval = [H0j = H0.jet](const Vec& x, const Vec& y, const Vec& p, const Vec& q) { return H0j(x, y, p, q).value; };
    H0.grad_p = [H0j = H0.jet](const Vec& x, const Vec& y, const Vec& p, const Vec& q) { return H0j(x, y, p, q).dp; };
    H0.grad_q = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    H0.grad_y = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };

    auto densities = [&](const std::vector<DensityField>& m) {
        std::vector<std::vector<double>> rho;
        for (const auto& d : m) rho.push_back(mollify(x_masses(d), xa, pb.mollifier_width));
        return rho;
    };

    auto solve_u = [&](const std::vector<DensityField>& m) {
        cur->rho = densities(m);
        cur->slice = ct.n;
        CauchyProblem cp;
        cp.model = H0;
        cp.eps = 1.0;
        cp.sigma = pb.sigma;
        cp.direction = Direction::Backward;
        const TerminalCost gT = pb.g;
        const MeasureView mT = cur->view(axp);
        cp.u0.key = "terminal";
        cp.u0.eval = [gT, mT, cur](const Vec& x, const Vec&) { return gT.eval(x[0], mT); };
        cp.running_cost = [&, cur](double tau, std::vector<double>&) { cur->slice = ct.slice(ct.T - tau); };
        SolveOptions so;
        so.output_times = ct.t;
        return solve_viscous(cp, xg, so);
    };

    std::vector<DensityField> m0_slices;
    auto push = [&](const SolveOutput& u) {
        std::vector<DensityField> out;
        DensityField m(xg, 0.0);
        const auto mass0 = x_masses(pb.mu0);
        for (std::size_t i = 0; i < nx; ++i) m.values[i] = mass0[i] / hx;
        out.push_back(m);
        std::vector<double> rho = m.values, scratch(nx);
        FaceVelocity vel(nx);
        for (std::size_t j = 0; j < ct.n; ++j) {
            cur->slice = j;
            const ScalarField& f = u.nearest(ct.t[j]);
            for (std::size_t i = 0; i + 1 < nx; ++i) {
                const Vec xf{0.5 * (xa.coord(i) + xa.coord(i + 1)), 0, 0};
                const double p = (f[i + 1] - f[i]) / hx;
                vel.c[0][i] = best_velocity(L, vset, xf, -p, cur->view(axp)).v;
            }
            vel.c[0][nx - 1] = 0.0;
            advance(*xg, rho, vel, pb.sigma, ct.t[j + 1] - ct.t[j], scratch);
            DensityField d(xg, ct.t[j + 1]);
            d.values = rho;
            out.push_back(std::move(d));
        }
        // the x-only measures drive the coupling; the first slice is restored for the next solve
        return out;
    };

    LimitMFGResult res;
    std::vector<DensityField> m;
    {
        DensityField d(xg, 0.0);
        const auto mass0 = x_masses(pb.mu0);
        for (std::size_t i = 0; i < nx; ++i) d.values[i] = mass0[i] / hx;
        for (double t : ct.t) {
            d.t = t;
            m.push_back(d);
        }
    }
    res.diagnostics = picard(m, opts, solve_u, push, res.state.u, res.converged);
    res.state.times = ct.t;
    res.state.m = res.converged ? push(res.state.u) : m;
    // image of m under x -> (x, v*(x)), v* the maximizing velocity node
    cur->rho = densities(res.state.m);
    for (std::size_t j = 0; j <= ct.n; ++j) {
        cur->slice = j;
        const ScalarField& f = res.state.u.nearest(ct.t[j]);
        DensityField mu(pb.grid(), ct.t[j]);
        const std::size_t nv = full.axis(1).n;
        for (std::size_t i = 0; i < nx; ++i) {
            double p;
            if (i == 0) p = (f[1] - f[0]) / hx;
            else if (i + 1 == nx) p = (f[i] - f[i - 1]) / hx;
            else p = (f[i + 1] - f[i - 1]) / (2.0 * hx);
            const Vec x{xa.coord(i), 0, 0};
            const auto lv = legendre_h0(L, vset, x, Vec{-p, 0, 0}, cur->view(axp));
            mu.values[i * nv + lv.index] += res.state.m[j].values[i] / hv;
        }
        res.state.mu.push_back(std::move(mu));
    }
    return res;
}

double mfg_value_bound(const MFGProblem& pb, const MFGState& s) {
    const Grid& g = *pb.grid();
    const Axis& xa = g.axis(0);
    double gmax = 0.0, lmax = 0.0;
    Vec x{}, v{};
    for (const auto& mu : s.mu) {
        const auto rho = mollified_density(mu, pb.mollifier_width);
        const MeasureView mv{&xa, &rho};
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            g.coords(i, x, v);
            lmax = std::max(lmax, std::abs(pb.L0.eval(x, v, mv)));
            gmax = std::max(gmax, std::abs(pb.g.eval(x[0], mv)));
        }
    }
    return gmax + g.t_final * lmax;
}

MfgRateReport mfg_rate_study(const MFGProblem& tpl, const std::vector<double>& eps_list,
                             const std::vector<double>& probe_times, double v_radius, const MFGOptions& opts) {
    require(eps_list.size() >= 3, ErrorKind::Config, "MFG rate study needs at least 3 eps values");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        require(eps_list[i] < eps_list[i - 1], ErrorKind::Config, "eps list must be strictly decreasing");
    require(!probe_times.empty(), ErrorKind::Config, "need probe times");
    const Grid& g = *tpl.grid();
    const Window w = Window::ball(v_radius);
    const auto nodes = window_nodes(g, w);
    MfgRateReport rep;
    const std::size_t n = eps_list.size();
    rep.members.resize(n);
    rep.seconds.assign(n, 0.0);
    MFGOptions inner = opts;
    inner.jobs = 1;
    parallel_for(n, opts.jobs, [&](std::size_t i) {
        MFGProblem pb = tpl;
        pb.eps = eps_list[i];
        const auto t0 = std::chrono::steady_clock::now();
        rep.members[i] = solve_mfg_acc(pb, inner);
        rep.seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });
    for (const auto& m : rep.members) {
        rep.converged.push_back(m.converged);
        rep.iterations.push_back(m.diagnostics.size());
    }
    RateReport& r = rep.report;
    r.kind = "mfg_stability";
    r.t_list = probe_times;
    r.predicted = 0.5;
    std::vector<std::size_t> use;
    for (std::size_t i = 0; i < n; ++i) {
        if (rep.converged[i]) use.push_back(i);
        else r.notes.push_back("eps " + std::to_string(eps_list[i]) + " did not converge, excluded");
    }
    for (std::size_t k = 0; k + 1 < use.size(); ++k) {
        const auto& a = rep.members[use[k]].state;
        const auto& b = rep.members[use[k + 1]].state;
        std::vector<double> row, wrow;
        for (double t : probe_times) {
            const ScalarField& fa = a.u_at(t);
            const ScalarField& fb = b.u_at(t);
            double e = 0.0;
            for (std::size_t i : nodes) e = std::max(e, std::abs(fa[i] - fb[i]));
            row.push_back(e);
            const auto ja = static_cast<std::size_t>(std::lround(t / (a.times[1] - a.times[0])));
            wrow.push_back(marginal_w1(a.mu[ja], b.mu[ja]).proxy);
        }
        r.eps.push_back(eps_list[use[k]]);
        r.errors.push_back(row);
        rep.w1.push_back(wrow);
        rep.max_errors.push_back(*std::max_element(row.begin(), row.end()));
    }
    bool any = false;
    for (std::size_t j = 0; j < probe_times.size(); ++j) {
        std::vector<double> a, e;
        for (std::size_t k = 0; k < r.errors.size(); ++k)
            if (r.errors[k][j] >= kDegenerateFloor) {
                a.push_back(r.eps[k]);
                e.push_back(r.errors[k][j]);
            }
        r.degenerate_columns.push_back(a.empty());
        if (a.size() >= 3) {
            r.fits.push_back(fit_order(a, e));
            any = true;
        } else {
            r.fits.emplace_back();
        }
    }
    r.degenerate = !any;
    if (r.degenerate) {
        r.notes.push_back("all errors below the floor or too few pairs; no fit");
    } else {
        std::vector<double> a, e;
        for (std::size_t k = 0; k < rep.max_errors.size(); ++k)
            if (rep.max_errors[k] >= kDegenerateFloor) {
                a.push_back(r.eps[k]);
                e.push_back(rep.max_errors[k]);
            }
        if (a.size() >= 3) rep.max_fit = fit_order(a, e);
    }
    return rep;
}

std::vector<std::string> mfg_scenario_keys() { return {"weak-coupling", "uncoupled", "constant-cost", "flat", "free"}; }

MFGProblem make_mfg_scenario(const std::string& key, double eps) {
    MFGProblem pb;
    pb.key = key;
    pb.eps = eps;
    pb.time_slices = 60;
    auto grid = build_grid({Axis{-4.0, 4.0, 81}}, {Axis{-4.0, 4.0, 81}}, 3.0, 0.5);
    pb.mu0 = gaussian_bump(grid, Vec{-1.0, 0, 0}, Vec{0.0, 0, 0}, 0.4);
    const double hx = grid->axis(0).h();
    auto kinetic = [](const Vec& v) { return 0.5 * std::min(v[0] * v[0], 8.0); };
    auto attract = [](double x, const MeasureView&) {
        const double d = x - 1.0;
        return 0.5 * d * d / (1.0 + 0.25 * d * d);
    };
    pb.g.eval = attract;
    if (key == "weak-coupling") {
        pb.L0.eval = [kinetic](const Vec& x, const Vec& v, const MeasureView& mu) { return kinetic(v) + 0.1 * mu.at(x[0]); };
        pb.L0.measure_dependent = true;
        const double w = 2.0 * hx;
        pb.L0.bound = 4.0 + 0.1 / w;
        pb.L0.modulus = [w](double r) { return 0.1 * r / (w * w); };
    } else if (key == "uncoupled") {
        pb.L0.eval = [kinetic](const Vec&, const Vec& v, const MeasureView&) { return kinetic(v); };
        pb.L0.bound = 4.0;
        pb.L0.modulus = [](double) { return 0.0; };
    } else if (key == "constant-cost") {
        pb.L0.eval = [](const Vec&, const Vec&, const MeasureView&) { return 0.3; };
        pb.L0.bound = 0.3;
        pb.L0.modulus = [](double) { return 0.0; };
    } else if (key == "flat") {
        pb.L0.eval = [](const Vec&, const Vec&, const MeasureView&) { return 0.3; };
        pb.L0.bound = 0.3;
        pb.L0.modulus = [](double) { return 0.0; };
        pb.g.eval = [](double, const MeasureView&) { return 0.5; };
    } else if (key == "free") {
        pb.L0.eval = [kinetic](const Vec&, const Vec& v, const MeasureView&) { return kinetic(v); };
        pb.L0.bound = 4.0;
        pb.L0.modulus = [](double) { return 0.0; };
        pb.g.eval = [](double, const MeasureView&) { return 0.0; };
    } else {
        throw Error(ErrorKind::Config, "unknown MFG scenario '" + key + "'");
    }
    return pb;
}

}  // namespace sphj
