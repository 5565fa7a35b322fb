#include "sphj/hj_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sphj/error.hpp"

namespace sphj {

std::vector<std::string> datum_keys() {
    return {"zero", "constant", "cos_y", "slow_only", "linear_x", "linear_y", "bump", "bump_wall"};
}

namespace {

double smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

}  // namespace

InitialDatum make_datum(const std::string& key, const DatumParams& p) {
    InitialDatum d;
    d.key = key;
    const double l = p.width, W = p.wall_at, w = p.wall_width, hgt = p.wall_height, amp = p.slow_amplitude;
    const double c = p.value, a = p.slope, sh = p.shift;
    auto bump = [l, sh](const Vec& y) {
        const double r = (y[0] - sh) / l;
        return 1.0 / (1.0 + r * r);
    };
    auto slow = [amp](const Vec& x) { return amp * (1.0 - std::cos(x[0])); };
    if (key == "zero")
        d.eval = [](const Vec&, const Vec&) { return 0.0; };
    else if (key == "constant")
        d.eval = [c](const Vec&, const Vec&) { return c; };
    else if (key == "cos_y")
        d.eval = [sh](const Vec&, const Vec& y) { return 0.5 * (1.0 - std::cos(y[0] - sh)); };
    else if (key == "slow_only")
        d.eval = [slow](const Vec& x, const Vec&) { return slow(x); };
    else if (key == "linear_x")
        d.eval = [a](const Vec& x, const Vec&) { return a * x[0]; };
    else if (key == "linear_y")
        d.eval = [a](const Vec&, const Vec& y) { return a * y[0]; };
    else if (key == "bump")
        d.eval = [slow, bump](const Vec& x, const Vec& y) { return slow(x) + bump(y); };
    else if (key == "bump_wall")
        d.eval = [slow, bump, W, w, hgt](const Vec& x, const Vec& y) {
            return slow(x) + bump(y) + hgt * smoothstep((std::abs(y[0]) - W) / w);
        };
    else
        throw Error(ErrorKind::Config, "unknown datum key '" + key + "'");
    return d;
}

double fast_scale(const HamiltonianModel& m, double eps) { return std::pow(eps, -m.fast_exponent); }

const ScalarField& SolveOutput::nearest(double t) const {
    require(!trajectory.empty(), ErrorKind::InvalidArgument, "empty trajectory");
    std::size_t best = 0;
    for (std::size_t i = 1; i < trajectory.size(); ++i)
        if (std::abs(trajectory[i].t - t) < std::abs(trajectory[best].t - t)) best = i;
    return trajectory[best];
}

ScalarField SolveOutput::gradient(std::size_t slice, std::size_t axis) const {
    require_arg(slice < trajectory.size(), "slice index out of range");
    return upwind_gradient(trajectory[slice], axis, 0);
}

namespace {

struct NodeTable {
    std::vector<Vec> xs, ys;
    std::vector<std::uint8_t> lo_flags, hi_flags;  // bit k set when the node sits on the boundary of axis k

    explicit NodeTable(const Grid& g) : xs(g.node_count()), ys(g.node_count()), lo_flags(g.node_count()), hi_flags(g.node_count()) {
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            g.coords(i, xs[i], ys[i]);
            for (std::size_t k = 0; k < g.dims(); ++k) {
                const std::size_t j = g.index_along(i, k);
                if (j == 0) lo_flags[i] |= std::uint8_t(1u << k);
                if (j + 1 == g.axis(k).n) hi_flags[i] |= std::uint8_t(1u << k);
            }
        }
    }
};

}  // namespace

SolveOutput solve_viscous(const CauchyProblem& pb, GridPtr grid, const SolveOptions& opts) {
    const Grid& g = *grid;
    const HamiltonianModel& m = pb.model;
    require(pb.eps > 0.0 && std::isfinite(pb.eps), ErrorKind::Config, "eps must be positive");
    require(pb.sigma >= 0.0 && std::isfinite(pb.sigma), ErrorKind::Config, "sigma must be nonnegative");
    require(g.d1() == m.d1 && g.d2() == m.d2, ErrorKind::Config, "grid dimensions do not match the model");
    require(static_cast<bool>(pb.u0.eval), ErrorKind::Config, "missing initial datum");

    const std::size_t N = g.node_count(), D = g.dims(), d1 = g.d1();
    const double T = g.t_final;
    const double sc = fast_scale(m, pb.eps);
    std::array<double, kMaxDim> h{}, scale{};
    std::array<std::size_t, kMaxDim> stride{};
    for (std::size_t k = 0; k < D; ++k) {
        h[k] = g.axis(k).h();
        scale[k] = g.is_fast(k) ? sc : 1.0;
        stride[k] = g.stride(k);
    }
    const NodeTable nodes(g);
    std::vector<BoundJet> bound;
    if (m.bind) {
        bound.reserve(N);
        for (std::size_t i = 0; i < N; ++i) bound.push_back(m.bind(nodes.xs[i], nodes.ys[i]));
    }

    // corner sign patterns used to bracket the local wave speeds
    std::vector<unsigned> corners;
    if (m.separable)
        corners = {0u, (1u << D) - 1u};
    else
        for (unsigned c = 0; c < (1u << D); ++c) corners.push_back(c);

    auto out = SolveOutput{};
    out.problem = std::make_shared<const CauchyProblem>(pb);
    out.grid = grid;

    auto phys = [&](double tau) { return pb.direction == Direction::Forward ? tau : T - tau; };
    std::vector<double> targets;
    for (double t : opts.output_times) {
        require(t >= 0.0 && t <= T * (1 + 1e-12), ErrorKind::Config, "output time outside [0, T]");
        targets.push_back(pb.direction == Direction::Forward ? t : T - t);
    }
    targets.push_back(T);
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                  targets.end());

    std::vector<double> u(N), rhs(N), extra(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        u[i] = pb.u0.eval(nodes.xs[i], nodes.ys[i]);
        require(std::isfinite(u[i]), ErrorKind::Numerical, "initial datum not finite");
    }
    const std::size_t max_slices = std::max<std::size_t>(
        2, static_cast<std::size_t>(opts.memory_cap_mb * 1024.0 * 1024.0 / (8.0 * static_cast<double>(N))));

    double tau = 0.0;
    long step = 0;
    double cfl_since = 0.0, dt_last = 0.0;
    auto& diag = out.diagnostics;
    diag.dt_min = std::numeric_limits<double>::infinity();
    auto store = [&] {
        ScalarField f(grid, phys(tau), u);
        SliceDiag sd;
        sd.t = f.t;
        sd.step = step;
        sd.dt_last = dt_last;
        sd.cfl_max = cfl_since;
        sd.min = *std::min_element(u.begin(), u.end());
        sd.max = *std::max_element(u.begin(), u.end());
        sd.sup = std::max(std::abs(sd.min), std::abs(sd.max));
        diag.history.push_back(sd);
        out.trajectory.push_back(std::move(f));
        cfl_since = 0.0;
    };
    store();

    const bool strict = g.dt > 0.0;
    std::size_t next = 0;
    struct Rate {
        double max = 0.0;
        std::string binding;
    };
    // rhs of u_tau = -rhs at marching time tau; returns the largest per-node rate
    auto evaluate = [&](double at, const std::vector<double>& v, std::vector<double>& out_rhs) {
        if (pb.running_cost) pb.running_cost(at, extra);
        Vec P{}, Q{}, cP{}, cQ{};
        std::array<double, kMaxDim> dm{}, dp{}, alpha{};
        Rate rt;
        double worst_adv = 0.0, worst_visc = 0.0;
        std::size_t worst_axis = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double ui = v[i];
            for (std::size_t k = 0; k < D; ++k) {
                const std::size_t s = stride[k];
                const bool lo = nodes.lo_flags[i] >> k & 1u, hi = nodes.hi_flags[i] >> k & 1u;
                const double um = lo ? v[i + s] : v[i - s];
                const double up = hi ? v[i - s] : v[i + s];
                dm[k] = (ui - um) / h[k];
                dp[k] = (up - ui) / h[k];
            }
            for (std::size_t k = 0; k < D; ++k) {
                const double c = 0.5 * (dm[k] + dp[k]) * scale[k];
                if (k < d1) P[k] = c; else Q[k - d1] = c;
            }
            const Vec& xi = nodes.xs[i];
            const Vec& yi = nodes.ys[i];
            auto jet = [&](const Vec& pp, const Vec& qq) { return bound.empty() ? m.evaluate(xi, yi, pp, qq) : bound[i](pp, qq); };
            const Jet j0 = jet(P, Q);
            for (std::size_t k = 0; k < D; ++k) alpha[k] = std::abs(k < d1 ? j0.dp[k] : j0.dq[k - d1]);
            for (unsigned c : corners) {
                for (std::size_t k = 0; k < D; ++k) {
                    const double w = ((c >> k) & 1u ? dp[k] : dm[k]) * scale[k];
                    if (k < d1) cP[k] = w; else cQ[k - d1] = w;
                }
                const Jet jc = jet(cP, cQ);
                for (std::size_t k = 0; k < D; ++k) alpha[k] = std::max(alpha[k], std::abs(k < d1 ? jc.dp[k] : jc.dq[k - d1]));
            }
            double r = j0.value + extra[i], adv = 0.0, visc = 0.0;
            std::size_t top_axis = 0;
            double top = -1.0;
            for (std::size_t k = 0; k < D; ++k) {
                const double a = alpha[k] * scale[k];
                const double jump = dp[k] - dm[k];
                r -= 0.5 * a * jump + pb.sigma * jump / h[k];
                const double ra = a / h[k];
                adv += ra;
                visc += 2.0 * pb.sigma / (h[k] * h[k]);
                if (ra > top) {
                    top = ra;
                    top_axis = k;
                }
            }
            if (!std::isfinite(r))
                throw Error(ErrorKind::Numerical, "non-finite Hamiltonian at step " + std::to_string(step));
            out_rhs[i] = r;
            if (adv + visc > rt.max) {
                rt.max = adv + visc;
                worst_adv = adv;
                worst_visc = visc;
                worst_axis = top_axis;
            }
        }
        rt.binding = worst_visc > worst_adv ? "viscous"
                                            : std::string("advective axis ") + std::to_string(worst_axis) +
                                                  (g.is_fast(worst_axis) ? " (fast)" : " (slow)");
        return rt;
    };

    std::vector<double> trial(N), trial_rhs(N);
    Rate rate = evaluate(tau, u, rhs);
    diag.initial_rate = rate.max;
    if (opts.dry_run) {
        diag.binding = rate.binding;
        diag.dt_min = 0.0;
        return out;
    }
    while (next < targets.size()) {
        require(static_cast<std::size_t>(step) < opts.max_steps, ErrorKind::Numerical, "step budget exhausted");
        const double remaining = targets[next] - tau;
        double dt;
        if (strict) {
            dt = g.dt;
            if (dt * rate.max > g.cfl_safety * (1.0 + 1e-9)) throw CflViolation(step, dt * rate.max, rate.binding);
        } else {
            dt = rate.max > 0.0 ? g.cfl_safety / rate.max : remaining;
        }
        bool hit = false;
        Rate next_rate;
        for (;;) {
            hit = dt >= remaining * (1.0 - 1e-12);
            if (hit) dt = remaining;
            for (std::size_t i = 0; i < N; ++i) trial[i] = u[i] - dt * rhs[i];
            const double t_new = hit ? targets[next] : tau + dt;
            next_rate = evaluate(t_new, trial, trial_rhs);
            // speeds can grow during the step (flat data, zero speed); keep the update monotone for the new state
            if (strict || dt * next_rate.max <= 1.0) break;
            dt = std::min(0.5 * dt, g.cfl_safety / next_rate.max);
        }
        if (dt < diag.dt_min) {
            diag.dt_min = dt;
            if (!hit || diag.binding.empty()) diag.binding = rate.binding;
        }
        diag.dt_max = std::max(diag.dt_max, dt);
        cfl_since = std::max(cfl_since, dt * rate.max);
        u.swap(trial);
        rhs.swap(trial_rhs);
        rate = next_rate;
        tau = hit ? targets[next] : tau + dt;
        ++step;
        dt_last = dt;
        if (hit) {
            ++next;
            store();
        } else if (opts.store_every > 0 && step % static_cast<long>(opts.store_every) == 0 &&
                   out.trajectory.size() < max_slices) {
            store();
        }
    }
    diag.steps = step;
    if (!std::isfinite(diag.dt_min)) diag.dt_min = 0.0;
    return out;
}

VanishingViscosityResult solve_vanishing_viscosity(const CauchyProblem& pb, GridPtr grid,
                                                   const std::vector<double>& sigmas, const SolveOptions& opts) {
    require(!sigmas.empty(), ErrorKind::Config, "empty viscosity schedule");
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        require(sigmas[i] > 0.0, ErrorKind::Config, "viscosity schedule must be positive");
        if (i > 0) require(sigmas[i] < sigmas[i - 1], ErrorKind::Config, "viscosity schedule must decrease strictly");
    }
    VanishingViscosityResult res;
    res.report.sigmas = sigmas;
    SolveOutput prev;
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
        CauchyProblem p = pb;
        p.sigma = sigmas[i];
        SolveOutput cur = solve_viscous(p, grid, opts);
        if (i > 0) {
            res.report.gaps.push_back(sup_diff(prev.final(), cur.final()));
            if (i + 1 == sigmas.size()) {
                const double sa = sigmas[i - 1], sb = sigmas[i];
                ScalarField ex = cur.final();
                for (std::size_t n = 0; n < ex.size(); ++n)
                    ex[n] = cur.final()[n] - sb * (prev.final()[n] - cur.final()[n]) / (sa - sb);
                res.report.extrapolated = std::move(ex);
            }
        }
        prev = std::move(cur);
    }
    if (sigmas.size() == 1) res.report.extrapolated = prev.final();
    res.output = std::move(prev);
    return res;
}

namespace {

// multilinear sample of a field at physical coordinates given per axis
double sample(const ScalarField& f, const std::array<double, kMaxDim>& at) {
    const Grid& g = *f.grid;
    const std::size_t D = g.dims();
    std::array<std::size_t, kMaxDim> base{};
    std::array<double, kMaxDim> w{};
    for (std::size_t k = 0; k < D; ++k) {
        const Axis& a = g.axis(k);
        double s = (at[k] - a.lo) / a.h();
        const double top = static_cast<double>(a.n - 1);
        require(s >= -1e-9 && s <= top + 1e-9, ErrorKind::InvalidArgument, "scaling maps outside the source domain");
        s = std::clamp(s, 0.0, top);
        const double r = std::round(s);
        if (std::abs(s - r) < 1e-9) s = r;
        auto i = static_cast<std::size_t>(std::floor(s));
        if (i + 1 >= a.n) i = a.n - 2;
        base[k] = i;
        w[k] = s - static_cast<double>(i);
    }
    double acc = 0.0;
    for (unsigned c = 0; c < (1u << D); ++c) {
        double wt = 1.0;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < D; ++k) {
            const bool up = (c >> k) & 1u;
            wt *= up ? w[k] : 1.0 - w[k];
            idx += (base[k] + (up ? 1 : 0)) * g.stride(k);
        }
        if (wt != 0.0) acc += wt * f[idx];
    }
    return acc;
}

}  // namespace

SolveOutput rescale_fast(const SolveOutput& out, double eps, GridPtr target) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    require(!out.trajectory.empty(), ErrorKind::InvalidArgument, "empty trajectory");
    const Grid& src = *out.grid;
    const Grid& dst = *target;
    require(src.slow_axes() == dst.slow_axes() && src.d2() == dst.d2(), ErrorKind::InvalidArgument,
            "rescale target must share the slow axes");
    const double s = std::pow(eps, out.problem->model.fast_exponent);
    SolveOutput res;
    res.problem = out.problem;
    res.grid = target;
    res.diagnostics = out.diagnostics;
    for (const auto& f : out.trajectory) {
        ScalarField w(target, f.t);
        std::array<double, kMaxDim> at{};
        for (std::size_t n = 0; n < dst.node_count(); ++n) {
            for (std::size_t k = 0; k < dst.dims(); ++k) at[k] = dst.is_fast(k) ? dst.coord(n, k) / s : dst.coord(n, k);
            w[n] = sample(f, at);
        }
        res.trajectory.push_back(std::move(w));
    }
    return res;
}

SolveOutput rescale_fast(const SolveOutput& out, double eps) {
    const Grid& src = *out.grid;
    const double s = std::pow(eps, out.problem->model.fast_exponent);
    std::vector<Axis> fast;
    for (const auto& a : src.fast_axes()) fast.push_back(Axis{a.lo * s, a.hi * s, a.n});
    auto target = std::make_shared<Grid>(src.slow_axes(), fast, src.t_final, src.cfl_safety);
    return rescale_fast(out, eps, target);
}

double fast_gradient_norm(const SolveOutput& out, double t, const Window& w) {
    require(!out.trajectory.empty(), ErrorKind::InvalidArgument, "empty trajectory");
    const ScalarField& f = out.nearest(t);
    const Grid& g = *f.grid;
    const HamiltonianModel& m = out.problem->model;
    const double sc = fast_scale(m, out.problem->eps);
    const std::size_t D = g.dims(), d1 = g.d1();
    w.validate(g);
    double best = 0.0;
    Vec x{}, y{}, P{}, Q{};
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (!w.contains(g, i)) continue;
        g.coords(i, x, y);
        std::array<double, kMaxDim> back{}, fwd{}, cen{};
        std::array<bool, kMaxDim> has_l{}, has_r{};
        for (std::size_t k = 0; k < D; ++k) {
            const std::size_t j = g.index_along(i, k), s = g.stride(k);
            const double h = g.axis(k).h();
            has_l[k] = j > 0;
            has_r[k] = j + 1 < g.axis(k).n;
            back[k] = has_l[k] ? (f[i] - f[i - s]) / h : 0.0;
            fwd[k] = has_r[k] ? (f[i + s] - f[i]) / h : 0.0;
            cen[k] = has_l[k] && has_r[k] ? 0.5 * (back[k] + fwd[k]) : (has_l[k] ? back[k] : fwd[k]);
            if (k < d1) P[k] = cen[k]; else Q[k - d1] = cen[k] * sc;
        }
        const Jet j = m.evaluate(x, y, P, Q);
        double acc = 0.0;
        for (std::size_t k = d1; k < D; ++k) {
            const double speed = j.dq[k - d1];
            double d;
            if (speed > 0.0)
                d = has_l[k] ? back[k] : fwd[k];
            else if (speed < 0.0)
                d = has_r[k] ? fwd[k] : back[k];
            else
                d = cen[k];
            acc += d * d;
        }
        best = std::max(best, std::sqrt(acc));
    }
    return best;
}

SearchSet search_from_grid(const Grid& g) {
    SearchSet s;
    s.d1 = g.d1();
    s.d2 = g.d2();
    // tensor product of the distinct slow and fast node coordinates
    std::size_t slow_count = 1, fast_count = 1;
    for (const auto& a : g.slow_axes()) slow_count *= a.n;
    for (const auto& a : g.fast_axes()) fast_count *= a.n;
    for (std::size_t i = 0; i < slow_count; ++i) {
        Vec x{};
        std::size_t r = i;
        for (std::size_t k = g.d1(); k-- > 0;) {
            x[k] = g.slow_axes()[k].coord(r % g.slow_axes()[k].n);
            r /= g.slow_axes()[k].n;
        }
        s.xs.push_back(x);
    }
    for (std::size_t i = 0; i < fast_count; ++i) {
        Vec y{};
        std::size_t r = i;
        for (std::size_t k = g.d2(); k-- > 0;) {
            y[k] = g.fast_axes()[k].coord(r % g.fast_axes()[k].n);
            r /= g.fast_axes()[k].n;
        }
        s.ys.push_back(y);
    }
    return s;
}

SearchSet search_lines(std::vector<double> xs, std::vector<double> ys) {
    SearchSet s;
    for (double x : xs) s.xs.push_back(Vec{x, 0, 0});
    for (double y : ys) s.ys.push_back(Vec{y, 0, 0});
    return s;
}

double hopf_lax_oracle(const InitialDatum& u0, double t, const Vec& x, const Vec& y, double eps, const SearchSet& s,
                       double gamma) {
    require(t > 0.0, ErrorKind::InvalidArgument, "Hopf-Lax oracle needs t > 0");
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    require(!s.xs.empty() && !s.ys.empty(), ErrorKind::InvalidArgument, "empty search set");
    const double gp = gamma / (gamma - 1.0);
    const double c = std::pow(eps, gp - 1.0) / (gp * std::pow(t, gp - 1.0));
    // the point itself is always a candidate
    double best = u0.eval(x, y);
    for (const Vec& xp : s.xs) {
        double dx2 = 0.0;
        for (std::size_t k = 0; k < s.d1; ++k) dx2 += (x[k] - xp[k]) * (x[k] - xp[k]);
        const double slow = dx2 / (2.0 * t);
        for (const Vec& yp : s.ys) {
            double dy2 = 0.0;
            for (std::size_t k = 0; k < s.d2; ++k) dy2 += (y[k] - yp[k]) * (y[k] - yp[k]);
            const double fast = gamma == 2.0 ? c * dy2 : c * std::pow(std::sqrt(dy2), gp);
            const double v = slow + fast + u0.eval(xp, yp);
            best = std::min(best, v);
        }
    }
    return best;
}

}  // namespace sphj
