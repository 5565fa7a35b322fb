#include "sphj/adjoint.hpp"

#include <cmath>

#include "sphj/error.hpp"

namespace sphj {

namespace {

// central differences with the reflected ghost used by the HJ scheme (zero normal derivative at walls)
void central(const ScalarField& f, std::size_t i, std::array<double, kMaxDim>& d) {
    const Grid& g = *f.grid;
    for (std::size_t k = 0; k < g.dims(); ++k) {
        const std::size_t j = g.index_along(i, k), s = g.stride(k);
        if (j == 0 || j + 1 == g.axis(k).n)
            d[k] = 0.0;
        else
            d[k] = (f[i + s] - f[i - s]) / (2.0 * g.axis(k).h());
    }
}

struct Integrands {
    double lagrangian = 0.0;  // sum of (<dG, Du> - G) rho
    double moment = 0.0;      // sum of (|D_x u|^g + |D_y u|^g) rho
};

Integrands integrate_slice(const SolveOutput& u, std::size_t slice, const DensityField& rho) {
    const ScalarField& f = u.trajectory[slice];
    const Grid& g = *f.grid;
    const HamiltonianModel& m = u.problem->model;
    const double sc = fast_scale(m, u.problem->eps);
    const std::size_t d1 = g.d1(), D = g.dims();
    const double vol = g.cell_volume();
    Integrands out;
    Vec x{}, y{}, P{}, Q{};
    std::array<double, kMaxDim> d{};
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        const double r = rho.values[i];
        if (r == 0.0) continue;
        g.coords(i, x, y);
        central(f, i, d);
        double nx = 0.0, ny = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
            if (k < d1) {
                P[k] = d[k];
                nx += d[k] * d[k];
            } else {
                Q[k - d1] = d[k] * sc;
                ny += d[k] * d[k];
            }
        }
        const Jet j = m.evaluate(x, y, P, Q);
        double pair = 0.0;
        for (std::size_t k = 0; k < D; ++k) pair += (k < d1 ? j.dp[k] : sc * j.dq[k - d1]) * d[k];
        out.lagrangian += (pair - j.value) * r * vol;
        out.moment += (std::pow(std::sqrt(nx), m.gamma) + std::pow(std::sqrt(ny), m.gamma)) * r * vol;
    }
    return out;
}

std::size_t find_slice(const SolveOutput& u, double t) {
    for (std::size_t i = 0; i < u.trajectory.size(); ++i)
        if (std::abs(u.trajectory[i].t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
    throw Error(ErrorKind::InvalidArgument, "no stored HJ slice at t = " + std::to_string(t));
}

}  // namespace

std::array<std::vector<double>, kMaxDim> node_drift(const SolveOutput& u, std::size_t slice) {
    const ScalarField& f = u.trajectory[slice];
    const Grid& g = *f.grid;
    const HamiltonianModel& m = u.problem->model;
    const double sc = fast_scale(m, u.problem->eps);
    const std::size_t d1 = g.d1(), D = g.dims(), N = g.node_count();
    std::array<std::vector<double>, kMaxDim> b;
    for (std::size_t k = 0; k < D; ++k) b[k].assign(N, 0.0);
    Vec x{}, y{}, P{}, Q{};
    std::array<double, kMaxDim> d{};
    for (std::size_t i = 0; i < N; ++i) {
        g.coords(i, x, y);
        central(f, i, d);
        for (std::size_t k = 0; k < D; ++k) {
            if (k < d1) P[k] = d[k]; else Q[k - d1] = d[k] * sc;
        }
        const Jet j = m.evaluate(x, y, P, Q);
        for (std::size_t k = 0; k < D; ++k) b[k][i] = k < d1 ? j.dp[k] : sc * j.dq[k - d1];
    }
    return b;
}

DualRun solve_fokker_planck_dual(const SolveOutput& u, const DensityField& rho_tau, double sigma, double s_stop) {
    require(!u.trajectory.empty(), ErrorKind::InvalidArgument, "empty HJ trajectory");
    require(u.problem->direction == Direction::Forward, ErrorKind::InvalidArgument, "dual solve expects a forward HJ run");
    require(rho_tau.grid->same_space(*u.grid), ErrorKind::InvalidArgument, "terminal density on a different grid");
    require(sigma >= 0.0, ErrorKind::Config, "sigma must be nonnegative");
    require(rho_tau.min() >= -1e-12, ErrorKind::InvalidArgument, "terminal density has negative values");
    require(std::abs(rho_tau.mass() - 1.0) <= 1e-8, ErrorKind::InvalidArgument, "terminal density must have unit mass");
    const Grid& g = *u.grid;
    const std::size_t N = g.node_count(), D = g.dims();
    const std::size_t top = find_slice(u, rho_tau.t);

    DualRun run;
    run.grid = u.grid;
    run.tau = rho_tau.t;
    run.sigma = sigma;
    auto& diag = run.diagnostics;
    std::vector<double> rho = rho_tau.values, scratch(N);
    auto store = [&](std::size_t j) {
        DensityField f(u.grid, u.trajectory[j].t);
        f.values = rho;
        diag.max_mass_drift = std::max(diag.max_mass_drift, std::abs(f.mass() - 1.0));
        diag.min_value = std::min(diag.min_value, f.min());
        run.trajectory.push_back(std::move(f));
        run.u_slice.push_back(j);
    };
    diag.min_value = rho_tau.min();
    store(top);
    FaceVelocity vel(N);
    for (std::size_t j = top; j-- > 0;) {
        if (u.trajectory[j].t < s_stop - 1e-12) break;
        const double span = u.trajectory[j + 1].t - u.trajectory[j].t;
        const auto b = node_drift(u, j);
        for (std::size_t k = 0; k < D; ++k) {
            const std::size_t s = g.stride(k), n = g.axis(k).n;
            for (std::size_t i = 0; i < N; ++i)
                vel.c[k][i] = g.index_along(i, k) + 1 < n ? -0.5 * (b[k][i] + b[k][i + s]) : 0.0;
        }
        const double rate = transport_rate(g, vel, sigma);
        const long sub = std::max(1L, static_cast<long>(std::ceil(span * rate / g.cfl_safety)));
        const double dt = span / static_cast<double>(sub);
        for (long m = 0; m < sub; ++m) {
            transport_step(g, rho, vel, sigma, dt, scratch);
            ++diag.substeps;
        }
        bool clipped = false;
        for (double& v : rho) {
            if (!std::isfinite(v)) throw Error(ErrorKind::Numerical, "non-finite dual density");
            if (v < -1e-12) {
                v = 0.0;
                clipped = true;
                ++diag.clips;
            }
        }
        if (clipped) {
            double s = 0.0;
            for (double v : rho) s += v;
            for (double& v : rho) v /= s * g.cell_volume();
        }
        store(j);
    }
    return run;
}

double duality_residual(const SolveOutput& u, const DualRun& d, double s, double tau) {
    require(s < tau, ErrorKind::InvalidArgument, "need s < tau");
    require(d.grid->same_space(*u.grid), ErrorKind::InvalidArgument, "mismatched grids");
    const double vol = u.grid->cell_volume();
    // dual slices run backward in time
    std::vector<std::size_t> use;
    for (std::size_t k = 0; k < d.trajectory.size(); ++k) {
        const double t = d.trajectory[k].t;
        if (t <= tau + 1e-12 && t >= s - 1e-12) use.push_back(k);
    }
    require(use.size() >= 2, ErrorKind::InvalidArgument, "dual run does not cover [s, tau]");
    require(std::abs(d.trajectory[use.front()].t - tau) < 1e-9 && std::abs(d.trajectory[use.back()].t - s) < 1e-9,
            ErrorKind::InvalidArgument, "s and tau must coincide with stored slices");
    auto pairing = [&](std::size_t k) {
        const auto& rho = d.trajectory[k].values;
        const auto& f = u.trajectory[d.u_slice[k]];
        double acc = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) acc += f[i] * rho[i];
        return acc * vol;
    };
    const double lhs = pairing(use.front()) - pairing(use.back());
    double rhs = 0.0;
    double prev_val = integrate_slice(u, d.u_slice[use.front()], d.trajectory[use.front()]).lagrangian;
    for (std::size_t n = 1; n < use.size(); ++n) {
        const std::size_t k = use[n];
        const double val = integrate_slice(u, d.u_slice[k], d.trajectory[k]).lagrangian;
        rhs += 0.5 * (prev_val + val) * (d.trajectory[use[n - 1]].t - d.trajectory[k].t);
        prev_val = val;
    }
    return std::abs(lhs - rhs);
}

SupNormCertificate supnorm_certificate(const SolveOutput& u) {
    require(!u.trajectory.empty(), ErrorKind::InvalidArgument, "empty trajectory");
    SupNormCertificate c;
    c.applicable = u.problem->model.flags.nonneg;
    const ScalarField& f0 = u.trajectory.front();
    const Grid& g = *f0.grid;
    c.initial_sup = sup_norm(f0);
    double hmax = 0.0;
    for (std::size_t k = 0; k < g.dims(); ++k) {
        const double h = g.axis(k).h();
        hmax = std::max(hmax, h);
        const std::size_t s = g.stride(k);
        for (std::size_t i = 0; i < g.node_count(); ++i)
            if (g.index_along(i, k) + 1 < g.axis(k).n) c.lipschitz = std::max(c.lipschitz, std::abs(f0[i + s] - f0[i]) / h);
    }
    for (const auto& f : u.trajectory) c.max_sup = std::max(c.max_sup, sup_norm(f));
    c.slack = 10.0 * hmax * c.lipschitz;
    c.pass = c.max_sup <= c.initial_sup + c.slack;
    return c;
}

double gamma_moment(const SolveOutput& u, const DualRun& d) {
    require(d.grid->same_space(*u.grid), ErrorKind::InvalidArgument, "mismatched grids");
    require(!d.trajectory.empty(), ErrorKind::InvalidArgument, "empty dual run");
    double acc = 0.0;
    double prev = integrate_slice(u, d.u_slice[0], d.trajectory[0]).moment;
    for (std::size_t k = 1; k < d.trajectory.size(); ++k) {
        const double cur = integrate_slice(u, d.u_slice[k], d.trajectory[k]).moment;
        acc += 0.5 * (prev + cur) * (d.trajectory[k - 1].t - d.trajectory[k].t);
        prev = cur;
    }
    return acc;
}

}  // namespace sphj
