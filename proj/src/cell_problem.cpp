#include "sphj/cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "sphj/error.hpp"
#include "sphj/parallel.hpp"

namespace sphj {

namespace {

void check_query(const HamiltonianModel& m, const CellQuery& q) {
    require(static_cast<bool>(q.fast_grid), ErrorKind::Config, "cell query without a fast grid");
    require(q.fast_grid->d1() == 0, ErrorKind::Config, "cell grid must carry fast axes only");
    require(q.fast_grid->d2() == m.d2, ErrorKind::Config, "cell grid does not match the model's fast dimension");
}

// Lax-Friedrichs operator r = delta w + Hhat(w) with per-node wave speeds taken from the central and
// corner one-sided gradients of the current iterate, as in the time-dependent solver.
struct CellOperator {
    const HamiltonianModel& m;
    const CellQuery& q;
    const Grid& g;
    std::vector<Vec> ys;
    std::vector<unsigned> corners;
    std::vector<std::array<double, kMaxDim>> alpha;
    std::vector<double> alpha_sum;  // sum_k alpha_k / h_k

    CellOperator(const HamiltonianModel& model, const CellQuery& query) : m(model), q(query), g(*query.fast_grid) {
        const std::size_t N = g.node_count(), D = g.dims();
        ys.resize(N);
        Vec x{};
        for (std::size_t i = 0; i < N; ++i) g.coords(i, x, ys[i]);
        if (m.separable)
            corners = {0u, (1u << D) - 1u};
        else
            for (unsigned c = 0; c < (1u << D); ++c) corners.push_back(c);
        alpha.assign(N, {});
        alpha_sum.assign(N, 0.0);
    }

    // returns the largest change of any speed
    double refresh(const std::vector<double>& w) {
        const std::size_t N = g.node_count(), D = g.dims();
        std::array<double, kMaxDim> dm{}, dp{}, a{};
        Vec Q{}, cQ{};
        double change = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t k = 0; k < D; ++k) {
                const std::size_t s = g.stride(k), j = g.index_along(i, k);
                const double h = g.axis(k).h();
                const double wm = j == 0 ? w[i + s] : w[i - s];
                const double wp = j + 1 == g.axis(k).n ? w[i - s] : w[i + s];
                dm[k] = (w[i] - wm) / h;
                dp[k] = (wp - w[i]) / h;
                Q[k] = 0.5 * (dm[k] + dp[k]);
            }
            const Jet j0 = m.evaluate(q.x_bar, ys[i], q.p_bar, Q);
            for (std::size_t k = 0; k < D; ++k) a[k] = std::abs(j0.dq[k]);
            for (unsigned c : corners) {
                for (std::size_t k = 0; k < D; ++k) cQ[k] = (c >> k) & 1u ? dp[k] : dm[k];
                const Jet jc = m.evaluate(q.x_bar, ys[i], q.p_bar, cQ);
                for (std::size_t k = 0; k < D; ++k) a[k] = std::max(a[k], std::abs(jc.dq[k]));
            }
            alpha_sum[i] = 0.0;
            for (std::size_t k = 0; k < D; ++k) {
                change = std::max(change, std::abs(a[k] - alpha[i][k]));
                alpha[i][k] = a[k];
                alpha_sum[i] += a[k] / g.axis(k).h();
            }
        }
        return change;
    }

    double node(const std::vector<double>& w, std::size_t i, double delta) const {
        const std::size_t D = g.dims();
        Vec Q{};
        double visc = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
            const std::size_t s = g.stride(k), j = g.index_along(i, k);
            const double h = g.axis(k).h();
            const double wm = j == 0 ? w[i + s] : w[i - s];
            const double wp = j + 1 == g.axis(k).n ? w[i - s] : w[i + s];
            Q[k] = (wp - wm) / (2.0 * h);
            visc += 0.5 * alpha[i][k] * (wp - 2.0 * w[i] + wm) / h;
        }
        return delta * w[i] + m.evaluate(q.x_bar, ys[i], q.p_bar, Q).value - visc;
    }

    // false when some residual is not finite
    bool apply(const std::vector<double>& w, double delta, std::vector<double>& r) const {
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            r[i] = node(w, i, delta);
            if (!std::isfinite(r[i])) return false;
        }
        return true;
    }

    double max_rate(double delta) const { return delta + *std::max_element(alpha_sum.begin(), alpha_sum.end()); }
};

std::size_t center_node(const Grid& g) {
    std::size_t node = 0;
    for (std::size_t k = 0; k < g.dims(); ++k) {
        const Axis& a = g.axis(k);
        const double c = 0.5 * (a.lo + a.hi);
        const auto j = static_cast<std::size_t>(std::lround((c - a.lo) / a.h()));
        node += std::min(j, a.n - 1) * g.stride(k);
    }
    return node;
}

}  // namespace

double discrete_cell_residual(const HamiltonianModel& m, const CellQuery& q, double delta, const ScalarField& w) {
    check_query(m, q);
    require_arg(w.grid->same_space(*q.fast_grid), "field is not on the cell grid");
    CellOperator op(m, q);
    std::vector<double> r(w.size());
    op.refresh(w.values);
    require(op.apply(w.values, delta, r), ErrorKind::Numerical, "non-finite cell residual");
    double s = 0.0;
    for (double v : r) s = std::max(s, std::abs(v));
    return s;
}

DiscountedSolution solve_discounted(const HamiltonianModel& m, const CellQuery& q, double delta, const CellOptions& opts,
                                    const ScalarField* warm) {
    check_query(m, q);
    require(delta > 0.0 && std::isfinite(delta), ErrorKind::Config, "delta must be positive");
    require(opts.omega > 0.0 && opts.omega <= 1.0, ErrorKind::Config, "omega must lie in (0,1]");
    require(opts.tol > 0.0, ErrorKind::Config, "tolerance must be positive");
    const Grid& g = *q.fast_grid;
    const std::size_t N = g.node_count();
    CellOperator op(m, q);
    std::vector<double> w(N, 0.0), r(N);
    if (warm) {
        require_arg(warm->grid->same_space(g), "warm start on a different grid");
        w = warm->values;
    }
    DiscountedSolution out;
    std::vector<double> trial(N);
    op.refresh(w);
    for (std::size_t it = 0;; ++it) {
        require(op.apply(w, delta, r), ErrorKind::Numerical, "non-finite cell residual");
        if (opts.shift) {
            // Hhat ignores constants, so the shifted residual is r + delta c
            const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
            const double c = -0.5 * (*hi + *lo) / delta;
            for (std::size_t i = 0; i < N; ++i) {
                w[i] += c;
                r[i] += delta * c;
            }
        }
        double res = 0.0;
        for (double v : r) res = std::max(res, std::abs(v));
        if (res <= opts.tol) {
            out.iterations = it;
            break;
        }
        if (it >= opts.max_iters)
            throw Error(ErrorKind::NonConvergence, "cell problem did not converge in " + std::to_string(opts.max_iters) +
                                                       " iterations (delta " + std::to_string(delta) + ", residual " +
                                                       std::to_string(res) + ")");
        // pseudo-time step; rejected and halved while the new speeds would break monotonicity
        double dtau = opts.omega / op.max_rate(delta);
        for (;;) {
            for (std::size_t i = 0; i < N; ++i) trial[i] = w[i] - dtau * r[i];
            const auto saved = op.alpha_sum;
            op.refresh(trial);
            if (dtau * op.max_rate(delta) <= 1.0) break;
            dtau = std::min(0.5 * dtau, opts.omega / op.max_rate(delta));
            op.alpha_sum = saved;
        }
        w.swap(trial);
    }
    out.w = ScalarField(q.fast_grid, 0.0, std::move(w));
    out.residual = discrete_cell_residual(m, q, delta, out.w);
    require(out.residual <= 1e-8, ErrorKind::NonConvergence,
            "cell residual check failed: " + std::to_string(out.residual));
    return out;
}

EffectiveValue effective_hamiltonian(const HamiltonianModel& m, const CellQuery& q, const CellOptions& opts) {
    check_query(m, q);
    const auto& ds = q.deltas;
    require(ds.size() >= 2, ErrorKind::Config, "delta schedule needs at least two entries");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        require(ds[i] > 0.0, ErrorKind::Config, "delta schedule must be positive");
        if (i) require(ds[i] < ds[i - 1], ErrorKind::Config, "delta schedule must be strictly decreasing");
    }
    const std::size_t y0 = center_node(*q.fast_grid);
    EffectiveValue ev;
    auto& dg = ev.diagnostics;
    ScalarField prev;
    for (std::size_t n = 0; n < ds.size(); ++n) {
        ScalarField start;
        if (n) {
            start = prev;
            for (double& v : start.values) v *= ds[n - 1] / ds[n];
        }
        auto sol = solve_discounted(m, q, ds[n], opts, n ? &start : nullptr);
        const auto [lo, hi] = std::minmax_element(sol.w.values.begin(), sol.w.values.end());
        dg.per_delta.push_back(-ds[n] * sol.w[y0]);
        dg.spreads.push_back(ds[n] * (*hi - *lo));
        dg.iterations.push_back(sol.iterations);
        prev = std::move(sol.w);
    }
    const std::size_t L = ds.size() - 1;
    const double a = ds[L - 1], b = ds[L];
    ev.value = (a * dg.per_delta[L] - b * dg.per_delta[L - 1]) / (a - b);
    dg.spread = dg.spreads.back();
    dg.flagged = dg.spread > 1e-2;
    return ev;
}

namespace {

double snap(double s) {
    const double r = std::round(s);
    return std::abs(s - r) < 1e-9 ? r : s;
}

}  // namespace

double HbarTable::value(double x, double p) const {
    const double hx = x_axis.h(), hp = p_axis.h();
    const double sx = snap((x - x_axis.lo) / hx), sp = snap((p - p_axis.lo) / hp);
    const auto ix = static_cast<std::size_t>(std::clamp(std::floor(sx), 0.0, double(x_axis.n - 2)));
    const auto ip = static_cast<std::size_t>(std::clamp(std::floor(sp), 0.0, double(p_axis.n - 2)));
    const double fx = sx - double(ix), fp = sp - double(ip);
    return (1 - fx) * ((1 - fp) * at(ix, ip) + fp * at(ix, ip + 1)) + fx * ((1 - fp) * at(ix + 1, ip) + fp * at(ix + 1, ip + 1));
}

double HbarTable::dvalue_dp(double x, double p) const {
    const double hx = x_axis.h(), hp = p_axis.h();
    const double sx = snap((x - x_axis.lo) / hx), sp = snap((p - p_axis.lo) / hp);
    const auto ix = static_cast<std::size_t>(std::clamp(std::floor(sx), 0.0, double(x_axis.n - 2)));
    const auto ip = static_cast<std::size_t>(std::clamp(std::floor(sp), 0.0, double(p_axis.n - 2)));
    const double fx = sx - double(ix);
    return ((1 - fx) * (at(ix, ip + 1) - at(ix, ip)) + fx * (at(ix + 1, ip + 1) - at(ix + 1, ip))) / hp;
}

std::size_t HbarTable::flagged_count() const { return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true)); }

HbarTable tabulate_hbar(const Axis& x_axis, const Axis& p_axis, const CellTemplate& tpl, std::size_t jobs) {
    x_axis.validate("xbar axis");
    p_axis.validate("pbar axis");
    require(tpl.model.d1 == 1, ErrorKind::Config, "tabulation supports one slow dimension");
    HbarTable t;
    t.x_axis = x_axis;
    t.p_axis = p_axis;
    const std::size_t n = x_axis.n * p_axis.n;
    t.values.assign(n, 0.0);
    t.spreads.assign(n, 0.0);
    std::vector<char> flags(n, 0);
    parallel_for(n, jobs, [&](std::size_t e) {
        CellQuery q;
        q.x_bar[0] = x_axis.coord(e / p_axis.n);
        q.p_bar[0] = p_axis.coord(e % p_axis.n);
        q.deltas = tpl.deltas;
        q.fast_grid = tpl.fast_grid;
        const auto ev = effective_hamiltonian(tpl.model, q, tpl.options);
        t.values[e] = ev.value;
        t.spreads[e] = ev.diagnostics.spread;
        flags[e] = ev.diagnostics.flagged ? 1 : 0;
    });
    t.flagged.assign(flags.begin(), flags.end());
    for (double v : t.values) require(std::isfinite(v), ErrorKind::Numerical, "non-finite table entry");
    return t;
}

HamiltonianModel limit_model(const HbarTable& table) {
    auto tab = std::make_shared<const HbarTable>(table);
    HamiltonianModel m;
    m.key = "hbar_table";
    m.d1 = 1;
    m.d2 = 0;
    m.fast_exponent = 0.0;
    m.predicted_rate = 0.0;
    m.separable = true;
    m.eval = [tab](const Vec& x, const Vec&, const Vec& p, const Vec&) { return tab->value(x[0], p[0]); };
    m.grad_p = [tab](const Vec& x, const Vec&, const Vec& p, const Vec&) { return Vec{tab->dvalue_dp(x[0], p[0]), 0, 0}; };
    m.grad_q = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    m.grad_y = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    return m;
}

HamiltonianModel limit_model(const SlowPart& slow) {
    HamiltonianModel m;
    m.key = "hbar_" + slow.name;
    m.d1 = 1;
    m.d2 = 0;
    m.fast_exponent = 0.0;
    m.predicted_rate = 0.0;
    m.separable = true;
    m.eval = [slow](const Vec& x, const Vec&, const Vec& p, const Vec&) { return slow.value(x, p); };
    m.grad_p = [slow](const Vec& x, const Vec&, const Vec& p, const Vec&) { return slow.grad_p(x, p); };
    m.grad_q = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    m.grad_y = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    return m;
}

namespace {

constexpr char kTableMagic[4] = {'S', 'P', 'H', 'T'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    require(static_cast<bool>(is), ErrorKind::Io, "truncated table file");
    return v;
}

}  // namespace

void write_table_binary(const HbarTable& t, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path);
    write_table_binary(t, os);
    require(static_cast<bool>(os), ErrorKind::Io, "write failed: " + path);
}

void write_table_binary(const HbarTable& t, std::ostream& os) {
    os.write(kTableMagic, 4);
    put<std::uint32_t>(os, 1);
    for (const Axis* a : {&t.x_axis, &t.p_axis}) {
        put<double>(os, a->lo);
        put<double>(os, a->hi);
        put<std::uint64_t>(os, a->n);
    }
    for (double v : t.values) put<double>(os, v);
    for (double v : t.spreads) put<double>(os, v);
    for (bool f : t.flagged) put<std::uint8_t>(os, f ? 1 : 0);
}

HbarTable read_table_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(static_cast<bool>(is) && std::memcmp(magic, kTableMagic, 4) == 0, ErrorKind::Io, "bad table magic");
    require(get<std::uint32_t>(is) == 1, ErrorKind::Io, "unsupported table version");
    HbarTable t;
    for (Axis* a : {&t.x_axis, &t.p_axis}) {
        a->lo = get<double>(is);
        a->hi = get<double>(is);
        a->n = get<std::uint64_t>(is);
        a->validate("table axis");
    }
    const std::size_t n = t.x_axis.n * t.p_axis.n;
    t.values.resize(n);
    t.spreads.resize(n);
    t.flagged.resize(n);
    for (auto& v : t.values) v = get<double>(is);
    for (auto& v : t.spreads) v = get<double>(is);
    for (std::size_t i = 0; i < n; ++i) t.flagged[i] = get<std::uint8_t>(is) != 0;
    return t;
}

}  // namespace sphj
