#include "sphj/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sphj/error.hpp"

namespace sphj {

double DensityField::mass() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid->cell_volume();
}

double DensityField::min() const { return *std::min_element(values.begin(), values.end()); }

void DensityField::normalize() {
    const double m = mass();
    require(m > 0.0, ErrorKind::Numerical, "cannot normalize a density with zero mass");
    for (double& v : values) v /= m;
}

DensityField gaussian_bump(GridPtr g, const Vec& xc, const Vec& yc, double width, double t) {
    require(width > 0.0, ErrorKind::Config, "bump width must be positive");
    DensityField f(g, t);
    Vec x{}, y{};
    for (std::size_t i = 0; i < g->node_count(); ++i) {
        g->coords(i, x, y);
        double r2 = 0.0;
        for (std::size_t k = 0; k < g->d1(); ++k) r2 += (x[k] - xc[k]) * (x[k] - xc[k]);
        for (std::size_t k = 0; k < g->d2(); ++k) r2 += (y[k] - yc[k]) * (y[k] - yc[k]);
        f.values[i] = std::exp(-0.5 * r2 / (width * width));
    }
    f.normalize();
    return f;
}

double transport_rate(const Grid& g, const FaceVelocity& vel, double sigma) {
    double best = 0.0;
    const std::size_t N = g.node_count();
    for (std::size_t i = 0; i < N; ++i) {
        double r = 0.0;
        for (std::size_t k = 0; k < g.dims(); ++k) {
            const std::size_t s = g.stride(k), j = g.index_along(i, k);
            const double h = g.axis(k).h();
            if (j + 1 < g.axis(k).n) r += std::max(vel.c[k][i], 0.0) / h;
            if (j > 0) r += std::max(-vel.c[k][i - s], 0.0) / h;
            r += 2.0 * sigma / (h * h);
        }
        best = std::max(best, r);
    }
    return best;
}

void transport_step(const Grid& g, std::vector<double>& rho, const FaceVelocity& vel, double sigma, double dt,
                    std::vector<double>& next) {
    const std::size_t N = g.node_count();
    next = rho;
    for (std::size_t k = 0; k < g.dims(); ++k) {
        const std::size_t s = g.stride(k), n = g.axis(k).n;
        const double h = g.axis(k).h(), lam = dt / h;
        for (std::size_t i = 0; i < N; ++i) {
            if (g.index_along(i, k) + 1 >= n) continue;
            const double c = vel.c[k][i];
            const double flux = std::max(c, 0.0) * rho[i] + std::min(c, 0.0) * rho[i + s] - sigma * (rho[i + s] - rho[i]) / h;
            next[i] -= lam * flux;
            next[i + s] += lam * flux;
        }
    }
    rho.swap(next);
}

double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& b, const Axis& axis) {
    require_arg(a.size() == axis.n && b.size() == axis.n, "measures do not match the axis");
    double ma = 0.0, mb = 0.0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    require_arg(std::abs(ma - mb) <= 1e-6, "mass mismatch between measures");
    double ca = 0.0, cb = 0.0, acc = 0.0;
    const double h = axis.h();
    for (std::size_t i = 0; i + 1 < axis.n; ++i) {
        ca += a[i];
        cb += b[i];
        acc += std::abs(ca - cb) * h;
    }
    return acc;
}

std::vector<double> marginal(const DensityField& f, std::size_t axis) {
    const Grid& g = *f.grid;
    require_arg(axis < g.dims(), "axis index out of range");
    std::vector<double> m(g.axis(axis).n, 0.0);
    const double vol = g.cell_volume();
    for (std::size_t i = 0; i < g.node_count(); ++i) m[g.index_along(i, axis)] += f.values[i] * vol;
    return m;
}

double wasserstein1_1d(const DensityField& a, const DensityField& b) {
    require_arg(a.grid->same_space(*b.grid), "measures live on different grids");
    require_arg(a.grid->dims() == 1, "wasserstein1_1d needs a one-axis grid");
    return wasserstein1_1d(marginal(a, 0), marginal(b, 0), a.grid->axis(0));
}

MarginalW1 marginal_w1(const DensityField& a, const DensityField& b) {
    require_arg(a.grid->same_space(*b.grid), "measures live on different grids");
    MarginalW1 r;
    for (std::size_t k = 0; k < a.grid->dims(); ++k) {
        r.per_axis[k] = wasserstein1_1d(marginal(a, k), marginal(b, k), a.grid->axis(k));
        r.proxy = std::max(r.proxy, r.per_axis[k]);
    }
    return r;
}

double transport_lp(const std::vector<std::vector<double>>& cost, const std::vector<double>& supply,
                    const std::vector<double>& demand) {
    const std::size_t n = supply.size(), m = demand.size();
    require_arg(n > 0 && m > 0 && cost.size() == n, "transport problem shape mismatch");
    double ts = 0.0, td = 0.0;
    for (double v : supply) ts += v;
    for (double v : demand) td += v;
    require_arg(std::abs(ts - td) <= 1e-9 * std::max(1.0, ts), "supply and demand masses differ");
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kTol = 1e-15;
    // nodes: 0 source, 1..n supplies, n+1..n+m demands, n+m+1 sink
    const std::size_t V = n + m + 2, S = 0, T = n + m + 1;
    std::vector<double> rem_a = supply, rem_b = demand, pot(V, 0.0), dist(V);
    std::vector<std::vector<double>> flow(n, std::vector<double>(m, 0.0));
    std::vector<std::size_t> prev(V);
    std::vector<bool> done(V);
    auto arc = [&](std::size_t u, std::size_t v, double& cap, double& c) -> bool {
        if (u == S && v >= 1 && v <= n) { cap = rem_a[v - 1]; c = 0.0; return cap > kTol; }
        if (v == S && u >= 1 && u <= n) { cap = supply[u - 1] - rem_a[u - 1]; c = 0.0; return cap > kTol; }
        if (u >= 1 && u <= n && v > n && v < T) { cap = kInf; c = cost[u - 1][v - n - 1]; return true; }
        if (v >= 1 && v <= n && u > n && u < T) { cap = flow[v - 1][u - n - 1]; c = -cost[v - 1][u - n - 1]; return cap > kTol; }
        if (v == T && u > n && u < T) { cap = rem_b[u - n - 1]; c = 0.0; return cap > kTol; }
        if (u == T && v > n && v < T) { cap = demand[v - n - 1] - rem_b[v - n - 1]; c = 0.0; return cap > kTol; }
        return false;
    };
    double remaining = ts;
    for (std::size_t iter = 0; remaining > 1e-14 && iter < 100 * (n + m) * (n + m); ++iter) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(done.begin(), done.end(), false);
        dist[S] = 0.0;
        for (std::size_t it = 0; it < V; ++it) {
            std::size_t u = V;
            for (std::size_t v = 0; v < V; ++v)
                if (!done[v] && dist[v] < kInf && (u == V || dist[v] < dist[u])) u = v;
            if (u == V) break;
            done[u] = true;
            for (std::size_t v = 0; v < V; ++v) {
                if (done[v]) continue;
                double cap, c;
                if (!arc(u, v, cap, c)) continue;
                const double nd = dist[u] + std::max(0.0, c + pot[u] - pot[v]);
                if (nd < dist[v]) {
                    dist[v] = nd;
                    prev[v] = u;
                }
            }
        }
        if (dist[T] == kInf) break;
        for (std::size_t v = 0; v < V; ++v) pot[v] += dist[v] < kInf ? dist[v] : dist[T];
        double push = kInf;
        for (std::size_t v = T; v != S; v = prev[v]) {
            double cap, c;
            arc(prev[v], v, cap, c);
            push = std::min(push, cap);
        }
        for (std::size_t v = T; v != S; v = prev[v]) {
            const std::size_t u = prev[v];
            if (u == S) rem_a[v - 1] -= push;
            else if (v == S) rem_a[u - 1] += push;
            else if (v == T) rem_b[u - n - 1] -= push;
            else if (u == T) rem_b[v - n - 1] += push;
            else if (u <= n) flow[u - 1][v - n - 1] += push;
            else flow[v - 1][u - n - 1] -= push;
        }
        remaining -= push;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) total += flow[i][j] * cost[i][j];
    return total;
}

double wasserstein1_exact(const DensityField& a, const DensityField& b, std::size_t max_support) {
    require_arg(a.grid->same_space(*b.grid), "measures live on different grids");
    const Grid& g = *a.grid;
    const double vol = g.cell_volume();
    std::vector<std::size_t> ia, ib;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        if (a.values[i] > 0.0) ia.push_back(i);
        if (b.values[i] > 0.0) ib.push_back(i);
    }
    require_arg(ia.size() <= max_support && ib.size() <= max_support, "support too large for exact transport");
    std::vector<double> sa, sb;
    for (auto i : ia) sa.push_back(a.values[i] * vol);
    for (auto i : ib) sb.push_back(b.values[i] * vol);
    std::vector<std::vector<double>> cost(ia.size(), std::vector<double>(ib.size()));
    for (std::size_t r = 0; r < ia.size(); ++r)
        for (std::size_t c = 0; c < ib.size(); ++c) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < g.dims(); ++k) {
                const double d = g.coord(ia[r], k) - g.coord(ib[c], k);
                d2 += d * d;
            }
            cost[r][c] = std::sqrt(d2);
        }
    return transport_lp(cost, sa, sb);
}

}  // namespace sphj
