#include "sphj/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sphj/error.hpp"

namespace sphj {

namespace {

double dot(const Vec& a, const Vec& b, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

double norm2(const Vec& a, std::size_t d) { return dot(a, a, d); }

double pow_norm(const Vec& a, std::size_t d, double g) { return std::pow(std::sqrt(norm2(a, d)), g); }

Vec scaled(const Vec& a, double s, std::size_t d) {
    Vec r{};
    for (std::size_t k = 0; k < d; ++k) r[k] = s * a[k];
    return r;
}

}  // namespace

Jet HamiltonianModel::evaluate(const Vec& x, const Vec& y, const Vec& p, const Vec& q) const {
    if (jet) return jet(x, y, p, q);
    return {eval(x, y, p, q), grad_p(x, y, p, q), grad_q(x, y, p, q)};
}

SlowPart slow_kinetic(std::size_t d1) {
    SlowPart s;
    s.name = "kinetic";
    s.value = [d1](const Vec&, const Vec& p) { return 0.5 * norm2(p, d1); };
    s.grad_p = [d1](const Vec&, const Vec& p) { return scaled(p, 1.0, d1); };
    s.grad_x = [](const Vec&, const Vec&) { return Vec{}; };
    return s;
}

SlowPart slow_variable_kinetic(std::size_t d1) {
    SlowPart s;
    s.name = "variable_kinetic";
    s.value = [d1](const Vec& x, const Vec& p) { return 0.5 * (1.0 + 0.25 * std::cos(x[0])) * norm2(p, d1); };
    s.grad_p = [d1](const Vec& x, const Vec& p) { return scaled(p, 1.0 + 0.25 * std::cos(x[0]), d1); };
    s.grad_x = [d1](const Vec& x, const Vec& p) {
        Vec r{};
        r[0] = -0.125 * std::sin(x[0]) * norm2(p, d1);
        return r;
    };
    return s;
}

SlowPart slow_constant(double c, std::size_t) {
    SlowPart s;
    s.name = "constant";
    s.value = [c](const Vec&, const Vec&) { return c; };
    s.grad_p = [](const Vec&, const Vec&) { return Vec{}; };
    s.grad_x = [](const Vec&, const Vec&) { return Vec{}; };
    return s;
}

HamiltonianModel make_gamma_power(const SlowPart& slow, double gamma, std::size_t d2) {
    require(gamma > 1.0, ErrorKind::Config, "gamma_power needs gamma > 1");
    HamiltonianModel m;
    m.key = "gamma_power";
    m.d2 = d2;
    m.gamma = gamma;
    m.c_h = 2.0;
    m.fast_exponent = 1.0 / gamma;
    m.predicted_rate = 1.0 / m.conjugate_gamma();
    m.flags = {true, true, true};
    m.separable = true;
    const bool quad = gamma == 2.0;
    auto fast = [gamma, d2, quad](const Vec& q) {
        if (quad) return 0.5 * norm2(q, d2);
        return pow_norm(q, d2, gamma) / gamma;
    };
    auto fast_grad = [gamma, d2, quad](const Vec& q) {
        if (quad) return scaled(q, 1.0, d2);
        const double r = std::sqrt(norm2(q, d2));
        if (r == 0.0) return Vec{};
        return scaled(q, std::pow(r, gamma - 2.0), d2);
    };
    m.eval = [slow, fast](const Vec& x, const Vec&, const Vec& p, const Vec& q) { return slow.value(x, p) + fast(q); };
    m.grad_p = [slow](const Vec& x, const Vec&, const Vec& p, const Vec&) { return slow.grad_p(x, p); };
    m.grad_q = [fast_grad](const Vec&, const Vec&, const Vec&, const Vec& q) { return fast_grad(q); };
    m.grad_y = [](const Vec&, const Vec&, const Vec&, const Vec&) { return Vec{}; };
    m.jet = [slow, fast, fast_grad](const Vec& x, const Vec&, const Vec& p, const Vec& q) {
        return Jet{slow.value(x, p) + fast(q), slow.grad_p(x, p), fast_grad(q)};
    };
    return m;
}

HamiltonianModel make_quadratic(const SlowPart& slow, std::size_t d2) {
    HamiltonianModel m = make_gamma_power(slow, 2.0, d2);
    m.key = "quadratic";
    return m;
}

HamiltonianModel make_pendulum(const SlowPart& slow) {
    HamiltonianModel m;
    m.key = "pendulum";
    m.gamma = 2.0;
    m.c_h = 2.0;
    m.fast_exponent = 0.5;
    m.predicted_rate = 0.5;
    m.flags = {true, true, true};
    m.separable = true;
    auto sv = slow.value;
    auto sp = slow.grad_p;
    m.eval = [sv](const Vec& x, const Vec& y, const Vec& p, const Vec& q) {
        return sv(x, p) + 0.5 * q[0] * q[0] + 1.0 - std::cos(y[0]);
    };
    m.grad_p = [sp](const Vec& x, const Vec&, const Vec& p, const Vec&) { return sp(x, p); };
    m.grad_q = [](const Vec&, const Vec&, const Vec&, const Vec& q) { return Vec{q[0], 0, 0}; };
    m.grad_y = [](const Vec&, const Vec& y, const Vec&, const Vec&) { return Vec{std::sin(y[0]), 0, 0}; };
    return m;
}

HamiltonianModel fully_nonlinear_demo() {
    HamiltonianModel m;
    m.key = "fully_nonlinear_demo";
    m.gamma = 2.0;
    m.c_h = 4.0;
    m.fast_exponent = 1.0;
    m.predicted_rate = 1.0;
    m.flags = {true, true, true};
    m.separable = true;
    auto a = [](const Vec& x) { return 1.0 + 0.25 * std::cos(x[0]); };
    auto b = [](const Vec& y) { return 1.0 + 0.5 * std::sin(y[0]); };
    m.eval = [a, b](const Vec& x, const Vec& y, const Vec& p, const Vec& q) {
        const double q2 = q[0] * q[0];
        return 0.5 * a(x) * p[0] * p[0] + 0.5 * b(y) * q2 + 0.25 * (std::sqrt(1.0 + q2) - 1.0);
    };
    m.grad_p = [a](const Vec& x, const Vec&, const Vec& p, const Vec&) { return Vec{a(x) * p[0], 0, 0}; };
    m.grad_q = [b](const Vec&, const Vec& y, const Vec&, const Vec& q) {
        return Vec{b(y) * q[0] + 0.25 * q[0] / std::sqrt(1.0 + q[0] * q[0]), 0, 0};
    };
    m.grad_y = [](const Vec&, const Vec& y, const Vec&, const Vec& q) {
        return Vec{0.25 * std::cos(y[0]) * q[0] * q[0], 0, 0};
    };
    m.jet = [a, b](const Vec& x, const Vec& y, const Vec& p, const Vec& q) {
        const double ax = a(x), by = b(y), q2 = q[0] * q[0], s = std::sqrt(1.0 + q2);
        return Jet{0.5 * ax * p[0] * p[0] + 0.5 * by * q2 + 0.25 * (s - 1.0), {ax * p[0], 0, 0},
                   {by * q[0] + 0.25 * q[0] / s, 0, 0}};
    };
    return m;
}

ControlSet uniform_controls(double lo, double hi, std::size_t n) {
    require(n >= 1, ErrorKind::Config, "empty control set");
    require(lo <= hi, ErrorKind::Config, "control bounds reversed");
    ControlSet c;
    c.dim = 1;
    c.lo[0] = lo;
    c.hi[0] = hi;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        c.points.push_back(Vec{v, 0, 0});
    }
    return c;
}

namespace {

// Payoff table for one frozen state: index (b, a) -> f, g, L.
struct PayoffTable {
    std::size_t na = 0, nb = 0, d1 = 1, d2 = 1;
    std::vector<Vec> f, g;
    std::vector<double> L;

    PayoffTable(const GameData& data, const ControlSet& A, const ControlSet& B, const Vec& x, const Vec& y)
        : na(A.points.size()), nb(B.points.size()), d1(data.d1), d2(data.d2) {
        f.resize(na * nb);
        g.resize(na * nb);
        L.resize(na * nb);
        for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t i = 0; i < na; ++i) {
                const std::size_t k = j * na + i;
                f[k] = data.f(x, y, A.points[i], B.points[j]);
                g[k] = data.g(x, y, A.points[i], B.points[j]);
                L[k] = data.L(x, y, A.points[i], B.points[j]);
            }
    }

    double payoff(std::size_t k, const Vec& p, const Vec& q) const {
        return -dot(p, f[k], d1) - dot(q, g[k], d2) - L[k];
    }

    // returns the optimal flat index with ties broken by lowest control index
    std::size_t solve(const Vec& p, const Vec& q, bool upper, double& value) const {
        std::size_t best = 0;
        double outer = upper ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        const std::size_t n_out = upper ? nb : na, n_in = upper ? na : nb;
        for (std::size_t o = 0; o < n_out; ++o) {
            double inner = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t i = 0; i < n_in; ++i) {
                const std::size_t k = upper ? o * na + i : i * na + o;
                const double v = payoff(k, p, q);
                if (upper ? v > inner : v < inner) {
                    inner = v;
                    arg = k;
                }
            }
            if (upper ? inner < outer : inner > outer) {
                outer = inner;
                best = arg;
            }
        }
        value = outer;
        return best;
    }
};

HamiltonianModel isaacs_model(const GameData& data, const ControlSet& A, const ControlSet& B, bool upper) {
    require(!A.points.empty() && !B.points.empty(), ErrorKind::Config, "empty control set");
    HamiltonianModel m;
    m.key = upper ? "isaacs_upper" : "isaacs_lower";
    m.d1 = data.d1;
    m.d2 = data.d2;
    m.gamma = 1.0;
    m.c_h = 4.0;
    m.fast_exponent = 1.0;
    m.predicted_rate = 1.0;
    m.flags = {false, false, false};
    auto frozen_jet = [upper](const PayoffTable& t, const Vec& p, const Vec& q) {
        Jet j;
        const std::size_t k = t.solve(p, q, upper, j.value);
        for (std::size_t c = 0; c < t.d1; ++c) j.dp[c] = -t.f[k][c];
        for (std::size_t c = 0; c < t.d2; ++c) j.dq[c] = -t.g[k][c];
        return j;
    };
    m.jet = [data, A, B, frozen_jet](const Vec& x, const Vec& y, const Vec& p, const Vec& q) {
        return frozen_jet(PayoffTable(data, A, B, x, y), p, q);
    };
    m.eval = [jet = m.jet](const Vec& x, const Vec& y, const Vec& p, const Vec& q) { return jet(x, y, p, q).value; };
    m.grad_p = [jet = m.jet](const Vec& x, const Vec& y, const Vec& p, const Vec& q) { return jet(x, y, p, q).dp; };
    m.grad_q = [jet = m.jet](const Vec& x, const Vec& y, const Vec& p, const Vec& q) { return jet(x, y, p, q).dq; };
    m.grad_y = [data, A, B, upper](const Vec& x, const Vec& y, const Vec& p, const Vec& q) {
        PayoffTable t(data, A, B, x, y);
        double v;
        const std::size_t k = t.solve(p, q, upper, v);
        const std::size_t ia = k % t.na, ib = k / t.na;
        const Vec& a = A.points[ia];
        const Vec& b = B.points[ib];
        Vec out{};
        for (std::size_t c = 0; c < data.d2; ++c) {
            const double step = 1e-6 * std::max(1.0, std::abs(y[c]));
            Vec yp = y, ym = y;
            yp[c] += step;
            ym[c] -= step;
            auto frozen = [&](const Vec& yy) {
                return -dot(p, data.f(x, yy, a, b), data.d1) - dot(q, data.g(x, yy, a, b), data.d2) - data.L(x, yy, a, b);
            };
            out[c] = (frozen(yp) - frozen(ym)) / (2.0 * step);
        }
        return out;
    };
    m.bind = [data, A, B, frozen_jet](const Vec& x, const Vec& y) -> BoundJet {
        auto table = std::make_shared<const PayoffTable>(data, A, B, x, y);
        return [table, frozen_jet](const Vec& p, const Vec& q) { return frozen_jet(*table, p, q); };
    };
    return m;
}

}  // namespace

HamiltonianModel isaacs_upper(const GameData& data, const ControlSet& A, const ControlSet& B) {
    return isaacs_model(data, A, B, true);
}

HamiltonianModel isaacs_lower(const GameData& data, const ControlSet& A, const ControlSet& B) {
    return isaacs_model(data, A, B, false);
}

GameData isaacs_demo_game() {
    GameData d;
    d.f = [](const Vec&, const Vec&, const Vec& a, const Vec& b) { return Vec{a[0] + 0.5 * b[0], 0, 0}; };
    d.g = [](const Vec&, const Vec& y, const Vec& a, const Vec& b) {
        return Vec{a[0] + 0.25 * std::sin(y[0]) * b[0], 0, 0};
    };
    d.L = [](const Vec& x, const Vec&, const Vec& a, const Vec& b) {
        const double s = a[0] - b[0];
        return 0.25 * s * s - 0.1 * std::cos(x[0]);
    };
    return d;
}

std::vector<AssumptionSample> sample_cloud(const HamiltonianModel& m, std::size_t n, std::uint64_t seed,
                                           double state_radius, double momentum_radius) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> s(-state_radius, state_radius), mom(-momentum_radius, momentum_radius);
    std::vector<AssumptionSample> cloud(n);
    for (auto& c : cloud) {
        for (std::size_t k = 0; k < m.d1; ++k) {
            c.x[k] = s(rng);
            c.p[k] = mom(rng);
        }
        for (std::size_t k = 0; k < m.d2; ++k) {
            c.y[k] = s(rng);
            c.q[k] = mom(rng);
        }
    }
    return cloud;
}

namespace {

void record(InequalityCheck& c, double lhs, double rhs, bool first) {
    const double margin = rhs - lhs;
    if (first || margin < c.worst_margin) c.worst_margin = margin;
    if (rhs > 0.0) c.worst_ratio = std::max(c.worst_ratio, lhs / rhs);
    if (margin < -1e-12 * (1.0 + std::abs(rhs))) ++c.violations;
    c.pass = c.violations == 0;
}

}  // namespace

AssumptionReport check_assumptions(const HamiltonianModel& m, const std::vector<AssumptionSample>& cloud) {
    AssumptionReport r;
    r.c_h = m.c_h;
    r.nonneg.name = "nonneg";
    r.growth_y.name = "growth_y";
    r.coercivity.name = "coercivity";
    const double C = m.c_h, g = m.gamma;
    bool first = true;
    for (const auto& s : cloud) {
        const Jet j = m.evaluate(s.x, s.y, s.p, s.q);
        const Vec gy = m.grad_y(s.x, s.y, s.p, s.q);
        const double pg = pow_norm(s.p, m.d1, g), qg = pow_norm(s.q, m.d2, g);
        // H >= 0 written as lhs <= rhs with lhs = -H, rhs = 0
        record(r.nonneg, -j.value, 0.0, first);
        record(r.growth_y, std::sqrt(norm2(gy, m.d2)), C * (1.0 + pg + qg), first);
        const double lhs2 = dot(j.dp, s.p, m.d1) + dot(j.dq, s.q, m.d2) - j.value;
        // inequality is lhs2 >= C^-1 (...) - C, i.e. (C^-1(...) - C) <= lhs2
        record(r.coercivity, (pg + qg) / C - C, lhs2, first);
        first = false;
    }
    if (m.flags.convex_p || m.flags.convex_q) {
        const double step = 1e-2;
        for (const auto& s : cloud) {
            for (int which = 0; which < 2; ++which) {
                if ((which == 0 && !m.flags.convex_p) || (which == 1 && !m.flags.convex_q)) continue;
                const std::size_t d = which == 0 ? m.d1 : m.d2;
                for (std::size_t k = 0; k < d; ++k) {
                    Vec lo = which == 0 ? s.p : s.q, hi = lo;
                    lo[k] -= step;
                    hi[k] += step;
                    const double mid = m.eval(s.x, s.y, s.p, s.q);
                    const double a = which == 0 ? m.eval(s.x, s.y, lo, s.q) : m.eval(s.x, s.y, s.p, lo);
                    const double b = which == 0 ? m.eval(s.x, s.y, hi, s.q) : m.eval(s.x, s.y, s.p, hi);
                    if (a + b - 2.0 * mid < -1e-10 * (1.0 + std::abs(mid))) r.convexity_consistent = false;
                }
            }
        }
    }
    return r;
}

double MeasureView::at(double x) const {
    if (!axis || !density) return 0.0;
    const Axis& a = *axis;
    const double s = (x - a.lo) / a.h();
    if (s <= 0.0) return (*density)[0];
    if (s >= static_cast<double>(a.n - 1)) return (*density)[a.n - 1];
    const auto i = static_cast<std::size_t>(s);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * (*density)[i] + w * (*density)[i + 1];
}

LegendreValue legendre_h0(const LagrangianModel& L, const ControlSet& v_set, const Vec& x, const Vec& p,
                          const MeasureView& mu) {
    require(!v_set.points.empty(), ErrorKind::Config, "empty velocity set");
    LegendreValue best;
    best.value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v_set.points.size(); ++i) {
        const Vec& v = v_set.points[i];
        const double val = dot(p, v, v_set.dim) - L.eval(x, v, mu);
        if (val > best.value) {
            best.value = val;
            best.maximizer = v;
            best.index = i;
        }
    }
    return best;
}

std::vector<std::string> model_keys() {
    return {"quadratic", "gamma_power", "fully_nonlinear_demo", "pendulum", "isaacs_upper", "isaacs_lower"};
}

bool has_model(const std::string& key) {
    const auto keys = model_keys();
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

HamiltonianModel make_model(const std::string& key, const ModelParams& params) {
    if (key == "quadratic") return make_quadratic(slow_kinetic());
    if (key == "gamma_power") return make_gamma_power(slow_kinetic(), params.gamma);
    if (key == "fully_nonlinear_demo") return fully_nonlinear_demo();
    if (key == "pendulum") return make_pendulum(slow_kinetic());
    if (key == "isaacs_upper" || key == "isaacs_lower") {
        const ControlSet A = params.singleton_a ? uniform_controls(0.0, 0.0, 1) : uniform_controls(-1.0, 1.0, params.controls);
        const ControlSet B = uniform_controls(-1.0, 1.0, params.controls);
        return key == "isaacs_upper" ? isaacs_upper(isaacs_demo_game(), A, B) : isaacs_lower(isaacs_demo_game(), A, B);
    }
    throw Error(ErrorKind::Config, "unknown model key '" + key + "'");
}

}  // namespace sphj
