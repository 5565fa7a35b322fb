#include "sphj/grid.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sphj/error.hpp"

namespace sphj {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

void Axis::validate(const std::string& what) const {
    require(std::isfinite(lo) && std::isfinite(hi), ErrorKind::Config, what + ": non-finite bounds");
    require(lo < hi, ErrorKind::Config, what + ": need lo < hi");
    require(n >= 3, ErrorKind::Config, what + ": need at least 3 nodes");
}

Grid::Grid(std::vector<Axis> slow, std::vector<Axis> fast, double tf, double safety)
    : t_final(tf), cfl_safety(safety), slow_(std::move(slow)), fast_(std::move(fast)) {
    require(!slow_.empty() || !fast_.empty(), ErrorKind::Config, "grid has no axes");
    require(dims() <= kMaxDim, ErrorKind::Config, "at most 3 axes in total");
    for (std::size_t k = 0; k < dims(); ++k) axis(k).validate("axis " + std::to_string(k));
    require(std::isfinite(tf) && tf > 0.0, ErrorKind::Config, "t_final must be positive");
    require(safety > 0.0 && safety <= 1.0, ErrorKind::Config, "cfl_safety must lie in (0,1]");
    count_ = 1;
    for (std::size_t k = dims(); k-- > 0;) {
        stride_[k] = count_;
        count_ *= axis(k).n;
    }
}

void Grid::coords(std::size_t node, Vec& x, Vec& y) const {
    for (std::size_t k = 0; k < slow_.size(); ++k) x[k] = coord(node, k);
    for (std::size_t k = 0; k < fast_.size(); ++k) y[k] = coord(node, slow_.size() + k);
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < dims(); ++k) v *= axis(k).h();
    return v;
}

GridPtr build_grid(std::vector<Axis> slow_axes, std::vector<Axis> fast_axes, double t_final, double cfl_safety) {
    return std::make_shared<const Grid>(std::move(slow_axes), std::move(fast_axes), t_final, cfl_safety);
}

ScalarField::ScalarField(GridPtr g, double time, std::vector<double> v)
    : grid(std::move(g)), t(time), values(std::move(v)) {
    require_arg(values.size() == grid->node_count(), "field size does not match grid");
}

bool Window::contains(const Grid& g, std::size_t node) const {
    if (full) return true;
    double r2 = 0.0;
    for (std::size_t k = g.d1(); k < g.dims(); ++k) {
        const double y = g.coord(node, k);
        r2 += y * y;
    }
    return r2 <= radius * radius * (1.0 + 1e-12);
}

void Window::validate(const Grid& g) const {
    if (full) return;
    require(radius >= 0.0 && std::isfinite(radius), ErrorKind::Config, "window radius must be nonnegative");
    require(g.d2() > 0, ErrorKind::Config, "window on a grid without fast axes");
    for (const auto& a : g.fast_axes())
        require(radius <= std::min(-a.lo, a.hi) * (1.0 + 1e-12), ErrorKind::Config,
                "window radius " + std::to_string(radius) + " exceeds the fast axes");
}

std::vector<std::size_t> window_nodes(const Grid& g, const Window& w) {
    w.validate(g);
    std::vector<std::size_t> out;
    out.reserve(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i)
        if (w.contains(g, i)) out.push_back(i);
    return out;
}

ScalarField upwind_gradient(const ScalarField& f, std::size_t k, int speed_sign) {
    const Grid& g = *f.grid;
    require_arg(k < g.dims(), "axis index out of range");
    const Axis& a = g.axis(k);
    const double h = a.h();
    const std::size_t s = g.stride(k);
    ScalarField out(f.grid, f.t);
    for (std::size_t node = 0; node < g.node_count(); ++node) {
        const std::size_t i = g.index_along(node, k);
        const bool has_left = i > 0, has_right = i + 1 < a.n;
        const double back = has_left ? (f[node] - f[node - s]) / h : 0.0;
        const double fwd = has_right ? (f[node + s] - f[node]) / h : 0.0;
        double d;
        if (speed_sign > 0)
            d = has_left ? back : fwd;
        else if (speed_sign < 0)
            d = has_right ? fwd : back;
        else if (has_left && has_right)
            d = (f[node + s] - f[node - s]) / (2.0 * h);
        else
            d = has_left ? back : fwd;
        out[node] = d;
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const Grid& g = *f.grid;
    ScalarField out(f.grid, f.t);
    for (std::size_t k = 0; k < g.dims(); ++k) {
        const Axis& a = g.axis(k);
        const double ih2 = 1.0 / (a.h() * a.h());
        const std::size_t s = g.stride(k);
        for (std::size_t node = 0; node < g.node_count(); ++node) {
            const std::size_t i = g.index_along(node, k);
            // reflected ghost value keeps the normal derivative at zero
            const double left = i > 0 ? f[node - s] : f[node + s];
            const double right = i + 1 < a.n ? f[node + s] : f[node - s];
            out[node] += (left - 2.0 * f[node] + right) * ih2;
        }
    }
    return out;
}

double sup_norm(const ScalarField& f, const Window& w) {
    const Grid& g = *f.grid;
    w.validate(g);
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (w.contains(g, i)) m = std::max(m, std::abs(f[i]));
    return m;
}

double sup_diff(const ScalarField& a, const ScalarField& b, const Window& w) {
    require_arg(a.grid->same_space(*b.grid), "fields live on different grids");
    const Grid& g = *a.grid;
    w.validate(g);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (w.contains(g, i)) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void write_field_csv(const ScalarField& f, const std::string& path) {
    const Grid& g = *f.grid;
    std::FILE* fp = std::fopen(path.c_str(), "w");
    require(fp != nullptr, ErrorKind::Io, "cannot open " + path);
    for (std::size_t k = 0; k < g.d1(); ++k) std::fprintf(fp, "x%zu,", k);
    for (std::size_t k = 0; k < g.d2(); ++k) std::fprintf(fp, "y%zu,", k);
    std::fprintf(fp, "value\n");
    for (std::size_t node = 0; node < g.node_count(); ++node) {
        for (std::size_t k = 0; k < g.dims(); ++k) std::fprintf(fp, "%.17g,", g.coord(node, k));
        std::fprintf(fp, "%.17g\n", f[node]);
    }
    std::fclose(fp);
}

namespace {

constexpr char kFieldMagic[4] = {'S', 'P', 'H', 'F'};

template <class T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(static_cast<bool>(is), ErrorKind::Io, "truncated field file");
    return v;
}

}  // namespace

// header: magic[4] version d1 d2 reserved node_count(u64); then (lo, hi, n) per axis, t_final, t, payload
void write_field_binary(const ScalarField& f, const std::string& path) {
    const Grid& g = *f.grid;
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::Io, "cannot open " + path);
    os.write(kFieldMagic, 4);
    put<std::uint8_t>(os, 1);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(g.d1()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(g.d2()));
    put<std::uint8_t>(os, 0);
    put<std::uint64_t>(os, g.node_count());
    for (std::size_t k = 0; k < g.dims(); ++k) {
        put<double>(os, g.axis(k).lo);
        put<double>(os, g.axis(k).hi);
        put<std::uint64_t>(os, g.axis(k).n);
    }
    put<double>(os, g.t_final);
    put<double>(os, f.t);
    os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
    require(static_cast<bool>(os), ErrorKind::Io, "write failed: " + path);
}

ScalarField read_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(static_cast<bool>(is) && std::memcmp(magic, kFieldMagic, 4) == 0, ErrorKind::Io, "bad field magic");
    require(get<std::uint8_t>(is) == 1, ErrorKind::Io, "unsupported field version");
    const auto d1 = get<std::uint8_t>(is);
    const auto d2 = get<std::uint8_t>(is);
    get<std::uint8_t>(is);
    const auto count = get<std::uint64_t>(is);
    std::vector<Axis> slow, fast;
    for (std::size_t k = 0; k < std::size_t(d1) + d2; ++k) {
        Axis a;
        a.lo = get<double>(is);
        a.hi = get<double>(is);
        a.n = get<std::uint64_t>(is);
        (k < d1 ? slow : fast).push_back(a);
    }
    const double tf = get<double>(is);
    const double t = get<double>(is);
    auto g = build_grid(std::move(slow), std::move(fast), tf, 0.5);
    require(g->node_count() == count, ErrorKind::Io, "node count mismatch in " + path);
    std::vector<double> v(count);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
    require(static_cast<bool>(is), ErrorKind::Io, "truncated payload in " + path);
    return ScalarField(g, t, std::move(v));
}

}  // namespace sphj
