#pragma once
#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace sphj {

inline constexpr std::size_t kMaxDim = 3;
using Vec = std::array<double, kMaxDim>;

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 3;

    double h() const { return (hi - lo) / static_cast<double>(n - 1); }
    double coord(std::size_t i) const { return lo + h() * static_cast<double>(i); }
    double half_width() const { return 0.5 * (hi - lo); }
    void validate(const std::string& what) const;
    bool operator==(const Axis&) const = default;
};

// Node order is row-major, slow axes first, last axis varies fastest.
class Grid {
public:
    Grid() = default;
    Grid(std::vector<Axis> slow, std::vector<Axis> fast, double t_final, double cfl_safety);

    const std::vector<Axis>& slow_axes() const { return slow_; }
    const std::vector<Axis>& fast_axes() const { return fast_; }
    std::size_t d1() const { return slow_.size(); }
    std::size_t d2() const { return fast_.size(); }
    std::size_t dims() const { return slow_.size() + fast_.size(); }
    const Axis& axis(std::size_t k) const { return k < slow_.size() ? slow_[k] : fast_[k - slow_.size()]; }
    bool is_fast(std::size_t k) const { return k >= slow_.size(); }

    std::size_t node_count() const { return count_; }
    std::size_t stride(std::size_t k) const { return stride_[k]; }
    std::size_t index_along(std::size_t node, std::size_t k) const { return (node / stride_[k]) % axis(k).n; }
    double coord(std::size_t node, std::size_t k) const { return axis(k).coord(index_along(node, k)); }
    // fills x (slow) and y (fast) coordinates of a node
    void coords(std::size_t node, Vec& x, Vec& y) const;
    double cell_volume() const;

    double t_final = 1.0;
    // 0 means adaptive stepping; a positive value is a fixed step that must satisfy the CFL bound
    double dt = 0.0;
    double cfl_safety = 0.5;

    bool same_space(const Grid& o) const { return slow_ == o.slow_ && fast_ == o.fast_; }

private:
    std::vector<Axis> slow_;
    std::vector<Axis> fast_;
    std::array<std::size_t, kMaxDim> stride_{};
    std::size_t count_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(std::vector<Axis> slow_axes, std::vector<Axis> fast_axes, double t_final, double cfl_safety);

struct ScalarField {
    GridPtr grid;
    double t = 0.0;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(GridPtr g, double time) : grid(std::move(g)), t(time), values(grid->node_count(), 0.0) {}
    ScalarField(GridPtr g, double time, std::vector<double> v);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
};

// B_r around the origin of the fast coordinates
struct Window {
    bool full = true;
    double radius = 0.0;

    static Window all() { return {}; }
    static Window ball(double r) { return {false, r}; }
    bool contains(const Grid& g, std::size_t node) const;
    void validate(const Grid& g) const;
};

ScalarField upwind_gradient(const ScalarField& f, std::size_t axis_index, int speed_sign);
ScalarField laplacian(const ScalarField& f);
double sup_norm(const ScalarField& f, const Window& w = Window::all());
double sup_diff(const ScalarField& a, const ScalarField& b, const Window& w = Window::all());

// nodes of g that lie in the window, cached by callers in hot loops
std::vector<std::size_t> window_nodes(const Grid& g, const Window& w);

void write_field_csv(const ScalarField& f, const std::string& path);
void write_field_binary(const ScalarField& f, const std::string& path);
ScalarField read_field_binary(const std::string& path);

}  // namespace sphj
