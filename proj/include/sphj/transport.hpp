#pragma once
#include <array>
#include <vector>

#include "sphj/grid.hpp"

namespace sphj {

struct DensityField {
    GridPtr grid;
    double t = 0.0;
    std::vector<double> values;

    DensityField() = default;
    DensityField(GridPtr g, double time) : grid(std::move(g)), t(time), values(grid->node_count(), 0.0) {}
    double mass() const;
    double min() const;
    void normalize();
};

// unit-mass Gaussian bump centred at (x, y) with the given width
DensityField gaussian_bump(GridPtr g, const Vec& x_center, const Vec& y_center, double width, double t = 0.0);

// Face velocities per axis; entry i of axis k belongs to the face between node i and node i + stride(k).
struct FaceVelocity {
    std::array<std::vector<double>, kMaxDim> c;
    explicit FaceVelocity(std::size_t n = 0) {
        for (auto& v : c) v.assign(n, 0.0);
    }
};

// largest per-node outflow rate, so dt * rate <= 1 keeps the update positive
double transport_rate(const Grid& g, const FaceVelocity& vel, double sigma);

// one conservative upwind finite-volume step of rho_t + div(c rho) = sigma Lap rho with no-flux walls
void transport_step(const Grid& g, std::vector<double>& rho, const FaceVelocity& vel, double sigma, double dt,
                    std::vector<double>& scratch);

// exact 1D W1 as the integral of |CDF_a - CDF_b| on a shared axis
double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& b, const Axis& axis);
double wasserstein1_1d(const DensityField& a, const DensityField& b);

// marginal density along one axis of a multi-axis field
std::vector<double> marginal(const DensityField& f, std::size_t axis);

struct MarginalW1 {
    std::array<double, kMaxDim> per_axis{};
    double proxy = 0.0;  // maximum of the marginal distances, a lower bound for the full W1
};
MarginalW1 marginal_w1(const DensityField& a, const DensityField& b);

// optimal transport between discrete measures by min-cost flow (successive shortest paths)
double transport_lp(const std::vector<std::vector<double>>& cost, const std::vector<double>& supply,
                    const std::vector<double>& demand);
// exact W1 for small multi-axis supports using the Euclidean ground cost
double wasserstein1_exact(const DensityField& a, const DensityField& b, std::size_t max_support = 256);

}  // namespace sphj
