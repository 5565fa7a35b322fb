#pragma once
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sphj/grid.hpp"
#include "sphj/hamiltonian.hpp"

namespace sphj {

struct DatumParams {
    double width = 0.25;        // bump length scale
    double wall_at = 8.0;       // radius where the confining ramp starts
    double wall_width = 0.5;
    double wall_height = 1.0;
    double slow_amplitude = 0.25;
    double value = 0.0;         // for "constant"
    double slope = 1.0;         // for "linear_x" / "linear_y"
    double shift = 0.0;         // translation of the fast profile
};

struct InitialDatum {
    std::string key;
    std::function<double(const Vec& x, const Vec& y)> eval;
};

std::vector<std::string> datum_keys();
InitialDatum make_datum(const std::string& key, const DatumParams& params = {});

enum class Direction { Forward, Backward };

// adds a node field to H at marching time tau (e.g. coupling costs); values sized to the grid
using RunningCost = std::function<void(double tau, std::vector<double>& extra)>;

struct CauchyProblem {
    HamiltonianModel model;
    double eps = 1.0;
    InitialDatum u0;
    double sigma = 0.0;
    Direction direction = Direction::Forward;
    RunningCost running_cost;
};

struct SolveOptions {
    std::vector<double> output_times;  // physical times that must be hit exactly
    std::size_t store_every = 0;       // 0: only output times plus endpoints
    double memory_cap_mb = 256.0;
    std::size_t max_steps = 50'000'000;
    // evaluate the initial rate only, no stepping
    bool dry_run = false;
};

struct SliceDiag {
    double t = 0.0;
    long step = 0;
    double dt_last = 0.0;
    double cfl_max = 0.0;  // largest dt * rate since the previous stored slice
    double sup = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct SolveDiagnostics {
    long steps = 0;
    double dt_min = 0.0;
    double dt_max = 0.0;
    std::string binding;  // constraint that set the smallest step
    double initial_rate = 0.0;  // largest per-node rate at the initial datum
    std::vector<SliceDiag> history;
};

struct SolveOutput {
    std::shared_ptr<const CauchyProblem> problem;
    GridPtr grid;
    std::vector<ScalarField> trajectory;  // time stamps monotone in marching order
    SolveDiagnostics diagnostics;

    const ScalarField& nearest(double t) const;
    const ScalarField& final() const { return trajectory.back(); }
    // central difference in the interior, one-sided at the boundary
    ScalarField gradient(std::size_t slice, std::size_t axis) const;
};

double fast_scale(const HamiltonianModel& m, double eps);

SolveOutput solve_viscous(const CauchyProblem& pb, GridPtr grid, const SolveOptions& opts = {});

struct ViscosityReport {
    std::vector<double> sigmas;
    std::vector<double> gaps;  // sup-norm gap at the final time between consecutive schedule entries
    ScalarField extrapolated;  // linear Richardson step towards sigma = 0
};

struct VanishingViscosityResult {
    SolveOutput output;
    ViscosityReport report;
};

VanishingViscosityResult solve_vanishing_viscosity(const CauchyProblem& pb, GridPtr grid,
                                                   const std::vector<double>& sigma_schedule,
                                                   const SolveOptions& opts = {});

// coordinate change u(t, x, y) -> u(t, x, y / eps^kappa) onto the scaled fast axes
SolveOutput rescale_fast(const SolveOutput& out, double eps);
SolveOutput rescale_fast(const SolveOutput& out, double eps, GridPtr target);

double fast_gradient_norm(const SolveOutput& out, double t, const Window& w);

struct SearchSet {
    std::vector<Vec> xs;
    std::vector<Vec> ys;
    std::size_t d1 = 1;
    std::size_t d2 = 1;
};

SearchSet search_from_grid(const Grid& g);
SearchSet search_lines(std::vector<double> xs, std::vector<double> ys);

// exhaustive min of |x-x'|^2/(2t) + c_eps |y-y'|^g'/(g' t^(g'-1)) + u0(x', y') with c_eps = eps^(g'-1)
double hopf_lax_oracle(const InitialDatum& u0, double t, const Vec& x, const Vec& y, double eps, const SearchSet& s,
                       double gamma = 2.0);

}  // namespace sphj
