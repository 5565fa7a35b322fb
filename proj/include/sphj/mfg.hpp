#pragma once
#include <functional>
#include <string>
#include <vector>

#include "sphj/hamiltonian.hpp"
#include "sphj/hj_solver.hpp"
#include "sphj/rate_harness.hpp"
#include "sphj/transport.hpp"

namespace sphj {

// g(x, m_T); m_T enters through the mollified x-density
struct TerminalCost {
    std::function<double(double x, const MeasureView& m)> eval;
    bool measure_dependent = false;
};

// State grid: slow axis x, fast axis v (truncated).  grid->t_final is the horizon T.
struct MFGProblem {
    std::string key;
    LagrangianModel L0;
    TerminalCost g;
    DensityField mu0;
    double eps = 0.1;
    double sigma = 0.0;             // viscosity in both equations
    std::size_t time_slices = 40;   // coupling grid t_j = j T / time_slices
    double mollifier_width = 0.0;   // 0 selects 2 h_x

    GridPtr grid() const { return mu0.grid; }
    void validate() const;
};

struct MFGOptions {
    std::size_t max_iters = 200;
    double tol = 1e-6;
    double theta = 0.5;
    std::size_t jobs = 1;
};

struct FixedPointDiag {
    std::size_t iteration = 0;
    double du = 0.0;    // sup norm of the change of u over all coupling slices
    double dmu = 0.0;   // max over slices of the marginal W1 proxy between successive measures
    double theta = 0.0; // damping used to form the new measure
};

struct MFGState {
    SolveOutput u;                  // backward run, slices at the coupling times (decreasing t)
    std::vector<double> times;      // coupling times, increasing
    std::vector<DensityField> mu;   // one per coupling time
    const ScalarField& u_at(double t) const;
};

struct MFGResult {
    MFGState state;
    std::vector<FixedPointDiag> diagnostics;
    bool converged = false;
};

// Hamiltonian of the accelerated problem without running cost: |q|^2/2 - <p, v>, fast momentum scaled by eps^-1/2
HamiltonianModel acceleration_hamiltonian();

// x-density of the x-marginal smoothed by a hat kernel of the given half width
std::vector<double> mollified_density(const DensityField& mu, double width);

MFGResult solve_mfg_acc(const MFGProblem& pb, const MFGOptions& opts = {});

struct LimitMFGState {
    SolveOutput u;                  // on the slow grid
    std::vector<double> times;
    std::vector<DensityField> m;    // x-densities
    std::vector<DensityField> mu;   // image measures on the (x, v) grid
};

struct LimitMFGResult {
    LimitMFGState state;
    std::vector<FixedPointDiag> diagnostics;
    bool converged = false;
};

// velocity control set taken from the v axis of the problem grid
ControlSet velocity_nodes(const Grid& g);

LimitMFGResult solve_mfg_control_limit(const MFGProblem& pb, const MFGOptions& opts = {});

// max principle bound |g| + T |L0| over the grid, measures sampled from the run
double mfg_value_bound(const MFGProblem& pb, const MFGState& s);

struct MfgRateReport {
    RateReport report;                   // errors[i][j] at eps_i, probe t_j; fits per t
    std::vector<double> max_errors;      // max over probe times
    FitResult max_fit;
    std::vector<std::vector<double>> w1; // exploratory: marginal W1 proxy per pair and probe time
    std::vector<bool> converged;
    std::vector<std::size_t> iterations;
    std::vector<double> seconds;
    std::vector<MFGResult> members;
};

MfgRateReport mfg_rate_study(const MFGProblem& tpl, const std::vector<double>& eps_list,
                             const std::vector<double>& probe_times, double v_radius, const MFGOptions& opts = {});

std::vector<std::string> mfg_scenario_keys();
// "weak-coupling", "uncoupled", "constant-cost", "flat", "free"
MFGProblem make_mfg_scenario(const std::string& key, double eps = 0.1);

}  // namespace sphj
