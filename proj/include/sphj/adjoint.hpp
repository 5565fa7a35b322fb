#pragma once
#include <vector>

#include "sphj/hj_solver.hpp"
#include "sphj/transport.hpp"

namespace sphj {

struct DualDiagnostics {
    double max_mass_drift = 0.0;  // largest |mass - 1| over stored slices
    double min_value = 0.0;
    long substeps = 0;
    long clips = 0;  // undershoots below -1e-12 that were clipped and renormalized
};

// Backward solve of -rho_t - sigma Lap rho - div(grad_{p,q} G rho) = 0 along a frozen HJ trajectory,
// where G is the eps-scaled Hamiltonian.  Slices are stored at the HJ slice times, decreasing from tau.
struct DualRun {
    GridPtr grid;
    double tau = 0.0;
    double sigma = 0.0;
    std::vector<DensityField> trajectory;
    std::vector<std::size_t> u_slice;  // index into the HJ trajectory for each stored slice
    DualDiagnostics diagnostics;
};

DualRun solve_fokker_planck_dual(const SolveOutput& u, const DensityField& rho_tau, double sigma, double s_stop = 0.0);

double duality_residual(const SolveOutput& u, const DualRun& d, double s, double tau);

struct SupNormCertificate {
    double max_sup = 0.0;
    double initial_sup = 0.0;
    double slack = 0.0;
    double lipschitz = 0.0;
    bool applicable = true;  // false when the model is not flagged nonnegative
    bool pass = false;
};

SupNormCertificate supnorm_certificate(const SolveOutput& u);

double gamma_moment(const SolveOutput& u, const DualRun& d);

// node drift grad_{p,q} G at one HJ slice, per axis (slow components first)
std::array<std::vector<double>, kMaxDim> node_drift(const SolveOutput& u, std::size_t slice);

}  // namespace sphj
