#pragma once
#include <iosfwd>
#include <vector>

#include "sphj/grid.hpp"
#include "sphj/hamiltonian.hpp"

namespace sphj {

struct CellOptions {
    double omega = 0.5;  // pseudo-time CFL number
    std::size_t max_iters = 100'000;
    double tol = 1e-9;
    // shift by the midrange of the residual each sweep; exact because the scheme ignores constants
    bool shift = true;
};

struct CellQuery {
    Vec x_bar{};
    Vec p_bar{};
    std::vector<double> deltas{1e-1, 5e-2, 2.5e-2, 1.25e-2};
    GridPtr fast_grid;  // fast axes only
};

struct DiscountedSolution {
    ScalarField w;
    std::size_t iterations = 0;
    double residual = 0.0;  // sup norm of delta w + H(x, y, p, Dw) in the discrete sense
};

// Steady state of the pseudo-time relaxation w <- w - dtau (delta w + Hhat(w)), Hhat the local
// Lax-Friedrichs Hamiltonian of the solver, dtau = omega / (delta + max sum_k alpha_k / h_k).
// Warm start is optional; the residual of the returned field is checked against 1e-8.
DiscountedSolution solve_discounted(const HamiltonianModel& m, const CellQuery& q, double delta,
                                    const CellOptions& opts = {}, const ScalarField* warm = nullptr);

double discrete_cell_residual(const HamiltonianModel& m, const CellQuery& q, double delta, const ScalarField& w);

struct EffectiveDiagnostics {
    std::vector<double> per_delta;   // -delta w_delta(y0)
    std::vector<double> spreads;     // sup_y - inf_y of delta w_delta
    std::vector<std::size_t> iterations;
    double spread = 0.0;             // at the smallest delta
    bool flagged = false;            // spread > 1e-2
};

struct EffectiveValue {
    double value = 0.0;
    EffectiveDiagnostics diagnostics;
};

EffectiveValue effective_hamiltonian(const HamiltonianModel& m, const CellQuery& q, const CellOptions& opts = {});

struct CellTemplate {
    HamiltonianModel model;
    GridPtr fast_grid;
    std::vector<double> deltas{1e-1, 5e-2, 2.5e-2, 1.25e-2};
    CellOptions options;
};

struct HbarTable {
    Axis x_axis;
    Axis p_axis;
    std::vector<double> values;  // index ix * p_axis.n + ip
    std::vector<double> spreads;
    std::vector<bool> flagged;

    double at(std::size_t ix, std::size_t ip) const { return values[ix * p_axis.n + ip]; }
    // bilinear interpolation, linear extrapolation past the table edges
    double value(double x, double p) const;
    double dvalue_dp(double x, double p) const;
    std::size_t flagged_count() const;
};

HbarTable tabulate_hbar(const Axis& x_axis, const Axis& p_axis, const CellTemplate& tpl, std::size_t jobs = 1);

// Hamiltonian of the limit equation (no fast variables)
HamiltonianModel limit_model(const HbarTable& table);
HamiltonianModel limit_model(const SlowPart& slow);

void write_table_binary(const HbarTable& t, const std::string& path);
void write_table_binary(const HbarTable& t, std::ostream& os);
HbarTable read_table_binary(const std::string& path);

}  // namespace sphj
