#pragma once
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sphj/cell_problem.hpp"
#include "sphj/hj_solver.hpp"

namespace sphj {

struct FitResult {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
    bool ok() const { return points >= 3 && std::isfinite(slope); }
};

// least squares of log e against log a; every entry must be positive
FitResult fit_order(const std::vector<double>& a, const std::vector<double>& e);

struct EpsSweep {
    CauchyProblem problem;  // eps is replaced per member
    GridPtr grid;
    std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05, 0.025};
    std::vector<double> t_list{0.25, 0.5, 1.0};
    Window window = Window::ball(6.0);
    Window gradient_window = Window::all();
    std::size_t jobs = 1;
    bool check_discretization = true;

    void validate() const;
};

struct SweepRun {
    std::vector<SolveOutput> members;  // one per eps, same order
    std::vector<double> seconds;
};

SweepRun run_sweep(const EpsSweep& s);

struct DiscretizationCheck {
    bool performed = false;
    double estimate = 0.0;  // sup over probe times of |u_h - u_2h| on the window, smallest eps
    double smallest_gap = 0.0;
    bool ok = true;         // estimate <= smallest_gap / 3
};

struct RateReport {
    std::string kind;
    std::vector<double> eps;             // abscissa of each error row
    std::vector<double> t_list;
    std::vector<std::vector<double>> errors;  // errors[i][j] at eps[i], t_list[j]
    std::vector<FitResult> fits;         // per probe time against log eps
    std::vector<FitResult> kappa_fits;   // per probe time against log(eps_i^k - eps_{i+1}^k); stability only
    std::vector<FitResult> time_fits;    // per eps against log t; gradient decay only
    double predicted = 0.0;
    std::vector<bool> degenerate_columns;
    bool degenerate = false;  // every column below the floor
    DiscretizationCheck discretization;
    bool refused = false;     // fits withheld because of the discretization check
    std::vector<std::string> notes;

    // worst distance of the fitted slopes to a band [lo, hi]; negative means outside
    double margin(double lo, double hi) const;
};

inline constexpr double kDegenerateFloor = 10.0 * std::numeric_limits<double>::epsilon();

RateReport stability_sweep(const EpsSweep& s, const SweepRun& run);
RateReport gradient_decay_fit(const EpsSweep& s, const SweepRun& run);

struct LimitProblem {
    HamiltonianModel model;  // H-bar as a slow-only model
    GridPtr slow_grid;
};

// slow-only grid sharing the slow axes and horizon of g
GridPtr slow_grid_of(const Grid& g);
// min over the fast nodes of g of u0(x, .)
InitialDatum limit_datum(const InitialDatum& u0, const Grid& g);
SolveOutput solve_limit(const LimitProblem& lp, const InitialDatum& u0, const Grid& g, const std::vector<double>& t_list);
RateReport limit_gap(const EpsSweep& s, const SweepRun& run, const LimitProblem& lp);

// min over stored slices and nodes of (hi - lo); both runs on one grid with matching slice times
double ordering_margin(const SolveOutput& hi, const SolveOutput& lo);

struct Scenario {
    std::string key;
    EpsSweep sweep;
    double band_lo = std::numeric_limits<double>::quiet_NaN();
    double band_hi = std::numeric_limits<double>::quiet_NaN();
    bool has_limit = false;
    CellTemplate cell;      // used to tabulate H-bar when has_limit
    Axis pbar_axis{-0.5, 0.5, 101};
};

std::vector<std::string> scenario_keys();
Scenario make_scenario(const std::string& key);

LimitProblem build_limit(const Scenario& sc, std::size_t jobs, HbarTable* table_out = nullptr);

}  // namespace sphj
