#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sphj/grid.hpp"

namespace sphj {

struct Jet {
    double value = 0.0;
    Vec dp{};
    Vec dq{};
};

using ScalarFn = std::function<double(const Vec& x, const Vec& y, const Vec& p, const Vec& q)>;
using VectorFn = std::function<Vec(const Vec& x, const Vec& y, const Vec& p, const Vec& q)>;
using JetFn = std::function<Jet(const Vec& x, const Vec& y, const Vec& p, const Vec& q)>;
using BoundJet = std::function<Jet(const Vec& p, const Vec& q)>;

struct ModelFlags {
    bool nonneg = false;
    bool convex_p = false;
    bool convex_q = false;
};

// How the fast momentum is scaled inside the singularly perturbed equation:
// the solver evaluates H(x, y, p, q * eps^-kappa) with kappa = fast_exponent.
struct HamiltonianModel {
    std::string key;
    std::size_t d1 = 1;
    std::size_t d2 = 1;
    double gamma = 2.0;
    double c_h = 1.0;
    double fast_exponent = 0.5;
    // exponent of eps in the predicted stability and limit rates
    double predicted_rate = 0.5;
    ModelFlags flags;
    // H = S(x, p) + F(y, q)
    bool separable = false;

    ScalarFn eval;
    VectorFn grad_p;
    VectorFn grad_q;
    VectorFn grad_y;
    // optional fused value+momentum gradients
    JetFn jet;
    // optional: freeze (x, y) once, evaluate many momenta
    std::function<BoundJet(const Vec& x, const Vec& y)> bind;

    Jet evaluate(const Vec& x, const Vec& y, const Vec& p, const Vec& q) const;
    double conjugate_gamma() const { return gamma / (gamma - 1.0); }
};

// slow part S(x, p) with its analytic momentum gradient
struct SlowPart {
    std::string name;
    std::function<double(const Vec& x, const Vec& p)> value;
    std::function<Vec(const Vec& x, const Vec& p)> grad_p;
    std::function<Vec(const Vec& x, const Vec& p)> grad_x;
};

SlowPart slow_kinetic(std::size_t d1 = 1);
// (1 + cos(x0)/4) |p|^2 / 2
SlowPart slow_variable_kinetic(std::size_t d1 = 1);
SlowPart slow_constant(double c, std::size_t d1 = 1);

HamiltonianModel make_quadratic(const SlowPart& slow, std::size_t d2 = 1);
HamiltonianModel make_gamma_power(const SlowPart& slow, double gamma, std::size_t d2 = 1);
// S(x, p) + |q|^2/2 + 1 - cos y
HamiltonianModel make_pendulum(const SlowPart& slow);
HamiltonianModel fully_nonlinear_demo();

struct ControlSet {
    std::size_t dim = 1;
    Vec lo{};
    Vec hi{};
    std::vector<Vec> points;
};

ControlSet uniform_controls(double lo, double hi, std::size_t n);

struct GameData {
    std::function<Vec(const Vec& x, const Vec& y, const Vec& a, const Vec& b)> f;
    std::function<Vec(const Vec& x, const Vec& y, const Vec& a, const Vec& b)> g;
    std::function<double(const Vec& x, const Vec& y, const Vec& a, const Vec& b)> L;
    std::size_t d1 = 1;
    std::size_t d2 = 1;
};

// min over B of max over A of {-<p,f> - <q,g> - L}
HamiltonianModel isaacs_upper(const GameData& data, const ControlSet& A, const ControlSet& B);
// max over A of min over B of the same payoff
HamiltonianModel isaacs_lower(const GameData& data, const ControlSet& A, const ControlSet& B);
GameData isaacs_demo_game();

struct AssumptionSample {
    Vec x{}, y{}, p{}, q{};
};

std::vector<AssumptionSample> sample_cloud(const HamiltonianModel& m, std::size_t n, std::uint64_t seed,
                                           double state_radius = 3.0, double momentum_radius = 3.0);

struct InequalityCheck {
    std::string name;
    double worst_margin = 0.0;  // min over the cloud of (rhs - lhs), >= 0 means satisfied
    double worst_ratio = 0.0;   // max over the cloud of lhs / rhs where rhs > 0
    std::size_t violations = 0;
    bool pass = true;
};

struct AssumptionReport {
    double c_h = 0.0;
    InequalityCheck nonneg;
    InequalityCheck growth_y;    // |d_y H| <= C (1 + |p|^g + |q|^g)
    InequalityCheck coercivity;  // <H_p,p> + <H_q,q> - H >= C^-1 (|p|^g + |q|^g) - C
    bool convexity_consistent = true;
    bool pass() const { return nonneg.pass && growth_y.pass && coercivity.pass && convexity_consistent; }
};

AssumptionReport check_assumptions(const HamiltonianModel& m, const std::vector<AssumptionSample>& cloud);

// view of a (mollified) spatial density used by coupled running costs
struct MeasureView {
    const Axis* axis = nullptr;
    const std::vector<double>* density = nullptr;
    double at(double x) const;
};

struct LagrangianModel {
    std::function<double(const Vec& x, const Vec& v, const MeasureView& mu)> eval;
    double bound = 0.0;
    std::function<double(double)> modulus;
    bool measure_dependent = false;
};

struct LegendreValue {
    double value = 0.0;
    Vec maximizer{};
    std::size_t index = 0;
};

LegendreValue legendre_h0(const LagrangianModel& L, const ControlSet& v_set, const Vec& x, const Vec& p,
                          const MeasureView& mu);

// registry keyed by the names used in config files
std::vector<std::string> model_keys();
bool has_model(const std::string& key);
struct ModelParams {
    double gamma = 3.0;
    std::size_t controls = 41;
    bool singleton_a = false;
};
HamiltonianModel make_model(const std::string& key, const ModelParams& params = {});

}  // namespace sphj
