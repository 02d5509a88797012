#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fsmooth {

using State = std::span<const double>;
using Out = std::span<double>;

// Coefficient callbacks write into caller-owned buffers so the simulation
// loops never allocate. Matrices are row-major.
using VectorField = std::function<void(double t, State x, Out out)>;
using ScalarField = std::function<double(double t, State x)>;

// Upper bounds declared by the model author; Hilbert-Schmidt norms for
// matrices, Euclidean for vectors.
struct ModelBounds {
    double sigma_sup = 0.0;
    double sigma_inv_sup = 0.0;
    double drift_sup = 0.0;
    double potential_sup = 0.0;
    double potential_grad_sup = 0.0;
};

// dX = sigma(t,X) dB + b(t,X) dt on [0, T] with potential k entering the
// backward equation as +k v.
struct DiffusionModel {
    std::string name;
    std::size_t dim = 1;
    double horizon = 1.0;
    std::vector<double> x0;

    VectorField sigma;   // d x d
    VectorField drift;   // d
    ScalarField potential;

    // State derivatives; any may be empty.
    // sigma_jacobian writes d*d*d values, entry [l][i][m] = d sigma_{i,l} / d x_m,
    // i.e. the Jacobian of the l-th column of sigma.
    VectorField sigma_jacobian;
    VectorField drift_jacobian;      // [i][m] = d b_i / d x_m
    VectorField potential_gradient;  // [m] = d k / d x_m

    ModelBounds bounds;

    // sigma, b and k do not depend on (t, x); a single Euler step is then exact
    // in law for X_T and for stochastic integrals of deterministic integrands.
    bool constant_coefficients = false;
    // Central differences stand in for missing state derivatives.
    bool finite_difference_fallback = true;

    [[nodiscard]] bool zero_potential() const noexcept { return bounds.potential_sup == 0.0; }
};

enum class Regularity { lipschitz, hoelder, indicator, custom };

// Catalog payoffs functions of the first coordinate only; the closed-form
// and one-dimensional quadrature oracles key off this.
enum class PayoffShape { custom, linear, indicator, call, power, sqrt_pos };

struct TerminalFunction {
    std::string name;
    std::function<double(State x)> eval;
    double growth_K = 1.0;
    double growth_kappa = 0.0;
    Regularity regularity = Regularity::custom;
    double hoelder_exponent = 1.0;

    PayoffShape shape = PayoffShape::custom;
    double strike = 0.0;
    double exponent = 1.0;
    // Depends on x_1 only, with jumps or kinks at these x_1 values.
    bool first_coordinate_only = false;
    std::vector<double> breakpoints;

    double operator()(State x) const { return eval(x); }
};

struct ProbeBox {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct ValidationOptions {
    std::size_t n_probe = 1000;
    std::uint64_t seed = 1;
    // Defaults to [x0 - 5 sqrt(T), x0 + 5 sqrt(T)]^d.
    std::optional<ProbeBox> box;
};

struct BoundViolation {
    std::string quantity;
    double observed = 0.0;
    double declared = 0.0;
    double t = 0.0;
    std::vector<double> x;
};

struct ValidationReport {
    std::size_t n_probe = 0;
    double sigma_max = 0.0;
    double sigma_inv_max = 0.0;
    double drift_max = 0.0;
    double potential_max = 0.0;
    double potential_grad_max = 0.0;
    double growth_max = 0.0;  // max |g(x)| exp(-K_g |x|^kappa_g)
    std::vector<BoundViolation> violations;

    [[nodiscard]] bool passed() const noexcept { return violations.empty(); }
};

// Probes (C1)-(C3)-type bounds at random points of the box. The first probe
// is the box centre at t = 0. Throws NumericalError on non-finite
// coefficients, naming the probe point.
ValidationReport validate_model(const DiffusionModel& model, const TerminalFunction& g,
                                const ValidationOptions& options = {});

// Derivative access with the finite-difference fallback.
void eval_sigma_jacobian(const DiffusionModel& model, double t, State x, Out out);
void eval_drift_jacobian(const DiffusionModel& model, double t, State x, Out out);
void eval_potential_gradient(const DiffusionModel& model, double t, State x, Out out);

struct ModelParams {
    std::size_t dim = 1;
    double horizon = 1.0;
    std::vector<double> x0;  // empty: origin
    double rate = 0.1;       // bm-rate
    double beta = 1.0;       // bm-drifted
    double epsilon = 0.5;    // bounded-sine, |epsilon| < 1
};

struct TerminalParams {
    double strike = 0.0;
    double alpha = 0.5;  // power exponent in (0, 1)
};

DiffusionModel make_model(const std::string& name, const ModelParams& params = {});
TerminalFunction make_terminal(const std::string& name, const TerminalParams& params = {});

const std::vector<std::string>& model_names();
const std::vector<std::string>& terminal_names();

struct CatalogEntry {
    std::string name;  // "<model>+<terminal>"
    DiffusionModel model;
    TerminalFunction terminal;
};

// Every model paired with every terminal function at default parameters.
std::vector<CatalogEntry> builtin_catalog();

}  // namespace fsmooth
