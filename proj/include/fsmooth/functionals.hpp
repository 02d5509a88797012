#pragma once

#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/valuation.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fsmooth {

enum class CurveKind { residual, residual_M, gradient, hessian };
const char* curve_kind_name(CurveKind k) noexcept;
// 0 for residual curves, 1 for gradient, 2 for hessian.
int curve_order(CurveKind k) noexcept;

// One smoothness quantity as a function of t on [0, T).
struct NormCurve {
    CurveKind kind = CurveKind::residual;
    double p = 2.0;
    double q = std::numeric_limits<double>::infinity();
    std::string measure = "Q";
    double horizon = 1.0;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> std_errors;
    std::size_t inner_budget = 0;
    // Residual curves only: the same estimate at twice the inner budget (the
    // first inner_budget inner paths are shared) and the subtracted
    // nested-sampling inflation of value^p (p = 2, P = Q).
    std::vector<double> values_double_budget;
    std::vector<double> std_errors_double_budget;
    std::vector<double> bias_correction;
    bool bias_corrected = false;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

// n points with T - t geometric from far*T down to near*T, increasing in t.
std::vector<double> default_curve_times(double T, std::size_t n = 40, double far = 0.9, double near = 1e-3);

struct CurveOptions {
    double p = 2.0;
    std::size_t n_outer = 2000;
    std::size_t n_inner = 2000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double max_dt = 0.02;
    bool double_budget = true;  // residual curves: also evaluate at 2 n_inner
    bool jackknife = true;      // residual curves, p = 2, P = Q
};

// Measure descriptor written into curves and reports: "Q" or "P[<drift>:<sup>]".
std::string measure_label(const GirsanovDrift& drift);

// ||g(X_T) - E_P[g(X_T) | F_t]||_{L_p(P)} by nested simulation.
NormCurve residual_curve(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                         std::span<const double> t_grid, const CurveOptions& options);
// As residual_curve with g(X_T) replaced by M_T = K_T^X g(X_T); same streams.
NormCurve residual_M_curve(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                           std::span<const double> t_grid, const CurveOptions& options);

// ||grad v(t, X_t)||_{L_p(P)} and ||D^2 v(t, X_t)||_{L_p(P)} (Euclidean and
// Hilbert-Schmidt norms) along outer paths, weighted by lambda_t.
NormCurve gradient_curve(const DiffusionModel& model, const GirsanovDrift& drift, const ValueOracle& oracle,
                         std::span<const double> t_grid, const CurveOptions& options);
NormCurve hessian_curve(const DiffusionModel& model, const GirsanovDrift& drift, const ValueOracle& oracle,
                        std::span<const double> t_grid, const CurveOptions& options);

// ||g(X_T) - E g(X_T)||_{L_p(P)} by plain Monte Carlo under P (the t = 0 value).
NormEstimate unconditional_residual(const DiffusionModel& model, const TerminalFunction& g,
                                    const GirsanovDrift& drift, double p, std::size_t n_paths, std::uint64_t seed,
                                    double max_dt = 0.02);

enum class LadderClass { bounded, divergent };
const char* ladder_class_name(LadderClass c) noexcept;

struct PhiLadder {
    double q = 0.0;
    double exponent = 0.0;
    std::vector<double> truncations;  // epsilon, largest first
    std::vector<double> values;
    LadderClass classification = LadderClass::bounded;
};

struct PhiOptions {
    std::size_t levels = 5;
    double growth = 0.02;           // relative growth per halving counted as "growing"
    std::size_t growth_run = 3;     // consecutive growing halvings that mean divergence
    std::size_t min_last_decade = 8;
};

// Phi_q((T-t)^a h(t)) = ||(T-t)^a h||_{L_q([0,T), dt/(T-t))}, trapezoid in
// u = -log(T-t), at truncations eps_min 2^{L-1-j}, j = 0..L-1, where eps_min is
// the smallest T - t on the curve. The first curve value is extended back to
// t = 0. q = inf takes the supremum over grid points.
PhiLadder phi_q(std::span<const double> times, std::span<const double> h, double T, double q, double a,
                const PhiOptions& options = {});
PhiLadder phi_q(const NormCurve& curve, double q, double a, const PhiOptions& options = {});

// Divergence rule applied to a ladder's values.
LadderClass classify_ladder(std::span<const double> values, const PhiOptions& options = {});

}  // namespace fsmooth
