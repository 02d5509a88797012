#pragma once

#include "fsmooth/functionals.hpp"
#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/valuation.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fsmooth {

struct ThetaOptions {
    double drop_far_fraction = 0.2;  // largest T - t excluded from the fit
    double zero_band = 2.0;          // drop points with value <= zero_band * SE
    double max_relative_se = 0.2;    // drop points with SE >= this * value
    std::size_t min_points = 10;
};

struct ThetaEstimate {
    double theta = 0.0;
    double std_error = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t n_used = 0;
    bool conclusive = false;
    bool in_range = false;  // theta in (0, 1.25]
    std::string note;
};

// Weighted least squares of log value on log(T - t); the slope s maps to
// theta = 2s (residual), 1 + 2s (gradient), 2 + 2s (hessian).
ThetaEstimate estimate_theta(const NormCurve& curve, const ThetaOptions& options = {});

enum class Verdict { consistent, inconsistent, inconclusive };
const char* verdict_name(Verdict v) noexcept;

struct PairVerdict {
    std::string pair;  // "i-ii", "i-iii", "ii-iii"
    double theta_gap = 0.0;
    double joint_se = 0.0;
    bool ladders_agree = true;
    Verdict verdict = Verdict::inconclusive;
};

struct EquivalenceOptions {
    double p = 2.0;
    double q = std::numeric_limits<double>::infinity();
    double theta = 0.5;
    CurveOptions curve;  // curve.p is overwritten by p
    std::vector<double> t_grid;  // empty: default_curve_times
    ThetaOptions fit;
    PhiOptions ladder;
    double tolerance = 0.1;
    double consistent_se = 3.0;
    double inconsistent_se = 5.0;
};

struct SmoothnessReport {
    double p = 2.0;
    double q = 0.0;
    double theta = 0.0;
    std::string measure;
    std::array<NormCurve, 3> curves;       // residual, gradient, hessian
    std::array<ThetaEstimate, 3> estimates;
    std::array<PhiLadder, 3> ladders;      // at exponents (k - theta)/2
    // ratio[pair][level] of ladder values, pairs ordered as in `pairs`.
    std::array<std::vector<double>, 3> ladder_ratios;
    std::array<PairVerdict, 3> pairs;
    Verdict verdict = Verdict::inconclusive;
};

// Pairwise verdicts from estimates and ladders.
std::array<PairVerdict, 3> compare_pairs(const std::array<ThetaEstimate, 3>& est,
                                         const std::array<PhiLadder, 3>& ladders, const EquivalenceOptions& options);
Verdict overall_verdict(const std::array<PairVerdict, 3>& pairs) noexcept;

// All three curves, ladders and estimates for (g, drift), then the verdicts.
SmoothnessReport verify_equivalence(const DiffusionModel& model, const TerminalFunction& g,
                                    const GirsanovDrift& drift, const ValueOracle& oracle,
                                    const EquivalenceOptions& options);

// Post-processing of precomputed curves; verify_equivalence calls this.
SmoothnessReport assess_curves(std::array<NormCurve, 3> curves, const EquivalenceOptions& options);

struct InterpolationViolation {
    std::string inequality;  // "lower-k1", "lower-k2", "upper-d0", "d1"
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct InterpolationReport {
    bool hypotheses_hold = true;
    std::vector<InterpolationViolation> violations;
    double minimal_D = 1.0;  // smallest D >= 1 for which all inequalities hold on the grid
    std::array<double, 3> quantities{};  // A + Phi_q((T-t)^{(k-theta)/2} d^k) at the finest truncation
    std::array<PhiLadder, 3> ladders;
    double bracket = std::numeric_limits<double>::infinity();  // max / min of quantities
    bool bracket_finite = false;
};

// Checks (1/D)(T-t)^{k/2} d^k <= d^0 <= D (int_t^T [d^1]^2)^{1/2} for k = 1, 2 and
// d^1 <= A + D (int_0^t [d^2]^2)^{1/2} on the grid, then the three-way bracket.
// Integrals use the trapezoid rule in u = -log(T - t); the tail beyond the last
// point follows the power law of the last two points; values before the first
// point are held constant.
InterpolationReport interpolation_check(std::span<const double> times, std::span<const double> d0,
                                        std::span<const double> d1, std::span<const double> d2, double T,
                                        double theta, double q, double A, double D, const PhiOptions& ladder = {});

struct ThetaOneReport {
    NormCurve gradient;
    NormCurve hessian;
    PhiLadder gradient_ladder;  // sup of G_p
    PhiLadder hessian_ladder;   // sup of (T-t)^{1/2} H_p
    std::string summary;
};

// Qualitative picture at theta = 1, q = inf under P = Q.
ThetaOneReport theta_one_diagnostic(const DiffusionModel& model, const TerminalFunction& g,
                                    const ValueOracle& oracle, const CurveOptions& options,
                                    std::span<const double> t_grid = {}, const PhiOptions& ladder = {});

}  // namespace fsmooth
