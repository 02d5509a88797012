#include "fsmooth/smoothness.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fsmooth {

const char* verdict_name(Verdict v) noexcept {
    switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::inconsistent: return "inconsistent";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "unknown";
}

ThetaEstimate estimate_theta(const NormCurve& curve, const ThetaOptions& opt) {
    ThetaEstimate out;
    const std::size_t n = curve.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return curve.times[a] < curve.times[b]; });
    const auto n_drop = static_cast<std::size_t>(std::floor(opt.drop_far_fraction * static_cast<double>(n)));
    std::vector<double> x, y, w;
    bool all_se = true;
    for (std::size_t r = n_drop; r < n; ++r) {
        const std::size_t i = order[r];
        const double v = curve.values[i];
        const double se = curve.std_errors.empty() ? 0.0 : curve.std_errors[i];
        if (!(v > opt.zero_band * se) || v <= 0.0) continue;
        if (se >= opt.max_relative_se * v) continue;
        x.push_back(std::log(curve.horizon - curve.times[i]));
        y.push_back(std::log(v));
        w.push_back(se > 0.0 ? (v / se) * (v / se) : 1.0);
        all_se = all_se && se > 0.0;
    }
    out.n_used = x.size();
    if (x.size() < opt.min_points) {
        std::ostringstream os;
        os << "only " << x.size() << " usable points (need " << opt.min_points << ")";
        out.note = os.str();
        return out;
    }
    const auto fit = all_se ? fit_line(x, y, w) : fit_line(x, y);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.theta = static_cast<double>(curve_order(curve.kind)) + 2.0 * fit.slope;
    out.std_error = 2.0 * fit.slope_se;
    out.conclusive = std::isfinite(out.theta) && std::isfinite(out.std_error);
    out.in_range = out.theta > 0.0 && out.theta <= 1.25;
    if (!out.in_range) out.note = "theta estimate outside (0, 1.25]";
    return out;
}

namespace {

constexpr std::array<std::array<std::size_t, 2>, 3> kPairs{{{0, 1}, {0, 2}, {1, 2}}};
constexpr std::array<const char*, 3> kPairNames{"i-ii", "i-iii", "ii-iii"};

}  // namespace

std::array<PairVerdict, 3> compare_pairs(const std::array<ThetaEstimate, 3>& est,
                                         const std::array<PhiLadder, 3>& ladders, const EquivalenceOptions& opt) {
    std::array<PairVerdict, 3> out;
    for (std::size_t k = 0; k < 3; ++k) {
        const auto [a, b] = kPairs[k];
        PairVerdict& pv = out[k];
        pv.pair = kPairNames[k];
        pv.ladders_agree = ladders[a].classification == ladders[b].classification;
        pv.theta_gap = std::abs(est[a].theta - est[b].theta);
        pv.joint_se = std::hypot(est[a].std_error, est[b].std_error);
        if (!pv.ladders_agree) {
            pv.verdict = Verdict::inconsistent;
        } else if (!est[a].conclusive || !est[b].conclusive) {
            pv.verdict = Verdict::inconclusive;
        } else if (pv.theta_gap <= std::max(opt.tolerance, opt.consistent_se * pv.joint_se)) {
            pv.verdict = Verdict::consistent;
        } else if (pv.theta_gap > std::max(opt.tolerance, opt.inconsistent_se * pv.joint_se)) {
            pv.verdict = Verdict::inconsistent;
        } else {
            pv.verdict = Verdict::inconclusive;
        }
    }
    return out;
}

Verdict overall_verdict(const std::array<PairVerdict, 3>& pairs) noexcept {
    bool all = true;
    for (const auto& p : pairs) {
        if (p.verdict == Verdict::inconsistent) return Verdict::inconsistent;
        all = all && p.verdict == Verdict::consistent;
    }
    return all ? Verdict::consistent : Verdict::inconclusive;
}

SmoothnessReport assess_curves(std::array<NormCurve, 3> curves, const EquivalenceOptions& opt) {
    require(opt.theta > 0.0 && opt.theta < 1.0, "equivalence: theta must lie in (0, 1)");
    require(opt.q >= 2.0, "equivalence: q must lie in [2, inf]");
    SmoothnessReport r;
    r.p = opt.p;
    r.q = opt.q;
    r.theta = opt.theta;
    r.measure = curves[0].measure;
    for (std::size_t k = 0; k < 3; ++k) {
        r.estimates[k] = estimate_theta(curves[k], opt.fit);
        r.ladders[k] = phi_q(curves[k], opt.q, (static_cast<double>(k) - opt.theta) / 2.0, opt.ladder);
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const auto [a, b] = kPairs[k];
        const auto& va = r.ladders[a].values;
        const auto& vb = r.ladders[b].values;
        for (std::size_t j = 0; j < va.size(); ++j) r.ladder_ratios[k].push_back(va[j] / vb[j]);
    }
    r.pairs = compare_pairs(r.estimates, r.ladders, opt);
    r.verdict = overall_verdict(r.pairs);
    r.curves = std::move(curves);
    return r;
}

SmoothnessReport verify_equivalence(const DiffusionModel& model, const TerminalFunction& g,
                                    const GirsanovDrift& drift, const ValueOracle& oracle,
                                    const EquivalenceOptions& opt) {
    require(opt.p >= 2.0 && std::isfinite(opt.p), "equivalence: p must lie in [2, inf)");
    require(std::isfinite(drift.gamma_sup), "equivalence: drift must be bounded");
    CurveOptions co = opt.curve;
    co.p = opt.p;
    const auto grid = opt.t_grid.empty() ? default_curve_times(model.horizon) : opt.t_grid;
    std::array<NormCurve, 3> curves{residual_curve(model, g, drift, grid, co),
                                    gradient_curve(model, drift, oracle, grid, co),
                                    hessian_curve(model, drift, oracle, grid, co)};
    for (auto& c : curves) c.q = opt.q;
    return assess_curves(std::move(curves), opt);
}

namespace {

// Tail exponent b of f ~ tau^b from the last two points.
double tail_integral(double f1, double tau1, double f2, double tau2) {
    if (f2 <= 0.0) return 0.0;
    if (f1 <= 0.0) return f2 * tau2;
    const double b = std::log(f2 / f1) / std::log(tau2 / tau1);
    if (!(b > -1.0)) return std::numeric_limits<double>::infinity();
    return f2 * tau2 / (b + 1.0);
}

}  // namespace

InterpolationReport interpolation_check(std::span<const double> times, std::span<const double> d0,
                                        std::span<const double> d1, std::span<const double> d2, double T,
                                        double theta, double q, double A, double D, const PhiOptions& ladder) {
    const std::size_t n = times.size();
    require(n >= 2 && d0.size() == n && d1.size() == n && d2.size() == n,
            "interpolation_check: curves must share one grid of at least two points");
    require(theta > 0.0 && theta < 1.0, "interpolation_check: theta must lie in (0, 1)");
    require(q >= 2.0, "interpolation_check: q must lie in [2, inf]");
    require(A >= 0.0 && D >= 1.0, "interpolation_check: need A >= 0 and D >= 1");
    check_grid(times, "interpolation_check");
    require(times.front() >= 0.0 && times.back() < T, "interpolation_check: grid must lie in [0, T)");

    std::vector<double> tau(n), u(n);
    for (std::size_t i = 0; i < n; ++i) {
        tau[i] = T - times[i];
        u[i] = -std::log(tau[i]);
    }
    // int_t^T [d1]^2 ds at each grid point (ds = tau du).
    std::vector<double> upper(n);
    upper[n - 1] = tail_integral(d1[n - 2] * d1[n - 2], tau[n - 2], d1[n - 1] * d1[n - 1], tau[n - 1]);
    for (std::size_t i = n - 1; i-- > 0;) {
        const double f0 = d1[i] * d1[i] * tau[i];
        const double f1 = d1[i + 1] * d1[i + 1] * tau[i + 1];
        upper[i] = upper[i + 1] + 0.5 * (f0 + f1) * (u[i + 1] - u[i]);
    }
    // int_0^t [d2]^2 du.
    std::vector<double> lower(n);
    lower[0] = d2[0] * d2[0] * times[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double f0 = d2[i - 1] * d2[i - 1] * tau[i - 1];
        const double f1 = d2[i] * d2[i] * tau[i];
        lower[i] = lower[i - 1] + 0.5 * (f0 + f1) * (u[i] - u[i - 1]);
    }

    InterpolationReport r;
    double dmin = 1.0;
    auto check = [&](const char* name, double t, double lhs, double rhs) {
        if (lhs > rhs * (1.0 + 1e-12) + 1e-300) r.violations.push_back({name, t, lhs, rhs});
    };
    auto need = [&](double num, double den) {
        if (num <= 0.0) return;
        dmin = std::max(dmin, den > 0.0 ? num / den : std::numeric_limits<double>::infinity());
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double t = times[i];
        const double s1 = std::sqrt(tau[i]) * d1[i];
        const double s2 = tau[i] * d2[i];
        const double iu = std::sqrt(upper[i]);
        const double il = std::sqrt(lower[i]);
        check("lower-k1", t, s1 / D, d0[i]);
        check("lower-k2", t, s2 / D, d0[i]);
        check("upper-d0", t, d0[i], D * iu);
        check("d1", t, d1[i], A + D * il);
        need(s1, d0[i]);
        need(s2, d0[i]);
        need(d0[i], iu);
        need(d1[i] - A, il);
    }
    r.hypotheses_hold = r.violations.empty();
    r.minimal_D = dmin;

    const std::array<std::span<const double>, 3> d{d0, d1, d2};
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
        r.ladders[k] = phi_q(times, d[k], T, q, (static_cast<double>(k) - theta) / 2.0, ladder);
        r.quantities[k] = A + r.ladders[k].values.back();
        lo = std::min(lo, r.quantities[k]);
        hi = std::max(hi, r.quantities[k]);
    }
    r.bracket_finite = std::isfinite(hi) && lo > 0.0;
    r.bracket = r.bracket_finite ? hi / lo : std::numeric_limits<double>::infinity();
    return r;
}

ThetaOneReport theta_one_diagnostic(const DiffusionModel& model, const TerminalFunction& g,
                                    const ValueOracle& oracle, const CurveOptions& options,
                                    std::span<const double> t_grid, const PhiOptions& ladder) {
    const auto grid = t_grid.empty() ? default_curve_times(model.horizon)
                                     : std::vector<double>(t_grid.begin(), t_grid.end());
    const auto q0 = zero_drift();
    ThetaOneReport r;
    r.gradient = gradient_curve(model, q0, oracle, grid, options);
    r.hessian = hessian_curve(model, q0, oracle, grid, options);
    const double inf = std::numeric_limits<double>::infinity();
    r.gradient.q = inf;
    r.hessian.q = inf;
    r.gradient_ladder = phi_q(r.gradient, inf, 0.0, ladder);
    r.hessian_ladder = phi_q(r.hessian, inf, 0.5, ladder);
    std::ostringstream os;
    os << g.name << ", qualitative: sup G_p ladder " << ladder_class_name(r.gradient_ladder.classification)
       << "; sup (T-t)^{1/2} H_p ladder " << ladder_class_name(r.hessian_ladder.classification);
    r.summary = os.str();
    return r;
}

}  // namespace fsmooth
