#include "fsmooth/functionals.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/linalg.hpp"
#include "fsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fsmooth {

const char* curve_kind_name(CurveKind k) noexcept {
    switch (k) {
    case CurveKind::residual: return "residual";
    case CurveKind::residual_M: return "residual-M";
    case CurveKind::gradient: return "gradient";
    case CurveKind::hessian: return "hessian";
    }
    return "unknown";
}

int curve_order(CurveKind k) noexcept {
    switch (k) {
    case CurveKind::gradient: return 1;
    case CurveKind::hessian: return 2;
    default: return 0;
    }
}

const char* ladder_class_name(LadderClass c) noexcept {
    return c == LadderClass::bounded ? "bounded" : "divergent";
}

std::vector<double> default_curve_times(double T, std::size_t n, double far, double near) {
    require(T > 0.0 && n >= 2, "default_curve_times: need T > 0 and n >= 2");
    require(0.0 < near && near < far && far <= 1.0, "default_curve_times: need 0 < near < far <= 1");
    std::vector<double> t(n);
    const double ratio = near / far;
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = T * far * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n - 1));
        t[i] = T - tau;
    }
    return t;
}

std::string measure_label(const GirsanovDrift& drift) {
    if (drift.is_zero()) return "Q";
    std::ostringstream os;
    os.precision(17);
    os << "P[" << drift.name << ":" << drift.gamma_sup << "]";
    return os.str();
}

namespace {

void check_curve_inputs(const DiffusionModel& model, std::span<const double> t_grid, const CurveOptions& opt) {
    require(!t_grid.empty(), "curve: empty t grid");
    check_grid(t_grid, "curve t grid");
    require(t_grid.front() >= 0.0 && t_grid.back() < model.horizon, "curve: t grid must lie in [0, T)");
    require(opt.n_outer >= 1, "curve: n_outer must be >= 1");
}

struct InnerEstimate {
    double mean = 0.0;
    double variance = 0.0;  // unweighted sample variance of the inner values
};

InnerEstimate inner_estimate(std::span<const double> lr, std::span<const double> vals, bool weighted) {
    InnerEstimate e;
    const std::size_t n = vals.size();
    if (!weighted) {
        const auto m = mean_estimate(vals);
        e.mean = m.mean;
        e.variance = m.variance;
        return e;
    }
    const double shift = *std::max_element(lr.begin(), lr.end());
    std::vector<double> num(n), den(n);
    for (std::size_t i = 0; i < n; ++i) {
        den[i] = std::exp(lr[i] - shift);
        num[i] = den[i] * vals[i];
    }
    e.mean = compensated_sum(num) / compensated_sum(den);
    e.variance = mean_estimate(vals).variance;
    return e;
}

NormCurve residual_impl(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                        std::span<const double> t_grid, const CurveOptions& opt, bool with_potential) {
    check_curve_inputs(model, t_grid, opt);
    require(opt.p >= 2.0 && std::isfinite(opt.p), "residual curve: p must lie in [2, inf)");
    require(opt.n_inner >= 1, "residual curve: n_inner must be >= 1");
    require(t_grid.size() <= kMaxRestart, "residual curve: too many curve times");
    const double T = model.horizon;
    const auto grid = refine_grid(0.0, T, t_grid, outer_max_dt(model, drift, opt.max_dt));
    const auto paths = euler_maruyama(model, grid, opt.n_outer, opt.seed, opt.threads);
    const auto w = stochastic_exponential(paths, drift);
    const auto kf = k_factor(model, paths);
    const bool use_k = with_potential && !model.zero_potential();
    const bool weighted = !drift.is_zero();
    const bool jack = opt.jackknife && opt.p == 2.0 && !weighted;
    const std::size_t n = opt.n_inner;
    const std::size_t n_total = opt.double_budget ? 2 * n : n;
    const std::size_t n_outer = opt.n_outer;
    const std::size_t m = grid.size() - 1;

    std::vector<double> outer_z(n_outer), log_lt(n_outer);
    for (std::size_t i = 0; i < n_outer; ++i) {
        const double scale = use_k ? std::exp(kf.log_at(i, m)) : 1.0;
        outer_z[i] = scale * g(paths.state(i, m));
        log_lt[i] = w.log_terminal(i);
    }

    NormCurve c;
    c.kind = with_potential ? CurveKind::residual_M : CurveKind::residual;
    c.p = opt.p;
    c.measure = measure_label(drift);
    c.horizon = T;
    c.inner_budget = n;
    c.bias_corrected = jack;

    const std::size_t d = model.dim;
    std::vector<double> r1(n_outer), r2(n_outer), corr1(n_outer), corr2(n_outer);
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        const std::size_t j = grid_index(paths.times, t, "residual curve");
        const auto igrid = weighted_inner_grid(model, drift, t, opt.max_dt);
        parallel_for(n_outer, opt.threads, [&](std::size_t i) {
            EulerWorkspace ws(d);
            std::vector<double> gam(d), lr(n_total), vals(n_total);
            const StreamId base = StreamId{opt.seed, StreamPurpose::inner}
                                      .with_path(static_cast<std::uint32_t>(i))
                                      .with_restart(static_cast<std::uint32_t>(k));
            const auto x = paths.state(i, j);
            for (std::size_t s = 0; s < n_total; ++s) {
                std::copy(x.begin(), x.end(), ws.x.begin());
                NormalStream stream(base.with_inner(static_cast<std::uint32_t>(s)));
                const auto smp = simulate_weighted_path(model, drift, igrid, stream, ws, gam);
                lr[s] = smp.log_ratio;
                vals[s] = (use_k ? std::exp(smp.log_potential) : 1.0) * g(ws.x);
            }
            if (weighted) {
                const double top = *std::max_element(lr.begin(), lr.begin() + static_cast<std::ptrdiff_t>(n));
                if (!std::isfinite(top)) {
                    std::ostringstream os;
                    os.precision(17);
                    os << "degenerate inner normalisation at path " << i << ", t=" << t;
                    throw NumericalError("functionals", os.str());
                }
            }
            const double scale = use_k ? std::exp(kf.log_at(i, j)) : 1.0;
            const auto e1 = inner_estimate(std::span(lr).first(n), std::span(vals).first(n), weighted);
            r1[i] = outer_z[i] - scale * e1.mean;
            corr1[i] = scale * scale * e1.variance / static_cast<double>(n);
            if (opt.double_budget) {
                const auto e2 = inner_estimate(lr, vals, weighted);
                r2[i] = outer_z[i] - scale * e2.mean;
                corr2[i] = scale * scale * e2.variance / static_cast<double>(n_total);
            }
        });
        auto aggregate = [&](const std::vector<double>& r, const std::vector<double>& corr, double& value,
                             double& se, double* bias) {
            if (jack) {
                std::vector<double> z(n_outer);
                for (std::size_t i = 0; i < n_outer; ++i) z[i] = r[i] * r[i] - corr[i];
                const auto est = mean_estimate(z);
                value = std::sqrt(std::max(est.mean, 0.0));
                se = value > 0.0 ? est.std_error / (2.0 * value) : std::sqrt(est.std_error);
                if (bias) *bias = mean_estimate(corr).mean;
            } else {
                const auto est = weighted_lp_norm(r, log_lt, opt.p);
                value = est.value;
                se = est.std_error;
                if (bias) *bias = 0.0;
            }
        };
        double v = 0.0, se = 0.0, bias = 0.0;
        aggregate(r1, corr1, v, se, &bias);
        c.times.push_back(t);
        c.values.push_back(v);
        c.std_errors.push_back(se);
        c.bias_correction.push_back(bias);
        if (opt.double_budget) {
            aggregate(r2, corr2, v, se, nullptr);
            c.values_double_budget.push_back(v);
            c.std_errors_double_budget.push_back(se);
        }
    }
    return c;
}

NormCurve derivative_curve(const DiffusionModel& model, const GirsanovDrift& drift, const ValueOracle& oracle,
                           std::span<const double> t_grid, const CurveOptions& opt, CurveKind kind) {
    check_curve_inputs(model, t_grid, opt);
    require(opt.p >= 1.0 && std::isfinite(opt.p), "derivative curve: p must lie in [1, inf)");
    const double T = model.horizon;
    const auto grid = refine_grid(0.0, T, t_grid, outer_max_dt(model, drift, opt.max_dt));
    const auto paths = euler_maruyama(model, grid, opt.n_outer, opt.seed, opt.threads);
    const auto w = stochastic_exponential(paths, drift);
    const int order = curve_order(kind);
    NormCurve c;
    c.kind = kind;
    c.p = opt.p;
    c.measure = measure_label(drift);
    c.horizon = T;
    std::vector<double> vals(opt.n_outer);
    for (double t : t_grid) {
        const std::size_t j = grid_index(paths.times, t, "derivative curve");
        parallel_for(opt.n_outer, opt.threads, [&](std::size_t i) {
            const auto vd = oracle.evaluate(t, paths.state(i, j), order);
            vals[i] = order == 1 ? linalg::norm(vd.gradient) : linalg::norm(vd.hessian);
        });
        const auto est = weighted_lp_norm(vals, w.log_column(j), opt.p);
        c.times.push_back(t);
        c.values.push_back(est.value);
        c.std_errors.push_back(est.std_error);
    }
    return c;
}

}  // namespace

NormCurve residual_curve(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                         std::span<const double> t_grid, const CurveOptions& options) {
    return residual_impl(model, g, drift, t_grid, options, false);
}

NormCurve residual_M_curve(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                           std::span<const double> t_grid, const CurveOptions& options) {
    return residual_impl(model, g, drift, t_grid, options, true);
}

NormCurve gradient_curve(const DiffusionModel& model, const GirsanovDrift& drift, const ValueOracle& oracle,
                         std::span<const double> t_grid, const CurveOptions& options) {
    return derivative_curve(model, drift, oracle, t_grid, options, CurveKind::gradient);
}

NormCurve hessian_curve(const DiffusionModel& model, const GirsanovDrift& drift, const ValueOracle& oracle,
                        std::span<const double> t_grid, const CurveOptions& options) {
    return derivative_curve(model, drift, oracle, t_grid, options, CurveKind::hessian);
}

NormEstimate unconditional_residual(const DiffusionModel& model, const TerminalFunction& g,
                                    const GirsanovDrift& drift, double p, std::size_t n_paths, std::uint64_t seed,
                                    double max_dt) {
    const auto grid = refine_grid(0.0, model.horizon, {}, outer_max_dt(model, drift, max_dt));
    const auto paths = euler_maruyama(model, grid, n_paths, seed);
    const auto w = stochastic_exponential(paths, drift);
    const std::size_t m = grid.size() - 1;
    std::vector<double> vals(n_paths), lt(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) {
        vals[i] = g(paths.state(i, m));
        lt[i] = w.log_terminal(i);
    }
    const auto e = inner_estimate(lt, vals, !drift.is_zero());
    for (double& v : vals) v -= e.mean;
    return weighted_lp_norm(vals, lt, p);
}

LadderClass classify_ladder(std::span<const double> values, const PhiOptions& opt) {
    std::size_t run = 0;
    for (std::size_t j = 0; j + 1 < values.size(); ++j) {
        const double a = values[j], b = values[j + 1];
        const bool grows = !std::isfinite(b) || (a <= 0.0 ? b > 0.0 : b > a * (1.0 + opt.growth));
        run = grows ? run + 1 : 0;
        if (run >= opt.growth_run) return LadderClass::divergent;
    }
    return LadderClass::bounded;
}

PhiLadder phi_q(std::span<const double> times, std::span<const double> h, double T, double q, double a,
                const PhiOptions& opt) {
    require(times.size() == h.size() && times.size() >= 2, "phi_q: need at least two curve points");
    require(q >= 2.0, "phi_q: q must lie in [2, inf]");
    require(opt.levels >= 1, "phi_q: ladder needs at least one level");
    check_grid(times, "phi_q");
    require(times.front() >= 0.0 && times.back() < T, "phi_q: curve must lie in [0, T)");
    const std::size_t n = times.size();
    std::vector<double> tau(n), u(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        tau[i] = T - times[i];
        u[i] = -std::log(tau[i]);
        f[i] = std::pow(tau[i], a) * std::abs(h[i]);
    }
    const double eps_min = tau.back();
    const std::size_t last_decade =
        static_cast<std::size_t>(std::count_if(tau.begin(), tau.end(), [&](double x) { return x <= 10.0 * eps_min; }));
    if (last_decade < opt.min_last_decade) {
        std::ostringstream os;
        os << "phi_q: only " << last_decade << " curve points with T-t in the last decade [eps, 10 eps]; need at least "
           << opt.min_last_decade << " (add points near T, e.g. a geometric t grid)";
        throw ConfigError(os.str());
    }
    const bool sup = std::isinf(q);
    // Segment [0, t_0] with h extended by its first value.
    double head = 0.0;
    if (times.front() > 0.0) {
        const double h0 = std::abs(h[0]);
        if (sup) {
            head = h0 * std::max(std::pow(T, a), std::pow(tau[0], a));
        } else if (a == 0.0) {
            head = std::pow(h0, q) * (u[0] + std::log(T));
        } else {
            head = std::pow(h0, q) * (std::pow(T, q * a) - std::pow(tau[0], q * a)) / (q * a);
        }
    }
    auto value_at = [&](double eps) {
        const double ue = -std::log(eps);
        double acc = head;
        double fq_prev = sup ? f[0] : std::pow(f[0], q);
        if (sup) acc = std::max(acc, f[0]);
        for (std::size_t i = 1; i < n; ++i) {
            const double fq = sup ? f[i] : std::pow(f[i], q);
            if (u[i] <= ue + 1e-12) {
                acc = sup ? std::max(acc, fq) : acc + 0.5 * (fq + fq_prev) * (u[i] - u[i - 1]);
                fq_prev = fq;
                continue;
            }
            if (ue > u[i - 1]) {
                const double w = (ue - u[i - 1]) / (u[i] - u[i - 1]);
                const double fe = (fq > 0.0 && fq_prev > 0.0)
                                      ? std::exp(std::log(fq_prev) + w * (std::log(fq) - std::log(fq_prev)))
                                      : fq_prev + w * (fq - fq_prev);
                acc = sup ? std::max(acc, fe) : acc + 0.5 * (fe + fq_prev) * (ue - u[i - 1]);
            }
            break;
        }
        return sup ? acc : std::pow(acc, 1.0 / q);
    };
    PhiLadder out;
    out.q = q;
    out.exponent = a;
    for (std::size_t j = 0; j < opt.levels; ++j) {
        const double eps = eps_min * std::ldexp(1.0, static_cast<int>(opt.levels - 1 - j));
        out.truncations.push_back(eps);
        out.values.push_back(value_at(eps));
    }
    out.classification = classify_ladder(out.values, opt);
    return out;
}

PhiLadder phi_q(const NormCurve& curve, double q, double a, const PhiOptions& options) {
    return phi_q(curve.times, curve.values, curve.horizon, q, a, options);
}

}  // namespace fsmooth
