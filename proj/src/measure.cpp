#include "fsmooth/measure.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/linalg.hpp"
#include "fsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsmooth {

GirsanovDrift zero_drift() { return {}; }

GirsanovDrift constant_drift(double c) {
    GirsanovDrift g;
    g.name = "constant";
    g.gamma = [c](double, State, Out out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = c;
    };
    g.gamma_sup = std::abs(c);
    g.constant = true;
    if (c == 0.0) g.gamma = nullptr;
    return g;
}

GirsanovDrift sine_drift(double c) {
    GirsanovDrift g;
    g.name = "sine";
    g.gamma = [c](double, State x, Out out) {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = c * std::sin(x[0]);
    };
    g.gamma_sup = std::abs(c);
    g.constant = false;
    if (c == 0.0) g.gamma = nullptr;
    return g;
}

GirsanovDrift make_drift(const std::string& name, double c) {
    if (name == "none") return zero_drift();
    if (name == "constant") return constant_drift(c);
    if (name == "sine") return sine_drift(c);
    throw ConfigError("drift: unknown name '" + name + "'");
}

std::vector<double> WeightPath::log_column(std::size_t j) const {
    std::vector<double> out(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) out[i] = log_at(i, j);
    return out;
}

WeightPath stochastic_exponential(const PathBatch& paths, const GirsanovDrift& drift) {
    const std::size_t d = paths.dim;
    const std::size_t nt = paths.times.size();
    WeightPath w;
    w.n_paths = paths.n_paths;
    w.n_times = nt;
    w.y.assign(w.n_paths * nt, 0.0);
    w.quad_var.assign(w.n_paths * nt, 0.0);
    w.log_lambda.assign(w.n_paths * nt, 0.0);
    if (drift.is_zero()) return w;

    std::vector<double> gam(d);
    for (std::size_t p = 0; p < w.n_paths; ++p) {
        double y = 0.0, qv = 0.0;
        for (std::size_t j = 0; j + 1 < nt; ++j) {
            drift.gamma(paths.times[j], paths.state(p, j), gam);
            const auto dB = paths.increment(p, j);
            double dot = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                dot += gam[i] * dB[i];
                sq += gam[i] * gam[i];
            }
            y += dot;
            qv += sq * (paths.times[j + 1] - paths.times[j]);
            const std::size_t at = p * nt + j + 1;
            w.y[at] = y;
            w.quad_var[at] = qv;
            w.log_lambda[at] = y - 0.5 * qv;
            if (!std::isfinite(w.log_lambda[at]))
                throw NumericalError("measure", "non-finite stochastic exponential on path " + std::to_string(p));
        }
    }
    std::vector<double> lam(w.n_paths);
    for (std::size_t p = 0; p < w.n_paths; ++p) lam[p] = std::exp(w.log_terminal(p));
    const auto est = mean_estimate(lam);
    w.mean_lambda_T = est.mean;
    w.mean_lambda_T_se = est.std_error;
    return w;
}

NormEstimate weighted_lp_norm(std::span<const double> values, std::span<const double> log_weights, double p) {
    require(p >= 1.0 && std::isfinite(p), "weighted_lp_norm: p must lie in [1, inf)");
    require(values.size() == log_weights.size() && !values.empty(),
            "weighted_lp_norm: values and weights must have equal non-zero length");
    const double shift = *std::max_element(log_weights.begin(), log_weights.end());
    if (!std::isfinite(shift)) throw NumericalError("measure", "weighted_lp_norm: all weights are zero");
    const std::size_t n = values.size();
    std::vector<double> z(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(values[i])) throw NumericalError("measure", "weighted_lp_norm: non-finite value");
        w[i] = std::exp(log_weights[i] - shift);
        z[i] = w[i] * std::pow(std::abs(values[i]), p);
    }
    const double wbar = compensated_sum(w) / static_cast<double>(n);
    const double ratio = compensated_sum(z) / (static_cast<double>(n) * wbar);
    NormEstimate out;
    if (ratio <= 0.0) return out;
    std::vector<double> lin(n);
    for (std::size_t i = 0; i < n; ++i) lin[i] = (z[i] - ratio * w[i]) / wbar;
    const double ratio_se = mean_estimate(lin).std_error;
    out.value = std::pow(ratio, 1.0 / p);
    out.std_error = out.value * ratio_se / (p * ratio);
    return out;
}

NormEstimate weighted_lp_norm(std::span<const double> values, const WeightPath& weights, double p) {
    return weighted_lp_norm(values, weights.log_column(weights.n_times - 1), p);
}

std::vector<double> weighted_inner_grid(const DiffusionModel& model, const GirsanovDrift& drift, double start,
                                        double max_dt) {
    if (model.constant_coefficients && (drift.is_zero() || drift.constant)) return inner_grid(model, start, max_dt);
    require(start < model.horizon && max_dt > 0.0, "weighted_inner_grid: need start < T and max_dt > 0");
    const double span = model.horizon - start;
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / max_dt - 1e-9)));
    return build_grid(TimeGridSpec::uniform(n), start, model.horizon);
}

double outer_max_dt(const DiffusionModel& model, const GirsanovDrift& drift, double max_dt) {
    if (model.constant_coefficients && (drift.is_zero() || drift.constant)) return model.horizon;
    return max_dt;
}

WeightedPathSample simulate_weighted_path(const DiffusionModel& model, const GirsanovDrift& drift,
                                          std::span<const double> grid, NormalStream& stream,
                                          EulerWorkspace& ws, std::span<double> gamma_buf) {
    const std::size_t d = model.dim;
    WeightedPathSample s;
    const bool weighted = !drift.is_zero();
    const bool potential = !model.zero_potential();
    double qv = 0.0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        const double t = grid[j];
        const double dt = grid[j + 1] - t;
        if (weighted) drift.gamma(t, ws.x, gamma_buf);
        if (potential) s.log_potential += model.potential(t, ws.x) * dt;
        euler_step(model, t, dt, stream, ws);
        if (weighted) {
            double dot = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                dot += gamma_buf[i] * ws.dB[i];
                sq += gamma_buf[i] * gamma_buf[i];
            }
            s.y_increment += dot;
            qv += sq * dt;
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        if (!std::isfinite(ws.x[i])) throw NumericalError("simulate", "non-finite state in inner path");
    s.log_ratio = s.y_increment - 0.5 * qv;
    return s;
}

namespace {

enum class Moment { muckenhoupt, reverse_holder, bmo };

ConditionalMomentReport conditional_moments(const DiffusionModel& model, const PathBatch& paths,
                                            const GirsanovDrift& drift, Moment kind, double param,
                                            std::span<const double> check_times,
                                            const ConditionalCheckOptions& opt) {
    require(opt.n_inner >= 1, "conditional check: inner budget must be >= 1");
    require(!check_times.empty(), "conditional check: no check times");
    ConditionalMomentReport rep;
    rep.parameter = param;
    rep.inner_budget = opt.n_inner;
    rep.n_outer = paths.n_paths;
    rep.limitation_note = kStoppingTimeNote;
    double power = 1.0;
    switch (kind) {
    case Moment::muckenhoupt:
        require(param > 1.0, "muckenhoupt_check: alpha must exceed 1");
        rep.condition = "A_alpha";
        power = 1.0 / (param - 1.0);
        break;
    case Moment::reverse_holder:
        require(param > 1.0, "reverse_holder_check: beta must exceed 1");
        rep.condition = "RH_beta";
        power = param;
        break;
    case Moment::bmo:
        rep.condition = "BMO";
        break;
    }

    const std::size_t d = model.dim;
    const std::size_t n_outer = paths.n_paths;
    std::vector<double> estimates(n_outer);
    for (std::size_t k = 0; k < check_times.size(); ++k) {
        const double t = check_times[k];
        const std::size_t j = grid_index(paths.times, t, "conditional check");
        require(t < model.horizon, "conditional check: check times must be < T");
        const auto grid = weighted_inner_grid(model, drift, t, opt.max_dt);
        const bool exact_one = drift.is_zero() && kind != Moment::bmo;
        parallel_for(n_outer, opt.threads, [&](std::size_t i) {
            if (exact_one) {
                estimates[i] = 1.0;
                return;
            }
            EulerWorkspace ws(d);
            std::vector<double> gam(d), samples(opt.n_inner);
            const StreamId base = StreamId{opt.seed, StreamPurpose::inner}
                                      .with_path(static_cast<std::uint32_t>(i))
                                      .with_restart(static_cast<std::uint32_t>(j));
            for (std::size_t n = 0; n < opt.n_inner; ++n) {
                const auto x = paths.state(i, j);
                std::copy(x.begin(), x.end(), ws.x.begin());
                NormalStream stream(base.with_inner(static_cast<std::uint32_t>(n)));
                const auto s = simulate_weighted_path(model, drift, grid, stream, ws, gam);
                switch (kind) {
                case Moment::muckenhoupt: samples[n] = std::exp(-power * s.log_ratio); break;
                case Moment::reverse_holder: samples[n] = std::exp(power * s.log_ratio); break;
                case Moment::bmo: samples[n] = s.y_increment * s.y_increment; break;
                }
            }
            estimates[i] = mean_estimate(samples).mean;
        });
        const auto pooled = mean_estimate(estimates);
        double pmax = 0.0;
        for (std::size_t i = 0; i < n_outer; ++i) {
            const double e = kind == Moment::reverse_holder ? std::pow(estimates[i], 1.0 / power) : estimates[i];
            if (!std::isfinite(e)) throw NumericalError("measure", "non-finite conditional moment estimate");
            pmax = std::max(pmax, e);
        }
        rep.times.push_back(t);
        rep.per_time_max.push_back(pmax);
        if (kind == Moment::reverse_holder) {
            const double r = std::pow(pooled.mean, 1.0 / power);
            rep.per_time_mean.push_back(r);
            rep.per_time_se.push_back(r * pooled.std_error / (power * pooled.mean));
        } else {
            rep.per_time_mean.push_back(pooled.mean);
            rep.per_time_se.push_back(pooled.std_error);
        }
        rep.constant_estimate = std::max(rep.constant_estimate, pmax);
    }
    return rep;
}

}  // namespace

ConditionalMomentReport muckenhoupt_check(const DiffusionModel& model, const PathBatch& paths,
                                          const GirsanovDrift& drift, double alpha,
                                          std::span<const double> check_times,
                                          const ConditionalCheckOptions& options) {
    return conditional_moments(model, paths, drift, Moment::muckenhoupt, alpha, check_times, options);
}

ConditionalMomentReport reverse_holder_check(const DiffusionModel& model, const PathBatch& paths,
                                             const GirsanovDrift& drift, double beta,
                                             std::span<const double> check_times,
                                             const ConditionalCheckOptions& options) {
    return conditional_moments(model, paths, drift, Moment::reverse_holder, beta, check_times, options);
}

ConditionalMomentReport bmo_norm_estimate(const DiffusionModel& model, const PathBatch& paths,
                                          const GirsanovDrift& drift, std::span<const double> check_times,
                                          const ConditionalCheckOptions& options) {
    return conditional_moments(model, paths, drift, Moment::bmo, 0.0, check_times, options);
}

HoelderCheck conditional_hoelder_check(const DiffusionModel& model, const GirsanovDrift& drift, double t,
                                       std::span<const double> x, double alpha, double p, double constant,
                                       const std::function<double(State)>& u,
                                       const std::function<double(State)>& v, std::size_t n_inner,
                                       const StreamId& stream, double max_dt) {
    require(alpha > 1.0 && alpha < p, "conditional_hoelder_check: need 1 < alpha < p");
    require(n_inner >= 1, "conditional_hoelder_check: inner budget must be >= 1");
    const double r = p / (p - alpha);
    const std::size_t d = model.dim;
    const auto grid = weighted_inner_grid(model, drift, t, max_dt);
    EulerWorkspace ws(d);
    std::vector<double> gam(d), uv(n_inner), up(n_inner), vr(n_inner);
    for (std::size_t n = 0; n < n_inner; ++n) {
        std::copy(x.begin(), x.end(), ws.x.begin());
        NormalStream s(stream.with_inner(static_cast<std::uint32_t>(n)));
        const auto w = simulate_weighted_path(model, drift, grid, s, ws, gam);
        const double uu = u(ws.x);
        const double vv = v(ws.x);
        uv[n] = std::abs(uu * vv);
        up[n] = std::exp(w.log_ratio) * std::pow(std::abs(uu), p);
        vr[n] = std::pow(std::abs(vv), r);
    }
    HoelderCheck c;
    c.lhs = mean_estimate(uv).mean;
    c.u_moment_p = mean_estimate(up).mean;
    c.v_moment_r = mean_estimate(vr).mean;
    c.constant = constant;
    c.rhs = constant * std::pow(c.u_moment_p, 1.0 / p) * std::pow(c.v_moment_r, 1.0 / r);
    return c;
}

BdgRatio bdg_ratio(const PathBatch& paths, const WeightPath& weights, double p, std::size_t component) {
    require(component < paths.dim, "bdg_ratio: component out of range");
    const std::size_t m = paths.steps();
    std::vector<double> qv(paths.n_paths), mx(paths.n_paths);
    const double span = paths.times.back() - paths.times.front();
    for (std::size_t i = 0; i < paths.n_paths; ++i) {
        double b = 0.0, best = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            b += paths.increment(i, j)[component];
            best = std::max(best, std::abs(b));
        }
        qv[i] = std::sqrt(span);
        mx[i] = best;
    }
    BdgRatio out;
    out.quadratic_variation = weighted_lp_norm(qv, weights, p);
    out.running_max = weighted_lp_norm(mx, weights, p);
    out.ratio = out.quadratic_variation.value / out.running_max.value;
    return out;
}

}  // namespace fsmooth
