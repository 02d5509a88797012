#include "fsmooth/gridopt.hpp"

#include "fsmooth/error.hpp"

#include <algorithm>
#include <cmath>

namespace fsmooth {

TimeGridSpec adapted_grid(std::size_t n, double theta) {
    require(n >= 1, "adapted_grid: n must be >= 1");
    require(theta > 0.0 && theta <= 1.0, "adapted_grid: theta must lie in (0, 1]");
    return TimeGridSpec::adapted(n, theta);
}

TimeGridSpec uniform_grid(std::size_t n) {
    require(n >= 1, "uniform_grid: n must be >= 1");
    return TimeGridSpec::uniform(n);
}

std::vector<double> grid_points(const TimeGridSpec& spec, double T) { return build_grid(spec, 0.0, T); }

std::vector<DiscretizationResult> riemann_errors(const DiffusionModel& model, const TerminalFunction& g,
                                                 const GirsanovDrift& drift, const ValueOracle& oracle,
                                                 const std::vector<TimeGridSpec>& coarse,
                                                 std::span<const double> master, std::size_t n_paths,
                                                 std::uint64_t seed, unsigned threads) {
    require(model.zero_potential(), "riemann_error: the potential k must vanish");
    require(n_paths >= 1, "riemann_error: n_paths must be >= 1");
    check_grid(master, "riemann_error master grid");
    const double T = model.horizon;
    require(master.front() == 0.0 && std::abs(master.back() - T) <= 1e-12 * T,
            "riemann_error: master grid must span [0, T]");
    const std::size_t d = model.dim;
    const std::size_t m = master.size() - 1;

    std::vector<std::vector<std::size_t>> idx(coarse.size());
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        const auto pts = grid_points(coarse[c], T);
        for (double t : pts) {
            try {
                idx[c].push_back(grid_index(master, t, "riemann_error"));
            } catch (const ConfigError&) {
                throw ConfigError("riemann_error: coarse grid is not a subset of the master grid");
            }
        }
    }
    const double v0 = oracle.evaluate(0.0, model.x0, 0).value;

    std::vector<std::vector<double>> resid(coarse.size(), std::vector<double>(n_paths));
    std::vector<double> log_lt(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t p) {
        EulerWorkspace ws(d);
        std::vector<double> xs((m + 1) * d), bs((m + 1) * d, 0.0), gam(d), sig(d * d);
        std::copy(model.x0.begin(), model.x0.end(), ws.x.begin());
        std::copy(ws.x.begin(), ws.x.end(), xs.begin());
        NormalStream stream(StreamId{seed, StreamPurpose::discretization}.with_path(static_cast<std::uint32_t>(p)));
        double y = 0.0, qv = 0.0;
        const bool weighted = !drift.is_zero();
        for (std::size_t j = 0; j < m; ++j) {
            const double t = master[j];
            const double dt = master[j + 1] - t;
            if (weighted) drift.gamma(t, ws.x, gam);
            euler_step(model, t, dt, stream, ws);
            for (std::size_t i = 0; i < d; ++i) {
                bs[(j + 1) * d + i] = bs[j * d + i] + ws.dB[i];
                xs[(j + 1) * d + i] = ws.x[i];
                if (weighted) {
                    y += gam[i] * ws.dB[i];
                    qv += gam[i] * gam[i] * dt;
                }
            }
        }
        for (double v : ws.x)
            if (!std::isfinite(v)) throw NumericalError("simulate", "non-finite state on path " + std::to_string(p));
        log_lt[p] = y - 0.5 * qv;
        const double payoff = g(std::span<const double>(xs.data() + m * d, d));
        for (std::size_t c = 0; c < coarse.size(); ++c) {
            const auto& ix = idx[c];
            double sum = 0.0;
            for (std::size_t i = 0; i + 1 < ix.size(); ++i) {
                const std::size_t a = ix[i], b = ix[i + 1];
                const std::span<const double> x(xs.data() + a * d, d);
                const auto vd = oracle.evaluate(master[a], x, 1);
                model.sigma(master[a], x, sig);
                for (std::size_t r = 0; r < d; ++r) {
                    double row = 0.0;
                    for (std::size_t l = 0; l < d; ++l) row += vd.gradient[l] * sig[l * d + r];
                    sum += row * (bs[b * d + r] - bs[a * d + r]);
                }
            }
            resid[c][p] = payoff - v0 - sum;
        }
    });
    std::vector<DiscretizationResult> out(coarse.size());
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        const auto est = weighted_lp_norm(resid[c], log_lt, 2.0);
        out[c].grid = coarse[c];
        out[c].n_steps = idx[c].size() - 1;
        out[c].error = est.value;
        out[c].std_error = est.std_error;
    }
    return out;
}

DiscretizationResult riemann_error(const DiffusionModel& model, const TerminalFunction& g,
                                   const GirsanovDrift& drift, const ValueOracle& oracle,
                                   const TimeGridSpec& coarse, std::span<const double> master, std::size_t n_paths,
                                   std::uint64_t seed, unsigned threads) {
    return riemann_errors(model, g, drift, oracle, {coarse}, master, n_paths, seed, threads).front();
}

RateStudy rate_study(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                     const ValueOracle& oracle, const RateStudyOptions& opt) {
    require(opt.n_ladder.size() >= 2, "rate_study: need at least two grid sizes");
    require(opt.master_factor >= 1, "rate_study: master_factor must be >= 1");
    const std::size_t n_max = *std::max_element(opt.n_ladder.begin(), opt.n_ladder.end());
    RateStudy study;
    auto run = [&](GridKind kind, double theta) {
        std::vector<TimeGridSpec> specs;
        for (std::size_t n : opt.n_ladder)
            specs.push_back(kind == GridKind::uniform ? uniform_grid(n) : adapted_grid(n, theta));
        const auto master_spec = kind == GridKind::uniform ? uniform_grid(opt.master_factor * n_max)
                                                           : adapted_grid(opt.master_factor * n_max, theta);
        const auto master = grid_points(master_spec, model.horizon);
        RateSeries s;
        s.kind = kind;
        s.theta = theta;
        s.rows = riemann_errors(model, g, drift, oracle, specs, master, opt.n_paths, opt.seed, opt.threads);
        std::vector<double> x, y;
        for (const auto& r : s.rows) {
            if (r.error <= 0.0) continue;
            x.push_back(std::log(static_cast<double>(r.n_steps)));
            y.push_back(std::log(r.error));
        }
        if (x.size() >= 2) s.fit = fit_line(x, y);
        study.series.push_back(std::move(s));
    };
    if (opt.uniform) run(GridKind::uniform, 1.0);
    if (opt.adapted) run(GridKind::adapted, opt.theta);
    return study;
}

}  // namespace fsmooth
