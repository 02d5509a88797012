#include "fsmooth/simulate.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/linalg.hpp"
#include "fsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace fsmooth {

std::vector<double> build_grid(const TimeGridSpec& spec, double start, double end) {
    require(end > start, "grid: end must exceed start");
    const double span = end - start;
    std::vector<double> g;
    switch (spec.kind) {
    case GridKind::uniform:
    case GridKind::adapted: {
        require(spec.n_steps >= 1, "grid: n_steps must be >= 1");
        const double theta = spec.kind == GridKind::adapted ? spec.theta : 1.0;
        require(theta > 0.0 && theta <= 1.0, "grid: adapted theta must lie in (0, 1]");
        const double n = static_cast<double>(spec.n_steps);
        g.resize(spec.n_steps + 1);
        for (std::size_t i = 0; i <= spec.n_steps; ++i) {
            const double frac = static_cast<double>(i) / n;
            g[i] = theta == 1.0 ? start + span * frac : start + span * (1.0 - std::pow(1.0 - frac, 1.0 / theta));
        }
        g.front() = start;
        g.back() = end;
        break;
    }
    case GridKind::geometric_toward_end: {
        require(spec.n_steps >= 2, "grid: geometric grid needs n_steps >= 2");
        require(spec.truncation > 0.0 && spec.truncation < span, "grid: truncation must lie in (0, span)");
        const std::size_t n_geo = spec.n_steps;  // points with gap > 0, including start
        const double ratio = std::pow(spec.truncation / span, 1.0 / static_cast<double>(n_geo - 1));
        for (std::size_t i = 0; i < n_geo; ++i) g.push_back(end - span * std::pow(ratio, static_cast<double>(i)));
        g.front() = start;
        g.push_back(end);
        break;
    }
    case GridKind::explicit_points:
        g = spec.points;
        break;
    }
    check_grid(g, "grid");
    return g;
}

void check_grid(std::span<const double> grid, const char* what) {
    require(grid.size() >= 2, std::string(what) + ": needs at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(std::isfinite(grid[i]), std::string(what) + ": non-finite grid point");
        if (i > 0) require(grid[i] > grid[i - 1], std::string(what) + ": points must be strictly increasing");
    }
}

std::vector<double> refine_grid(double start, double end, std::span<const double> required, double max_dt) {
    require(end > start, "refine_grid: end must exceed start");
    require(max_dt > 0.0, "refine_grid: max_dt must be positive");
    const double span = end - start;
    const auto n = static_cast<std::size_t>(std::ceil(span / max_dt - 1e-9));
    std::vector<double> pts;
    pts.reserve(n + required.size() + 2);
    for (std::size_t i = 0; i <= std::max<std::size_t>(n, 1); ++i)
        pts.push_back(start + span * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n, 1)));
    for (double t : required) {
        require(t >= start && t <= end, "refine_grid: required point outside the interval");
        pts.push_back(t);
    }
    std::sort(pts.begin(), pts.end());
    const double tol = 1e-12 * span;
    std::vector<double> out;
    for (double t : pts) {
        if (out.empty() || t - out.back() > tol) {
            out.push_back(t);
        } else if (std::find(required.begin(), required.end(), t) != required.end()) {
            out.back() = t;  // keep the requested value exactly
        }
    }
    out.front() = start;
    out.back() = end;
    return out;
}

std::vector<double> inner_grid(const DiffusionModel& model, double start, double max_dt) {
    const double end = model.horizon;
    require(start < end, "inner_grid: start must be < T");
    if (model.constant_coefficients) return {start, end};
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((end - start) / max_dt - 1e-9)));
    return build_grid(TimeGridSpec::uniform(n), start, end);
}

std::size_t grid_index(std::span<const double> grid, double t, const char* what) {
    const double tol = 1e-12 * std::max(1.0, grid.back() - grid.front());
    auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
    if (it == grid.end() || std::abs(*it - t) > tol) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": time " << t << " is not a grid point";
        throw ConfigError(os.str());
    }
    return static_cast<std::size_t>(it - grid.begin());
}

void euler_step(const DiffusionModel& model, double t, double dt, NormalStream& stream, EulerWorkspace& ws) {
    const std::size_t d = ws.x.size();
    const double sq = std::sqrt(dt);
    for (std::size_t i = 0; i < d; ++i) ws.dB[i] = sq * stream.normal();
    model.sigma(t, ws.x, ws.sig);
    model.drift(t, ws.x, ws.drift);
    for (std::size_t i = 0; i < d; ++i) {
        double s = ws.drift[i] * dt;
        for (std::size_t j = 0; j < d; ++j) s += ws.sig[i * d + j] * ws.dB[j];
        ws.x[i] += s;
    }
}

namespace {

void simulate_into(const DiffusionModel& model, std::span<const double> x_start, std::span<const double> grid,
                   const StreamId& id, std::size_t path, double* states, double* increments) {
    const std::size_t d = model.dim;
    EulerWorkspace ws(d);
    std::copy(x_start.begin(), x_start.end(), ws.x.begin());
    std::copy(ws.x.begin(), ws.x.end(), states);
    NormalStream stream(id);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        euler_step(model, grid[j], grid[j + 1] - grid[j], stream, ws);
        for (std::size_t i = 0; i < d; ++i) {
            if (!std::isfinite(ws.x[i])) {
                throw NumericalError("simulate", "non-finite state on path " + std::to_string(path) +
                                                     " at step " + std::to_string(j));
            }
        }
        std::copy(ws.dB.begin(), ws.dB.end(), increments + j * d);
        std::copy(ws.x.begin(), ws.x.end(), states + (j + 1) * d);
    }
}

PathBatch allocate(const DiffusionModel& model, std::span<const double> grid, std::size_t n_paths) {
    require(n_paths >= 1, "simulate: n_paths must be >= 1");
    check_grid(grid, "simulate");
    PathBatch batch;
    batch.n_paths = n_paths;
    batch.dim = model.dim;
    batch.times.assign(grid.begin(), grid.end());
    batch.states.resize(n_paths * grid.size() * model.dim);
    batch.increments.resize(n_paths * (grid.size() - 1) * model.dim);
    return batch;
}

}  // namespace

PathBatch euler_maruyama(const DiffusionModel& model, std::span<const double> grid, std::size_t n_paths,
                         std::uint64_t seed, unsigned threads) {
    require(model.x0.size() == model.dim, "euler_maruyama: x0 has wrong dimension");
    PathBatch batch = allocate(model, grid, n_paths);
    batch.base = StreamId{seed, StreamPurpose::outer};
    const std::size_t m = grid.size() - 1;
    const std::size_t d = model.dim;
    parallel_for(n_paths, threads, [&](std::size_t i) {
        simulate_into(model, model.x0, grid, batch.stream_of(i), i, batch.states.data() + i * (m + 1) * d,
                      batch.increments.data() + i * m * d);
    });
    return batch;
}

PathBatch resimulate_from(const DiffusionModel& model, std::span<const double> x_start,
                          std::span<const double> sub_grid, std::size_t n_inner, const StreamId& base,
                          unsigned threads) {
    require(x_start.size() == model.dim, "resimulate_from: start state has wrong dimension");
    require(!sub_grid.empty() && sub_grid.front() < model.horizon, "resimulate_from: t_start must be < T");
    PathBatch batch = allocate(model, sub_grid, n_inner);
    batch.base = base;
    batch.inner_indexed = true;
    const std::size_t m = sub_grid.size() - 1;
    const std::size_t d = model.dim;
    parallel_for(n_inner, threads, [&](std::size_t i) {
        simulate_into(model, x_start, sub_grid, batch.stream_of(i), i, batch.states.data() + i * (m + 1) * d,
                      batch.increments.data() + i * m * d);
    });
    return batch;
}

FlowBatch first_variation(const DiffusionModel& model, const PathBatch& paths, unsigned threads) {
    const std::size_t d = model.dim;
    require(paths.dim == d, "first_variation: path dimension differs from the model");
    FlowBatch out;
    out.n_paths = paths.n_paths;
    out.dim = d;
    out.n_times = paths.times.size();
    out.flow.resize(out.n_paths * out.n_times * d * d);
    out.inverse_flow.resize(out.flow.size());
    // Probe once so a missing gradient surfaces before the parallel loop.
    {
        std::vector<double> js(d * d * d), jb(d * d);
        eval_sigma_jacobian(model, paths.times.front(), paths.state(0, 0), js);
        eval_drift_jacobian(model, paths.times.front(), paths.state(0, 0), jb);
    }
    const std::size_t dd = d * d;
    parallel_for(out.n_paths, threads, [&](std::size_t p) {
        std::vector<double> js(d * dd), jb(dd), f(dd), g(dd), df(dd), dg(dd), tmp(dd), corr(dd);
        linalg::set_identity(f, d);
        linalg::set_identity(g, d);
        double* fout = out.flow.data() + p * out.n_times * dd;
        double* gout = out.inverse_flow.data() + p * out.n_times * dd;
        std::copy(f.begin(), f.end(), fout);
        std::copy(g.begin(), g.end(), gout);
        for (std::size_t j = 0; j + 1 < out.n_times; ++j) {
            const double t = paths.times[j];
            const double dt = paths.times[j + 1] - t;
            const auto x = paths.state(p, j);
            const auto dB = paths.increment(p, j);
            eval_sigma_jacobian(model, t, x, js);
            eval_drift_jacobian(model, t, x, jb);
            // dF = sum_l J_l F dB^l + Jb F dt
            // dG = -sum_l G J_l dB^l - G (Jb - sum_l J_l^2) dt
            linalg::matmul(jb, f, df, d);
            std::fill(corr.begin(), corr.end(), 0.0);
            for (std::size_t k = 0; k < dd; ++k) df[k] *= dt;
            linalg::matmul(g, jb, dg, d);
            for (std::size_t k = 0; k < dd; ++k) dg[k] *= -dt;
            for (std::size_t l = 0; l < d; ++l) {
                std::span<const double> jl(js.data() + l * dd, dd);
                linalg::matmul(jl, f, tmp, d);
                for (std::size_t k = 0; k < dd; ++k) df[k] += tmp[k] * dB[l];
                linalg::matmul(g, jl, tmp, d);
                for (std::size_t k = 0; k < dd; ++k) dg[k] -= tmp[k] * dB[l];
                linalg::matmul(jl, jl, tmp, d);
                for (std::size_t k = 0; k < dd; ++k) corr[k] += tmp[k];
            }
            linalg::matmul(g, corr, tmp, d);
            for (std::size_t k = 0; k < dd; ++k) {
                f[k] += df[k];
                g[k] += dg[k] + tmp[k] * dt;
            }
            std::copy(f.begin(), f.end(), fout + (j + 1) * dd);
            std::copy(g.begin(), g.end(), gout + (j + 1) * dd);
        }
    });
    return out;
}

double max_identity_defect(const FlowBatch& flows) {
    const std::size_t d = flows.dim;
    std::vector<double> prod(d * d);
    double worst = 0.0;
    for (std::size_t p = 0; p < flows.n_paths; ++p)
        for (std::size_t j = 0; j < flows.n_times; ++j) {
            linalg::matmul(flows.flow_at(p, j), flows.inverse_at(p, j), prod, d);
            for (std::size_t i = 0; i < d; ++i) prod[i * d + i] -= 1.0;
            worst = std::max(worst, linalg::norm(prod));
        }
    return worst;
}

}  // namespace fsmooth
