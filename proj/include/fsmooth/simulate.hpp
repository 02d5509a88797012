#pragma once

#include "fsmooth/model.hpp"
#include "fsmooth/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace fsmooth {

enum class GridKind { uniform, geometric_toward_end, adapted, explicit_points };

struct TimeGridSpec {
    GridKind kind = GridKind::uniform;
    std::size_t n_steps = 1;
    double theta = 1.0;              // adapted
    double truncation = 0.0;         // geometric: smallest gap to the end point
    std::vector<double> points;      // explicit

    static TimeGridSpec uniform(std::size_t n) {
        TimeGridSpec s;
        s.n_steps = n;
        return s;
    }
    static TimeGridSpec adapted(std::size_t n, double theta) {
        TimeGridSpec s;
        s.kind = GridKind::adapted;
        s.n_steps = n;
        s.theta = theta;
        return s;
    }
    static TimeGridSpec geometric(std::size_t n, double truncation) {
        TimeGridSpec s;
        s.kind = GridKind::geometric_toward_end;
        s.n_steps = n;
        s.truncation = truncation;
        return s;
    }
    static TimeGridSpec explicit_list(std::vector<double> pts) {
        TimeGridSpec s;
        s.kind = GridKind::explicit_points;
        s.n_steps = pts.empty() ? 0 : pts.size() - 1;
        s.points = std::move(pts);
        return s;
    }
};

// Grid points on [start, end]. Adapted: start + (end-start)(1 - (1 - i/n)^{1/theta}).
// Geometric: gaps to `end` shrink geometrically from (end-start) down to
// `truncation`, then a final step onto `end`.
std::vector<double> build_grid(const TimeGridSpec& spec, double start, double end);

// Throws ConfigError unless strictly increasing and finite.
void check_grid(std::span<const double> grid, const char* what);

// Sorted union of `required` points, the end points and a uniform grid with
// spacing at most max_dt. Points closer than 1e-12 (end - start) are merged.
std::vector<double> refine_grid(double start, double end, std::span<const double> required, double max_dt);

// Uniform grid on [start, end] with ceil((end-start)/max_dt) steps, or a single
// step for constant-coefficient models.
std::vector<double> inner_grid(const DiffusionModel& model, double start, double max_dt);

// Index of `t` in `grid` (tolerance 1e-12 relative to the grid span) or
// ConfigError.
std::size_t grid_index(std::span<const double> grid, double t, const char* what);

// Simulated paths under Q. Path i was driven by stream base.with_path(i)
// (resimulations: base.with_inner(i)).
struct PathBatch {
    std::size_t n_paths = 0;
    std::size_t dim = 0;
    std::vector<double> times;       // m + 1 points
    std::vector<double> states;      // n_paths x (m+1) x d
    std::vector<double> increments;  // n_paths x m x d, Brownian increments
    StreamId base;
    bool inner_indexed = false;      // path i used base.with_inner(i)

    [[nodiscard]] std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] std::span<const double> state(std::size_t path, std::size_t j) const noexcept {
        return {states.data() + (path * times.size() + j) * dim, dim};
    }
    [[nodiscard]] std::span<const double> increment(std::size_t path, std::size_t j) const noexcept {
        return {increments.data() + (path * steps() + j) * dim, dim};
    }
    [[nodiscard]] StreamId stream_of(std::size_t path) const noexcept {
        return inner_indexed ? base.with_inner(static_cast<std::uint32_t>(path))
                             : base.with_path(static_cast<std::uint32_t>(path));
    }
};

// First variation process and its inverse, both n_paths x (m+1) x d x d.
struct FlowBatch {
    std::size_t n_paths = 0;
    std::size_t dim = 0;
    std::size_t n_times = 0;
    std::vector<double> flow;
    std::vector<double> inverse_flow;

    [[nodiscard]] std::span<const double> flow_at(std::size_t path, std::size_t j) const noexcept {
        return {flow.data() + (path * n_times + j) * dim * dim, dim * dim};
    }
    [[nodiscard]] std::span<const double> inverse_at(std::size_t path, std::size_t j) const noexcept {
        return {inverse_flow.data() + (path * n_times + j) * dim * dim, dim * dim};
    }
};

// Scratch buffers for one Euler path; reused by streaming estimators.
struct EulerWorkspace {
    explicit EulerWorkspace(std::size_t d) : x(d), sig(d * d), drift(d), dB(d) {}
    std::vector<double> x, sig, drift, dB;
};

// One Euler-Maruyama step with left-point coefficients; draws dB from
// `stream`, leaves it in ws.dB and advances ws.x in place.
void euler_step(const DiffusionModel& model, double t, double dt, NormalStream& stream, EulerWorkspace& ws);

// Full-batch simulation from x0 at grid.front().
PathBatch euler_maruyama(const DiffusionModel& model, std::span<const double> grid, std::size_t n_paths,
                         std::uint64_t seed, unsigned threads = 1);

// Fresh paths from (sub_grid.front(), x_start); inner path i uses stream
// base.with_inner(i).
PathBatch resimulate_from(const DiffusionModel& model, std::span<const double> x_start,
                          std::span<const double> sub_grid, std::size_t n_inner, const StreamId& base,
                          unsigned threads = 1);

// Euler schemes for grad X and [grad X]^{-1} along stored paths, both started
// at the identity at paths.times.front(). The inverse is integrated from its
// own SDE, including the -sum_j (grad sigma_j)^2 drift correction.
FlowBatch first_variation(const DiffusionModel& model, const PathBatch& paths, unsigned threads = 1);

// max over paths and times of |F F^{-1} - I|_HS.
double max_identity_defect(const FlowBatch& flows);

}  // namespace fsmooth
