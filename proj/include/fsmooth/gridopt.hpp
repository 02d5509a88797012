#pragma once

#include "fsmooth/measure.hpp"
#include "fsmooth/model.hpp"
#include "fsmooth/simulate.hpp"
#include "fsmooth/stats.hpp"
#include "fsmooth/valuation.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fsmooth {

// tau_i = T (1 - (1 - i/n)^{1/theta}); theta = 1 is the uniform grid.
TimeGridSpec adapted_grid(std::size_t n, double theta);
TimeGridSpec uniform_grid(std::size_t n);
std::vector<double> grid_points(const TimeGridSpec& spec, double T);

struct DiscretizationResult {
    TimeGridSpec grid;
    std::size_t n_steps = 0;
    double error = 0.0;  // ||g(X_T) - v(0,x0) - sum_i grad v sigma (B_{i+1} - B_i)||_{L_2(P)}
    double std_error = 0.0;
};

// Riemann-sum error of the representation of g(X_T) on `coarse`, with paths
// simulated on `master`. Every coarse point must be a master point; k must
// vanish.
DiscretizationResult riemann_error(const DiffusionModel& model, const TerminalFunction& g,
                                   const GirsanovDrift& drift, const ValueOracle& oracle,
                                   const TimeGridSpec& coarse, std::span<const double> master, std::size_t n_paths,
                                   std::uint64_t seed, unsigned threads = 1);

// Several coarse grids on one set of master paths.
std::vector<DiscretizationResult> riemann_errors(const DiffusionModel& model, const TerminalFunction& g,
                                                 const GirsanovDrift& drift, const ValueOracle& oracle,
                                                 const std::vector<TimeGridSpec>& coarse,
                                                 std::span<const double> master, std::size_t n_paths,
                                                 std::uint64_t seed, unsigned threads = 1);

struct RateStudyOptions {
    std::vector<std::size_t> n_ladder{8, 16, 32, 64, 128, 256};
    double theta = 0.5;  // adapted grid exponent
    std::size_t n_paths = 100000;
    std::size_t master_factor = 4;  // master = same kind with factor * max(n_ladder) steps
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool uniform = true;
    bool adapted = true;
};

struct RateSeries {
    GridKind kind = GridKind::uniform;
    double theta = 1.0;
    std::vector<DiscretizationResult> rows;
    LineFit fit;  // log error on log n
};

struct RateStudy {
    std::vector<RateSeries> series;  // uniform first when both are requested
};

RateStudy rate_study(const DiffusionModel& model, const TerminalFunction& g, const GirsanovDrift& drift,
                     const ValueOracle& oracle, const RateStudyOptions& options);

}  // namespace fsmooth
