#pragma once

#include "fsmooth/model.hpp"
#include "fsmooth/rng.hpp"
#include "fsmooth/simulate.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fsmooth {

// Markovian Girsanov integrand gamma(t, x); dP = E(int gamma^T dB)_T dQ.
struct GirsanovDrift {
    std::string name = "none";
    VectorField gamma;  // empty means gamma == 0
    double gamma_sup = 0.0;
    bool constant = true;  // independent of (t, x)

    [[nodiscard]] bool is_zero() const noexcept { return !gamma || gamma_sup == 0.0; }
};

GirsanovDrift zero_drift();
// gamma == c e_1.
GirsanovDrift constant_drift(double c);
// gamma(t, x) = c sin(x_1) e_1.
GirsanovDrift sine_drift(double c);
GirsanovDrift make_drift(const std::string& name, double c);

// Y_t = int gamma^T dB, <Y>_t = int |gamma|^2 ds and log lambda_t = Y_t - <Y>_t / 2
// at every grid time, per path (n_paths x (m+1)).
struct WeightPath {
    std::size_t n_paths = 0;
    std::size_t n_times = 0;
    std::vector<double> y;
    std::vector<double> quad_var;
    std::vector<double> log_lambda;
    double mean_lambda_T = 1.0;  // E_Q[lambda_T], diagnostic
    double mean_lambda_T_se = 0.0;

    [[nodiscard]] double log_at(std::size_t path, std::size_t j) const noexcept {
        return log_lambda[path * n_times + j];
    }
    [[nodiscard]] double log_terminal(std::size_t path) const noexcept { return log_at(path, n_times - 1); }
    [[nodiscard]] std::vector<double> log_column(std::size_t j) const;
};

// Left-point accumulation against the stored increments.
WeightPath stochastic_exponential(const PathBatch& paths, const GirsanovDrift& drift);

struct NormEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// (mean_Q[lambda |v|^p] / mean_Q[lambda])^{1/p} with a delta-method standard
// error; weights are given as log lambda and combined with a max shift.
NormEstimate weighted_lp_norm(std::span<const double> values, std::span<const double> log_weights, double p);
// Terminal weights lambda_T of the path batch.
NormEstimate weighted_lp_norm(std::span<const double> values, const WeightPath& weights, double p);

// Simulation grid from `start` to T that keeps both the Euler scheme and the
// weight integral exact in law when possible: one step if the model and gamma
// are constant, else uniform steps of at most max_dt.
std::vector<double> weighted_inner_grid(const DiffusionModel& model, const GirsanovDrift& drift, double start,
                                        double max_dt);
// Largest step needed on outer grids for the same reason (T when one step suffices).
double outer_max_dt(const DiffusionModel& model, const GirsanovDrift& drift, double max_dt);

// Result of one path simulated from (t, x) to T under Q.
struct WeightedPathSample {
    double log_ratio = 0.0;   // log(lambda_T / lambda_t)
    double y_increment = 0.0; // Y_T - Y_t
    double log_potential = 0.0;  // int_t^T k(s, X_s) ds
};

// Euler path on `grid` from ws.x (modified in place to X_T), accumulating the
// Girsanov log-weight and the potential integral with left-point rules.
WeightedPathSample simulate_weighted_path(const DiffusionModel& model, const GirsanovDrift& drift,
                                          std::span<const double> grid, NormalStream& stream,
                                          EulerWorkspace& ws, std::span<double> gamma_buf);

struct ConditionalCheckOptions {
    std::size_t n_inner = 1000;
    double max_dt = 0.02;
    std::uint64_t seed = 7;
    unsigned threads = 1;
};

// Nested estimates of a conditional moment at deterministic check times.
// per_time_max is over outer paths; per_time_mean pools all outer paths
// (A_alpha, BMO: mean of inner means; RH_beta: (mean of inner means)^{1/beta}).
struct ConditionalMomentReport {
    std::string condition;
    double parameter = 0.0;
    std::vector<double> times;
    std::vector<double> per_time_max;
    std::vector<double> per_time_mean;
    std::vector<double> per_time_se;
    double constant_estimate = 0.0;
    std::size_t inner_budget = 0;
    std::size_t n_outer = 0;
    std::string limitation_note;
};

inline constexpr const char* kStoppingTimeNote =
    "stopping-time supremum approximated by deterministic grid times only";

// E_Q[(lambda_t / lambda_T)^{1/(alpha-1)} | F_t] per outer path and time.
ConditionalMomentReport muckenhoupt_check(const DiffusionModel& model, const PathBatch& paths,
                                          const GirsanovDrift& drift, double alpha,
                                          std::span<const double> check_times,
                                          const ConditionalCheckOptions& options);

// E_Q[lambda_T^beta | F_t]^{1/beta} / lambda_t per outer path and time.
ConditionalMomentReport reverse_holder_check(const DiffusionModel& model, const PathBatch& paths,
                                             const GirsanovDrift& drift, double beta,
                                             std::span<const double> check_times,
                                             const ConditionalCheckOptions& options);

// E_Q[|Y_T - Y_t|^2 | F_t] per outer path and time; the constant estimate is the max.
ConditionalMomentReport bmo_norm_estimate(const DiffusionModel& model, const PathBatch& paths,
                                          const GirsanovDrift& drift, std::span<const double> check_times,
                                          const ConditionalCheckOptions& options);

// Conditional weighted Hoelder inequality at (t, x):
//   E_Q[|UV| | F_t] <= c (E_P[|U|^p | F_t])^{1/p} (E_Q[|V|^r | F_t])^{1/r},
// r = p / (p - alpha), with U, V functions of X_T.
struct HoelderCheck {
    double lhs = 0.0;
    double u_moment_p = 0.0;  // E_P[|U|^p | F_t]
    double v_moment_r = 0.0;  // E_Q[|V|^r | F_t]
    double constant = 0.0;
    double rhs = 0.0;
    [[nodiscard]] bool holds() const noexcept { return lhs <= rhs; }
};

HoelderCheck conditional_hoelder_check(const DiffusionModel& model, const GirsanovDrift& drift, double t,
                                       std::span<const double> x, double alpha, double p, double constant,
                                       const std::function<double(State)>& u,
                                       const std::function<double(State)>& v, std::size_t n_inner,
                                       const StreamId& stream, double max_dt = 0.02);

// ||sqrt<N>_T||_{L_p(P)} / ||N*_T||_{L_p(P)} for N = B^component - B^component_0
// along the stored grid.
struct BdgRatio {
    NormEstimate quadratic_variation;
    NormEstimate running_max;
    double ratio = 0.0;
};
BdgRatio bdg_ratio(const PathBatch& paths, const WeightPath& weights, double p, std::size_t component = 0);

}  // namespace fsmooth
