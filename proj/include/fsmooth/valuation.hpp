#pragma once

#include "fsmooth/model.hpp"
#include "fsmooth/rng.hpp"
#include "fsmooth/simulate.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace fsmooth {

// v(t, x) with its state derivatives. Standard errors are zero for the
// deterministic backends.
struct ValueDerivatives {
    double value = 0.0;
    double value_se = 0.0;
    std::vector<double> gradient;     // d
    std::vector<double> gradient_se;  // d
    std::vector<double> hessian;      // d x d, row-major
    std::vector<double> hessian_se;
};

enum class OracleBackend { gaussian_closed_form, kernel_quadrature, monte_carlo };
const char* backend_name(OracleBackend b) noexcept;

// Derivatives requested from an oracle: 0 value, 1 adds the gradient, 2 adds
// the Hessian.
class ValueOracle {
public:
    virtual ~ValueOracle() = default;
    [[nodiscard]] virtual OracleBackend backend() const noexcept = 0;
    [[nodiscard]] virtual ValueDerivatives evaluate(double t, State x, int order) const = 0;
};

struct GaussianCoefficients {
    std::size_t dim = 1;
    std::vector<double> sigma;  // d x d
    std::vector<double> drift;  // d
    double rate = 0.0;
};

// Coefficients of a constant-coefficient model read at (0, x0).
GaussianCoefficients gaussian_coefficients(const DiffusionModel& model);

// v(t,x) = e^{r(T-t)} E g(x + b(T-t) + sigma (B_T - B_t)). Closed forms for
// the catalog shapes linear, indicator, call and power of x_1; otherwise
// Gauss-Kronrod quadrature over +-8 kernel standard deviations (d <= 2, or
// any d for payoffs of x_1 alone). Orders >= 1 need t < T.
ValueDerivatives value_gaussian(double t, State x, const TerminalFunction& g, double T,
                                const GaussianCoefficients& c, int order = 2, bool force_quadrature = false);

class GaussianOracle final : public ValueOracle {
public:
    GaussianOracle(const DiffusionModel& model, const TerminalFunction& g, bool force_quadrature = false);
    [[nodiscard]] OracleBackend backend() const noexcept override { return backend_; }
    [[nodiscard]] ValueDerivatives evaluate(double t, State x, int order) const override;

private:
    TerminalFunction g_;
    GaussianCoefficients c_;
    double horizon_;
    bool quadrature_;
    OracleBackend backend_;
};

struct MonteCarloOptions {
    std::size_t n_inner = 4000;
    double max_dt = 0.02;
    std::uint64_t seed = 11;
    double h_fd = 0.0;  // 0: sqrt(T - t) / 20
};

// Gradient estimator restarted at (t, x) with the flow at the identity and
// the potential factor normalised to one:
//   (T-t) grad v = E[(M_T - M_t) W] + E[M_T J],
//   W = int_t^T (sigma^{-1} grad X)^T dB,  J = int_t^T (T-s) grad k grad X ds.
// M_t is `control` when given, else the inner mean of M_T. The value slot
// carries the inner mean of M_T.
ValueDerivatives grad_mc(const DiffusionModel& model, const TerminalFunction& g, double t, State x,
                         std::size_t n_inner, const StreamId& stream, double max_dt = 0.02,
                         std::optional<double> control = std::nullopt);

// Central differences of grad_mc with width h_fd in each coordinate and
// common random numbers across the stencil.
ValueDerivatives hessian_mc(const DiffusionModel& model, const TerminalFunction& g, double t, State x,
                            std::size_t n_inner, double h_fd, const StreamId& stream, double max_dt = 0.02);

class MonteCarloOracle final : public ValueOracle {
public:
    MonteCarloOracle(const DiffusionModel& model, const TerminalFunction& g, MonteCarloOptions options = {});
    [[nodiscard]] OracleBackend backend() const noexcept override { return OracleBackend::monte_carlo; }
    // The stream is derived from the bits of (t, x), so repeated queries agree.
    [[nodiscard]] ValueDerivatives evaluate(double t, State x, int order) const override;

private:
    DiffusionModel model_;
    TerminalFunction g_;
    MonteCarloOptions opt_;
};

// Gaussian oracle for constant-coefficient models it can serve, else Monte Carlo.
std::unique_ptr<ValueOracle> make_default_oracle(const DiffusionModel& model, const TerminalFunction& g,
                                                 const MonteCarloOptions& mc = {});

// log K_t^X = int_0^t k(s, X_s) ds by the left-point rule, per path and grid time.
struct PotentialFactor {
    std::size_t n_paths = 0;
    std::size_t n_times = 0;
    std::vector<double> log_k;

    [[nodiscard]] double log_at(std::size_t path, std::size_t j) const noexcept {
        return log_k[path * n_times + j];
    }
};
PotentialFactor k_factor(const DiffusionModel& model, const PathBatch& paths);

// M_t = K_t^X v(t, X_t) per path and grid time; K_T^X g(X_T) at t = T.
struct MartingaleTable {
    std::size_t n_paths = 0;
    std::size_t n_times = 0;
    std::vector<double> m;

    [[nodiscard]] double at(std::size_t path, std::size_t j) const noexcept { return m[path * n_times + j]; }
};
MartingaleTable martingale_M(const DiffusionModel& model, const TerminalFunction& g, const PathBatch& paths,
                             const ValueOracle& oracle, const PotentialFactor& k, unsigned threads = 1);

}  // namespace fsmooth
