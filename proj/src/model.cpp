#include "fsmooth/model.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/linalg.hpp"
#include "fsmooth/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fsmooth {

namespace linalg {

bool invert(std::span<const double> a, std::span<double> inv, std::size_t d) {
    if (d == 1) {
        if (a[0] == 0.0) return false;
        inv[0] = 1.0 / a[0];
        return std::isfinite(inv[0]);
    }
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> m(a.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    Eigen::FullPivLU<RowMat> lu(m);
    if (!lu.isInvertible()) return false;
    Eigen::Map<RowMat> out(inv.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    out = lu.inverse();
    return out.allFinite();
}

}  // namespace linalg

namespace {

std::string describe_point(double t, State x) {
    std::ostringstream os;
    os.precision(17);
    os << "t=" << t << ", x=(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

void require_finite(std::span<const double> v, const char* what, double t, State x) {
    for (double e : v)
        if (!std::isfinite(e))
            throw NumericalError("model", std::string("non-finite ") + what + " at " + describe_point(t, x));
}

// Central differences of a vector field, column m of the Jacobian.
void fd_jacobian(const VectorField& field, std::size_t rows, double t, State x, Out jac) {
    const std::size_t d = x.size();
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> fp(rows), fm(rows);
    for (std::size_t m = 0; m < d; ++m) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[m]));
        const double orig = xp[m];
        xp[m] = orig + h;
        field(t, xp, fp);
        xp[m] = orig - h;
        field(t, xp, fm);
        xp[m] = orig;
        for (std::size_t r = 0; r < rows; ++r) jac[r * d + m] = (fp[r] - fm[r]) / (2.0 * h);
    }
}

}  // namespace

void eval_sigma_jacobian(const DiffusionModel& model, double t, State x, Out out) {
    const std::size_t d = model.dim;
    if (model.sigma_jacobian) {
        model.sigma_jacobian(t, x, out);
        return;
    }
    if (!model.finite_difference_fallback)
        throw ConfigError("model '" + model.name + "': sigma_jacobian missing and finite-difference fallback disabled");
    // Jacobian of the full matrix as a d*d vector field, then regroup by column.
    std::vector<double> jac(d * d * d);
    fd_jacobian(model.sigma, d * d, t, x, jac);
    for (std::size_t l = 0; l < d; ++l)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t m = 0; m < d; ++m) out[(l * d + i) * d + m] = jac[(i * d + l) * d + m];
}

void eval_drift_jacobian(const DiffusionModel& model, double t, State x, Out out) {
    if (model.drift_jacobian) {
        model.drift_jacobian(t, x, out);
        return;
    }
    if (!model.finite_difference_fallback)
        throw ConfigError("model '" + model.name + "': drift_jacobian missing and finite-difference fallback disabled");
    fd_jacobian(model.drift, model.dim, t, x, out);
}

void eval_potential_gradient(const DiffusionModel& model, double t, State x, Out out) {
    if (model.potential_gradient) {
        model.potential_gradient(t, x, out);
        return;
    }
    if (!model.finite_difference_fallback)
        throw ConfigError("model '" + model.name + "': potential_gradient missing and finite-difference fallback disabled");
    VectorField k = [&](double s, State y, Out o) { o[0] = model.potential(s, y); };
    fd_jacobian(k, 1, t, x, out);
}

ValidationReport validate_model(const DiffusionModel& model, const TerminalFunction& g,
                                const ValidationOptions& options) {
    require(options.n_probe >= 1, "validate_model: n_probe must be >= 1");
    const std::size_t d = model.dim;
    require(model.x0.size() == d, "validate_model: x0 has wrong dimension");

    ProbeBox box;
    if (options.box) {
        box = *options.box;
        require(box.lower.size() == d && box.upper.size() == d, "validate_model: probe box has wrong dimension");
    } else {
        const double half = 5.0 * std::sqrt(model.horizon);
        for (double c : model.x0) {
            box.lower.push_back(c - half);
            box.upper.push_back(c + half);
        }
    }

    ValidationReport report;
    report.n_probe = options.n_probe;
    NormalStream rng(StreamId{options.seed, StreamPurpose::probe});

    std::vector<double> x(d), sig(d * d), inv(d * d), b(d), gk(d);
    auto flag = [&](const char* what, double observed, double declared, double t) {
        if (observed > declared * (1.0 + 1e-12) + 1e-300)
            report.violations.push_back({what, observed, declared, t, x});
    };

    for (std::size_t n = 0; n < options.n_probe; ++n) {
        double t = 0.0;
        if (n == 0) {
            for (std::size_t i = 0; i < d; ++i) x[i] = 0.5 * (box.lower[i] + box.upper[i]);
        } else {
            t = model.horizon * rng.uniform();
            for (std::size_t i = 0; i < d; ++i)
                x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * rng.uniform();
        }

        model.sigma(t, x, sig);
        require_finite(sig, "sigma", t, x);
        model.drift(t, x, b);
        require_finite(b, "drift", t, x);
        const double k = model.potential(t, x);
        require_finite({&k, 1}, "potential", t, x);
        const double gx = g(x);
        require_finite({&gx, 1}, "terminal function", t, x);

        const double s_norm = linalg::norm(sig);
        const double inv_norm =
            linalg::invert(sig, inv, d) ? linalg::norm(inv) : std::numeric_limits<double>::infinity();
        const double b_norm = linalg::norm(b);
        double gk_norm = 0.0;
        if (model.potential_gradient || !model.zero_potential()) {
            eval_potential_gradient(model, t, x, gk);
            gk_norm = linalg::norm(gk);
        }
        const double growth = std::abs(gx) * std::exp(-g.growth_K * std::pow(linalg::norm(x), g.growth_kappa));

        report.sigma_max = std::max(report.sigma_max, s_norm);
        report.sigma_inv_max = std::max(report.sigma_inv_max, inv_norm);
        report.drift_max = std::max(report.drift_max, b_norm);
        report.potential_max = std::max(report.potential_max, std::abs(k));
        report.potential_grad_max = std::max(report.potential_grad_max, gk_norm);
        report.growth_max = std::max(report.growth_max, growth);

        flag("sigma", s_norm, model.bounds.sigma_sup, t);
        flag("sigma_inv", inv_norm, model.bounds.sigma_inv_sup, t);
        flag("drift", b_norm, model.bounds.drift_sup, t);
        flag("potential", std::abs(k), model.bounds.potential_sup, t);
        flag("potential_grad", gk_norm, model.bounds.potential_grad_sup, t);
        flag("terminal_growth", growth, g.growth_K, t);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

DiffusionModel brownian_base(const std::string& name, const ModelParams& p) {
    require(p.dim >= 1, "model: dim must be >= 1");
    require(p.horizon > 0.0, "model: horizon must be > 0");
    DiffusionModel m;
    m.name = name;
    m.dim = p.dim;
    m.horizon = p.horizon;
    m.x0 = p.x0.empty() ? std::vector<double>(p.dim, 0.0) : p.x0;
    require(m.x0.size() == p.dim, "model: x0 has wrong dimension");
    const std::size_t d = p.dim;
    m.sigma = [d](double, State, Out out) { linalg::set_identity(out, d); };
    m.drift = [](double, State, Out out) { std::fill(out.begin(), out.end(), 0.0); };
    m.potential = [](double, State) { return 0.0; };
    m.sigma_jacobian = [](double, State, Out out) { std::fill(out.begin(), out.end(), 0.0); };
    m.drift_jacobian = [](double, State, Out out) { std::fill(out.begin(), out.end(), 0.0); };
    m.potential_gradient = [](double, State, Out out) { std::fill(out.begin(), out.end(), 0.0); };
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    m.bounds = {sqrt_d, sqrt_d, 0.0, 0.0, 0.0};
    m.constant_coefficients = true;
    return m;
}

}  // namespace

DiffusionModel make_model(const std::string& name, const ModelParams& p) {
    if (name == "bm") return brownian_base(name, p);
    if (name == "bm-rate") {
        auto m = brownian_base(name, p);
        const double r = p.rate;
        m.potential = [r](double, State) { return r; };
        m.bounds.potential_sup = std::abs(r);
        return m;
    }
    if (name == "bm-drifted") {
        auto m = brownian_base(name, p);
        const double beta = p.beta;
        m.drift = [beta](double, State, Out out) { std::fill(out.begin(), out.end(), beta); };
        m.bounds.drift_sup = std::abs(beta) * std::sqrt(static_cast<double>(p.dim));
        return m;
    }
    if (name == "bounded-sine") {
        require(std::abs(p.epsilon) < 1.0, "model bounded-sine: |epsilon| must be < 1");
        auto m = brownian_base(name, p);
        const double eps = p.epsilon;
        const std::size_t d = p.dim;
        m.sigma = [eps, d](double, State x, Out out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t i = 0; i < d; ++i) out[i * d + i] = 1.0 + eps * std::sin(x[i]);
        };
        // Column l of sigma is (1 + eps sin x_l) e_l; its Jacobian has one
        // non-zero entry at (l, l).
        m.sigma_jacobian = [eps, d](double, State x, Out out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t l = 0; l < d; ++l) out[(l * d + l) * d + l] = eps * std::cos(x[l]);
        };
        const double sqrt_d = std::sqrt(static_cast<double>(d));
        m.bounds.sigma_sup = sqrt_d * (1.0 + std::abs(eps));
        m.bounds.sigma_inv_sup = sqrt_d / (1.0 - std::abs(eps));
        m.constant_coefficients = false;
        return m;
    }
    throw ConfigError("model: unknown catalog name '" + name + "'");
}

TerminalFunction make_terminal(const std::string& name, const TerminalParams& p) {
    TerminalFunction g;
    g.name = name;
    g.first_coordinate_only = true;
    g.strike = p.strike;
    const double K = p.strike;
    if (name == "linear") {
        g.eval = [](State x) { return x[0]; };
        g.growth_K = 1.0;
        g.growth_kappa = 1.0;
        g.regularity = Regularity::lipschitz;
        g.shape = PayoffShape::linear;
        g.strike = 0.0;
        return g;
    }
    if (name == "indicator") {
        g.eval = [K](State x) { return x[0] >= K ? 1.0 : 0.0; };
        g.growth_K = 1.0;
        g.growth_kappa = 0.0;
        g.regularity = Regularity::indicator;
        g.shape = PayoffShape::indicator;
        g.breakpoints = {K};
        return g;
    }
    if (name == "power") {
        require(p.alpha > 0.0 && p.alpha < 1.0, "terminal power: alpha must lie in (0, 1)");
        const double a = p.alpha;
        g.eval = [K, a](State x) { return std::pow(std::abs(x[0] - K), a); };
        g.growth_K = 1.0 + std::abs(K);
        g.growth_kappa = 1.0;
        g.regularity = Regularity::hoelder;
        g.hoelder_exponent = a;
        g.shape = PayoffShape::power;
        g.exponent = a;
        g.breakpoints = {K};
        return g;
    }
    if (name == "call") {
        g.eval = [K](State x) { return std::max(x[0] - K, 0.0); };
        g.growth_K = 1.0 + std::abs(K);
        g.growth_kappa = 1.0;
        g.regularity = Regularity::lipschitz;
        g.shape = PayoffShape::call;
        g.breakpoints = {K};
        return g;
    }
    if (name == "sqrt-pos") {
        g.eval = [](State x) { return std::sqrt(std::max(x[0], 0.0)); };
        g.growth_K = 1.0;
        g.growth_kappa = 1.0;
        g.regularity = Regularity::hoelder;
        g.hoelder_exponent = 0.5;
        g.shape = PayoffShape::sqrt_pos;
        g.strike = 0.0;
        g.breakpoints = {0.0};
        return g;
    }
    throw ConfigError("terminal: unknown catalog name '" + name + "'");
}

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"bm", "bm-rate", "bm-drifted", "bounded-sine"};
    return names;
}

const std::vector<std::string>& terminal_names() {
    static const std::vector<std::string> names{"linear", "indicator", "power", "call", "sqrt-pos"};
    return names;
}

std::vector<CatalogEntry> builtin_catalog() {
    std::vector<CatalogEntry> out;
    for (const auto& m : model_names())
        for (const auto& t : terminal_names())
            out.push_back({m + "+" + t, make_model(m), make_terminal(t)});
    return out;
}

}  // namespace fsmooth
