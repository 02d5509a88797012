#include "fsmooth/valuation.hpp"

#include "fsmooth/error.hpp"
#include "fsmooth/linalg.hpp"
#include "fsmooth/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string_view>

namespace fsmooth {

const char* backend_name(OracleBackend b) noexcept {
    switch (b) {
    case OracleBackend::gaussian_closed_form: return "gaussian-closed-form";
    case OracleBackend::kernel_quadrature: return "kernel-quadrature";
    case OracleBackend::monte_carlo: return "monte-carlo";
    }
    return "unknown";
}

namespace {

constexpr double kTruncation = 8.0;

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

ValueDerivatives blank(std::size_t d) {
    ValueDerivatives v;
    v.gradient.assign(d, 0.0);
    v.gradient_se.assign(d, 0.0);
    v.hessian.assign(d * d, 0.0);
    v.hessian_se.assign(d * d, 0.0);
    return v;
}

// h(m, s) = E f(m + s Z) and its first two derivatives in m.
struct Scalar3 {
    double h = 0.0, h1 = 0.0, h2 = 0.0;
};

bool has_closed_form(const TerminalFunction& g) {
    switch (g.shape) {
    case PayoffShape::linear:
    case PayoffShape::indicator:
    case PayoffShape::call:
    case PayoffShape::power: return true;
    default: return false;
    }
}

Scalar3 closed_form(const TerminalFunction& g, double m, double s) {
    Scalar3 r;
    const double K = g.strike;
    switch (g.shape) {
    case PayoffShape::linear:
        r.h = m;
        r.h1 = 1.0;
        break;
    case PayoffShape::indicator: {
        const double z = (m - K) / s;
        r.h = norm_cdf(z);
        r.h1 = norm_pdf(z) / s;
        r.h2 = -z * norm_pdf(z) / (s * s);
        break;
    }
    case PayoffShape::call: {
        const double z = (m - K) / s;
        r.h = (m - K) * norm_cdf(z) + s * norm_pdf(z);
        r.h1 = norm_cdf(z);
        r.h2 = norm_pdf(z) / s;
        break;
    }
    case PayoffShape::power: {
        using boost::math::hypergeometric_1F1;
        const double a = g.exponent;
        const double mu = m - K;
        const double u = -mu * mu / (2.0 * s * s);
        const double c = std::pow(s, a) * std::pow(2.0, a / 2.0) * boost::math::tgamma((a + 1.0) / 2.0) /
                         std::sqrt(std::numbers::pi);
        const double f1 = hypergeometric_1F1(1.0 - a / 2.0, 1.5, u);
        r.h = c * hypergeometric_1F1(-a / 2.0, 0.5, u);
        r.h1 = c * a * mu / (s * s) * f1;
        r.h2 = c * a / (s * s) *
               (f1 - (mu * mu / (s * s)) * ((1.0 - a / 2.0) / 1.5) * hypergeometric_1F1(2.0 - a / 2.0, 2.5, u));
        break;
    }
    default: throw Unsupported("value_gaussian: no closed form for this payoff");
    }
    return r;
}

template <class F>
double integrate_split(F&& f, std::vector<double> cuts) {
    using boost::math::quadrature::gauss_kronrod;
    cuts.push_back(-kTruncation);
    cuts.push_back(kTruncation);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(cuts[i], -kTruncation);
        const double b = std::min(cuts[i + 1], kTruncation);
        if (b <= a) continue;
        total += gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-11);
    }
    return total;
}

// One-dimensional reduction for payoffs of x_1 alone.
Scalar3 quadrature_1d(const TerminalFunction& g, State x, double m, double s, int order) {
    std::vector<double> y(x.begin(), x.end());
    std::vector<double> cuts;
    for (double b : g.breakpoints) {
        const double z = (b - m) / s;
        if (z > -kTruncation && z < kTruncation) cuts.push_back(z);
    }
    auto gz = [&](double z) {
        y[0] = m + s * z;
        return g(y) * norm_pdf(z);
    };
    Scalar3 r;
    r.h = integrate_split(gz, cuts);
    if (order >= 1) r.h1 = integrate_split([&](double z) { return gz(z) * z; }, cuts) / s;
    if (order >= 2) r.h2 = integrate_split([&](double z) { return gz(z) * (z * z - 1.0); }, cuts) / (s * s);
    return r;
}

// X_T = m + A Z in two dimensions, A = sqrt(tau) sigma.
ValueDerivatives quadrature_2d(const TerminalFunction& g, std::span<const double> m, std::span<const double> a,
                               int order) {
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> y(2);
    auto weighted = [&](auto&& poly) {
        auto outer = [&](double z1) {
            auto inner = [&](double z2) {
                y[0] = m[0] + a[0] * z1 + a[1] * z2;
                y[1] = m[1] + a[2] * z1 + a[3] * z2;
                return g(y) * norm_pdf(z1) * norm_pdf(z2) * poly(z1, z2);
            };
            return gauss_kronrod<double, 31>::integrate(inner, -kTruncation, kTruncation, 10, 1e-11);
        };
        return gauss_kronrod<double, 31>::integrate(outer, -kTruncation, kTruncation, 10, 1e-11);
    };
    ValueDerivatives out = blank(2);
    out.value = weighted([](double, double) { return 1.0; });
    if (order < 1) return out;
    std::vector<double> ainv(4);
    if (!linalg::invert(a, ainv, 2)) throw NumericalError("valuation", "singular kernel covariance");
    const double e1 = weighted([](double z1, double) { return z1; });
    const double e2 = weighted([](double, double z2) { return z2; });
    // grad = A^{-T} E[g Z]
    out.gradient[0] = ainv[0] * e1 + ainv[2] * e2;
    out.gradient[1] = ainv[1] * e1 + ainv[3] * e2;
    if (order < 2) return out;
    const double s11 = weighted([](double z1, double) { return z1 * z1 - 1.0; });
    const double s12 = weighted([](double z1, double z2) { return z1 * z2; });
    const double s22 = weighted([](double, double z2) { return z2 * z2 - 1.0; });
    const double s[4] = {s11, s12, s12, s22};
    // hess = A^{-T} S A^{-1}
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) acc += ainv[k * 2 + i] * s[k * 2 + l] * ainv[l * 2 + j];
            out.hessian[i * 2 + j] = acc;
        }
    return out;
}

}  // namespace

GaussianCoefficients gaussian_coefficients(const DiffusionModel& model) {
    require(model.constant_coefficients, "gaussian oracle: model '" + model.name + "' has state-dependent coefficients");
    GaussianCoefficients c;
    c.dim = model.dim;
    c.sigma.resize(model.dim * model.dim);
    c.drift.resize(model.dim);
    model.sigma(0.0, model.x0, c.sigma);
    model.drift(0.0, model.x0, c.drift);
    c.rate = model.potential ? model.potential(0.0, model.x0) : 0.0;
    return c;
}

ValueDerivatives value_gaussian(double t, State x, const TerminalFunction& g, double T,
                                const GaussianCoefficients& c, int order, bool force_quadrature) {
    const std::size_t d = c.dim;
    require(x.size() == d, "value_gaussian: state has wrong dimension");
    require(t <= T, "value_gaussian: t must not exceed T");
    const double tau = T - t;
    if (tau <= 0.0) {
        require(order == 0, "value_gaussian: derivatives need t < T");
        ValueDerivatives v = blank(d);
        v.value = g(x);
        return v;
    }
    const double disc = std::exp(c.rate * tau);
    if (g.first_coordinate_only || d == 1) {
        double a11 = 0.0;
        for (std::size_t l = 0; l < d; ++l) a11 += c.sigma[l] * c.sigma[l];
        const double m = x[0] + c.drift[0] * tau;
        const double s = std::sqrt(a11 * tau);
        if (!(s > 0.0)) throw NumericalError("valuation", "degenerate kernel in the first coordinate");
        const Scalar3 r = (!force_quadrature && has_closed_form(g)) ? closed_form(g, m, s)
                                                                    : quadrature_1d(g, x, m, s, order);
        ValueDerivatives v = blank(d);
        v.value = disc * r.h;
        if (order >= 1) v.gradient[0] = disc * r.h1;
        if (order >= 2) v.hessian[0] = disc * r.h2;
        if (!std::isfinite(v.value) || !std::isfinite(v.gradient[0]) || !std::isfinite(v.hessian[0]))
            throw NumericalError("valuation", "non-finite Gaussian oracle value");
        return v;
    }
    if (d > 2) throw Unsupported("value_gaussian: quadrature backend supports d <= 2; use monte-carlo");
    std::vector<double> m(2), a(4);
    const double sq = std::sqrt(tau);
    for (std::size_t i = 0; i < 2; ++i) m[i] = x[i] + c.drift[i] * tau;
    for (std::size_t k = 0; k < 4; ++k) a[k] = sq * c.sigma[k];
    ValueDerivatives v = quadrature_2d(g, m, a, order);
    v.value *= disc;
    for (double& e : v.gradient) e *= disc;
    for (double& e : v.hessian) e *= disc;
    return v;
}

GaussianOracle::GaussianOracle(const DiffusionModel& model, const TerminalFunction& g, bool force_quadrature)
    : g_(g), c_(gaussian_coefficients(model)), horizon_(model.horizon), quadrature_(force_quadrature) {
    const bool closed = !force_quadrature && has_closed_form(g) && (g.first_coordinate_only || model.dim == 1);
    if (!closed && !(g.first_coordinate_only || model.dim <= 2))
        throw Unsupported("gaussian oracle: quadrature backend supports d <= 2; use monte-carlo");
    backend_ = closed ? OracleBackend::gaussian_closed_form : OracleBackend::kernel_quadrature;
}

ValueDerivatives GaussianOracle::evaluate(double t, State x, int order) const {
    return value_gaussian(t, x, g_, horizon_, c_, order, quadrature_);
}

namespace {

// Per-sample pieces of the gradient representation.
struct BelSamples {
    std::size_t n = 0, d = 0;
    std::vector<double> mt;  // K g(X_T), K normalised at the restart
    std::vector<double> w;   // n x d
    std::vector<double> j;   // n x d
};

BelSamples bel_samples(const DiffusionModel& model, const TerminalFunction& g, double t, State x,
                       std::size_t n_inner, const StreamId& stream, double max_dt) {
    require(t < model.horizon, "grad_mc: t must be < T");
    require(n_inner >= 2, "grad_mc: inner budget must be >= 2");
    require(x.size() == model.dim, "grad_mc: state has wrong dimension");
    const std::size_t d = model.dim, dd = d * d;
    const double T = model.horizon;
    const auto grid = inner_grid(model, t, max_dt);
    const bool constant = model.constant_coefficients;
    const bool potential = !model.zero_potential();
    BelSamples out;
    out.n = n_inner;
    out.d = d;
    out.mt.resize(n_inner);
    out.w.assign(n_inner * d, 0.0);
    out.j.assign(n_inner * d, 0.0);

    EulerWorkspace ws(d);
    std::vector<double> sig(dd), sinv(dd), f(dd), v(dd), js(d * dd), jb(dd), df(dd), tmp(dd), gk(d), xl(d);
    if (constant) {
        model.sigma(t, x, sig);
        if (!linalg::invert(sig, sinv, d)) throw NumericalError("valuation", "singular sigma");
    }
    for (std::size_t n = 0; n < n_inner; ++n) {
        std::copy(x.begin(), x.end(), ws.x.begin());
        linalg::set_identity(f, d);
        NormalStream s(stream.with_inner(static_cast<std::uint32_t>(n)));
        double log_k = 0.0;
        double* wn = out.w.data() + n * d;
        double* jn = out.j.data() + n * d;
        for (std::size_t step = 0; step + 1 < grid.size(); ++step) {
            const double tj = grid[step];
            const double dt = grid[step + 1] - tj;
            std::copy(ws.x.begin(), ws.x.end(), xl.begin());
            if (!constant) {
                eval_sigma_jacobian(model, tj, xl, js);
                eval_drift_jacobian(model, tj, xl, jb);
            }
            if (potential) {
                log_k += model.potential(tj, xl) * dt;
                eval_potential_gradient(model, tj, xl, gk);
                for (std::size_t m = 0; m < d; ++m) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < d; ++i) acc += gk[i] * f[i * d + m];
                    jn[m] += (T - tj) * acc * dt;
                }
            }
            euler_step(model, tj, dt, s, ws);
            if (!constant && !linalg::invert(ws.sig, sinv, d))
                throw NumericalError("valuation", "singular sigma along an inner path");
            linalg::matmul(sinv, f, v, d);
            for (std::size_t m = 0; m < d; ++m) {
                double acc = 0.0;
                for (std::size_t i = 0; i < d; ++i) acc += v[i * d + m] * ws.dB[i];
                wn[m] += acc;
            }
            if (!constant) {
                linalg::matmul(jb, f, df, d);
                for (std::size_t k = 0; k < dd; ++k) df[k] *= dt;
                for (std::size_t l = 0; l < d; ++l) {
                    std::span<const double> jl(js.data() + l * dd, dd);
                    linalg::matmul(jl, f, tmp, d);
                    for (std::size_t k = 0; k < dd; ++k) df[k] += tmp[k] * ws.dB[l];
                }
                for (std::size_t k = 0; k < dd; ++k) f[k] += df[k];
            }
        }
        out.mt[n] = std::exp(log_k) * g(ws.x);
        if (!std::isfinite(out.mt[n])) throw NumericalError("valuation", "non-finite inner payoff");
    }
    return out;
}

// Per-sample gradient contributions ((M_T - c) W + M_T J) / (T - t), n x d.
std::vector<double> gradient_terms(const BelSamples& b, double c, double tau) {
    std::vector<double> z(b.n * b.d);
    for (std::size_t n = 0; n < b.n; ++n)
        for (std::size_t m = 0; m < b.d; ++m)
            z[n * b.d + m] = ((b.mt[n] - c) * b.w[n * b.d + m] + b.mt[n] * b.j[n * b.d + m]) / tau;
    return z;
}

MeanEstimate column_estimate(const std::vector<double>& z, std::size_t n, std::size_t d, std::size_t m) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = z[i * d + m];
    return mean_estimate(col);
}

}  // namespace

ValueDerivatives grad_mc(const DiffusionModel& model, const TerminalFunction& g, double t, State x,
                         std::size_t n_inner, const StreamId& stream, double max_dt, std::optional<double> control) {
    const auto b = bel_samples(model, g, t, x, n_inner, stream, max_dt);
    const std::size_t d = model.dim;
    ValueDerivatives out = blank(d);
    const auto v = mean_estimate(b.mt);
    out.value = v.mean;
    out.value_se = v.std_error;
    const auto z = gradient_terms(b, control.value_or(v.mean), model.horizon - t);
    for (std::size_t m = 0; m < d; ++m) {
        const auto e = column_estimate(z, b.n, d, m);
        out.gradient[m] = e.mean;
        out.gradient_se[m] = e.std_error;
    }
    return out;
}

ValueDerivatives hessian_mc(const DiffusionModel& model, const TerminalFunction& g, double t, State x,
                            std::size_t n_inner, double h_fd, const StreamId& stream, double max_dt) {
    require(t < model.horizon, "hessian_mc: t must be < T");
    const double tau = model.horizon - t;
    if (h_fd <= 0.0) h_fd = std::sqrt(tau) / 20.0;
    const std::size_t d = model.dim;
    ValueDerivatives out = grad_mc(model, g, t, x, n_inner, stream, max_dt);
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    std::vector<double> raw(d * d), raw_se(d * d);
    for (std::size_t m = 0; m < d; ++m) {
        xp[m] = x[m] + h_fd;
        xm[m] = x[m] - h_fd;
        const auto bp = bel_samples(model, g, t, xp, n_inner, stream, max_dt);
        const auto bm = bel_samples(model, g, t, xm, n_inner, stream, max_dt);
        const auto zp = gradient_terms(bp, mean_estimate(bp.mt).mean, tau);
        const auto zm = gradient_terms(bm, mean_estimate(bm.mt).mean, tau);
        std::vector<double> diff(n_inner);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t n = 0; n < n_inner; ++n)
                diff[n] = (zp[n * d + i] - zm[n * d + i]) / (2.0 * h_fd);
            const auto e = mean_estimate(diff);
            raw[i * d + m] = e.mean;
            raw_se[i * d + m] = e.std_error;
        }
        xp[m] = x[m];
        xm[m] = x[m];
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            out.hessian[i * d + j] = 0.5 * (raw[i * d + j] + raw[j * d + i]);
            out.hessian_se[i * d + j] =
                i == j ? raw_se[i * d + i]
                       : 0.5 * std::sqrt(raw_se[i * d + j] * raw_se[i * d + j] + raw_se[j * d + i] * raw_se[j * d + i]);
        }
    return out;
}

MonteCarloOracle::MonteCarloOracle(const DiffusionModel& model, const TerminalFunction& g, MonteCarloOptions options)
    : model_(model), g_(g), opt_(options) {
    require(opt_.n_inner >= 2, "monte-carlo oracle: inner budget must be >= 2");
}

ValueDerivatives MonteCarloOracle::evaluate(double t, State x, int order) const {
    if (t >= model_.horizon) {
        require(order == 0, "monte-carlo oracle: derivatives need t < T");
        ValueDerivatives v = blank(model_.dim);
        v.value = g_(x);
        return v;
    }
    std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(&t), sizeof t));
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(x.data()), x.size_bytes()), h);
    const StreamId id{opt_.seed, StreamPurpose::oracle, static_cast<std::uint32_t>(h),
                      static_cast<std::uint32_t>(h >> 32) & kMaxRestart};
    if (order >= 2) return hessian_mc(model_, g_, t, x, opt_.n_inner, opt_.h_fd, id, opt_.max_dt);
    return grad_mc(model_, g_, t, x, opt_.n_inner, id, opt_.max_dt);
}

std::unique_ptr<ValueOracle> make_default_oracle(const DiffusionModel& model, const TerminalFunction& g,
                                                 const MonteCarloOptions& mc) {
    if (model.constant_coefficients && (g.first_coordinate_only || model.dim <= 2))
        return std::make_unique<GaussianOracle>(model, g);
    return std::make_unique<MonteCarloOracle>(model, g, mc);
}

PotentialFactor k_factor(const DiffusionModel& model, const PathBatch& paths) {
    PotentialFactor k;
    k.n_paths = paths.n_paths;
    k.n_times = paths.times.size();
    k.log_k.assign(k.n_paths * k.n_times, 0.0);
    if (model.zero_potential()) return k;
    for (std::size_t p = 0; p < k.n_paths; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < k.n_times; ++j) {
            acc += model.potential(paths.times[j], paths.state(p, j)) * (paths.times[j + 1] - paths.times[j]);
            k.log_k[p * k.n_times + j + 1] = acc;
        }
    }
    return k;
}

MartingaleTable martingale_M(const DiffusionModel& model, const TerminalFunction& g, const PathBatch& paths,
                             const ValueOracle& oracle, const PotentialFactor& k, unsigned threads) {
    require(k.n_paths == paths.n_paths && k.n_times == paths.times.size(),
            "martingale_M: potential factor does not match the paths");
    MartingaleTable out;
    out.n_paths = paths.n_paths;
    out.n_times = paths.times.size();
    out.m.resize(out.n_paths * out.n_times);
    const double T = model.horizon;
    parallel_for(out.n_paths, threads, [&](std::size_t p) {
        for (std::size_t j = 0; j < out.n_times; ++j) {
            const double t = paths.times[j];
            const auto x = paths.state(p, j);
            const double v = t >= T ? g(x) : oracle.evaluate(t, x, 0).value;
            out.m[p * out.n_times + j] = std::exp(k.log_at(p, j)) * v;
        }
    });
    return out;
}

}  // namespace fsmooth
