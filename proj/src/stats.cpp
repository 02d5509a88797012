#include "fsmooth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsmooth {

double compensated_sum(std::span<const double> values) noexcept {
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

MeanEstimate mean_estimate(std::span<const double> values) noexcept {
    MeanEstimate out;
    out.count = values.size();
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = compensated_sum(values) / n;
    if (values.size() > 1) {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double d = values[i] - out.mean;
            sq[i] = d * d;
        }
        out.variance = compensated_sum(sq) / (n - 1.0);
        out.std_error = std::sqrt(out.variance / n);
    }
    return out;
}

double log_mean_exp(std::span<const double> log_values) noexcept {
    if (log_values.empty()) return -std::numeric_limits<double>::infinity();
    const double shift = *std::max_element(log_values.begin(), log_values.end());
    if (!std::isfinite(shift)) return shift;
    std::vector<double> e(log_values.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(log_values[i] - shift);
    return shift + std::log(compensated_sum(e) / static_cast<double>(e.size()));
}

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights) {
    LineFit fit;
    const std::size_t n = std::min(x.size(), y.size());
    fit.count = n;
    if (n < 2) return fit;
    auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w(i);
        sx += w(i) * x[i];
        sy += w(i) * y[i];
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w(i) * (x[i] - mx) * (x[i] - mx);
        sxy += w(i) * (x[i] - mx) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double chi2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            chi2 += w(i) * r * r;
        }
        double scale = chi2 / static_cast<double>(n - 2);
        if (!weights.empty()) scale = std::max(scale, 1.0);
        fit.slope_se = std::sqrt(scale / sxx);
        fit.intercept_se = std::sqrt(scale * (1.0 / sw + mx * mx / sxx));
    }
    return fit;
}

unsigned resolve_threads(unsigned requested) noexcept {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace fsmooth
