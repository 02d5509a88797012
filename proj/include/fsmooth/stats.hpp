#pragma once

#include <cstddef>
#include <exception>
#include <span>
#include <thread>
#include <vector>

namespace fsmooth {

// Neumaier-compensated sum in index order. Results depend only on the input
// order, never on how the values were produced.
double compensated_sum(std::span<const double> values) noexcept;

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double variance = 0.0;  // unbiased sample variance
    std::size_t count = 0;
};

MeanEstimate mean_estimate(std::span<const double> values) noexcept;

// log(mean(exp(v))) with max-shift.
double log_mean_exp(std::span<const double> log_values) noexcept;

// Ordinary least squares y = a + b x with standard errors from residuals.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    std::size_t count = 0;
};

// Weighted least squares; empty weights means unit weights. The slope SE is
// scaled by the reduced chi-square when it exceeds 1.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

unsigned resolve_threads(unsigned requested) noexcept;

// Runs body(i) for i in [0, n) over `threads` workers with static chunking.
// The first exception by index is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    if (threads > n) threads = static_cast<unsigned>(n);
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::size_t> error_index(threads, n);
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                const std::size_t begin = n * w / threads;
                const std::size_t end = n * (w + 1) / threads;
                for (std::size_t i = begin; i < end; ++i) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[w] = std::current_exception();
                        error_index[w] = i;
                        return;
                    }
                }
            });
        }
    }
    std::size_t first = n;
    std::exception_ptr err;
    for (unsigned w = 0; w < threads; ++w) {
        if (errors[w] && error_index[w] < first) {
            first = error_index[w];
            err = errors[w];
        }
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace fsmooth
