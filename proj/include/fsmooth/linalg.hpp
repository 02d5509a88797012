#pragma once

// Small dense row-major helpers over spans; d is tiny (1-3) in practice.

#include <cmath>
#include <cstddef>
#include <span>

namespace fsmooth::linalg {

inline double norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// c = a * b, all d x d.
inline void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t d) noexcept {
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += a[i * d + k] * b[k * d + j];
            c[i * d + j] = s;
        }
}

inline void set_identity(std::span<double> a, std::size_t d) noexcept {
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) a[i * d + j] = (i == j) ? 1.0 : 0.0;
}

// Returns false when the matrix is singular or the inverse is not finite.
bool invert(std::span<const double> a, std::span<double> inv, std::size_t d);

}  // namespace fsmooth::linalg
