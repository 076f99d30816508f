#pragma once

#include "crdnn/nn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace testing_util {

using crdnn::nn::Index;
using crdnn::nn::Matrix;
using crdnn::nn::Vector;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = u(rng);
    return m;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

// |a - n| / max(|a|, |n|); gradients that are both below floor are compared
// absolutely instead, since their ratio is dominated by rounding.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < floor) return diff / floor;
    return diff / scale;
}

// Central difference of f with respect to *x.
template <class F>
double central_difference(double* x, F&& f, double eps = 1e-5) {
    const double saved = *x;
    *x = saved + eps;
    const double plus = f();
    *x = saved - eps;
    const double minus = f();
    *x = saved;
    return (plus - minus) / (2.0 * eps);
}

} // namespace testing_util
