#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "mra/core.hpp"
#include "mra/datagen.hpp"

namespace testing {

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(gen);
    return v;
}

inline mra::Signal random_signal(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    std::vector<double> v(n);
    for (double& x : v) x = dist(gen);
    return mra::Signal(std::move(v));
}

// Observation set filled with arbitrary values, no ground truth.
inline mra::ObservationSet random_observations(std::mt19937_64& gen, std::size_t m, std::size_t n,
                                               double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    mra::ObservationSet obs;
    obs.data = mra::Matrix(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) obs.data(i, j) = dist(gen);
    return obs;
}

inline double gauss_pdf(double r, double var) {
    return std::exp(-r * r / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
    return d;
}

}  // namespace testing
