#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mra {

// Error families. Callers that need to distinguish failure modes catch the
// specific type; everything derives from std::runtime_error.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateLikelihoodError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateComponentError : public std::runtime_error {
public:
    explicit DegenerateComponentError(int component)
        : std::runtime_error("noise component " + std::to_string(component) +
                             " received no responsibility mass"),
          component_(component) {}
    int component() const noexcept { return component_; }

private:
    int component_;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}
    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

/// A length-N real signal with finite entries, N >= 2.
class Signal {
public:
    Signal() = default;
    explicit Signal(std::vector<double> values);
    static Signal zeros(std::size_t n);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    double norm() const noexcept;
    double mean() const noexcept;

    friend bool operator==(const Signal&, const Signal&) = default;

private:
    std::vector<double> values_;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Cyclic shift amount, stored as its canonical representative in [0, n).
class ShiftIndex {
public:
    ShiftIndex(long l, std::size_t n);
    std::size_t value() const noexcept { return l_; }
    std::size_t period() const noexcept { return n_; }
    friend bool operator==(const ShiftIndex&, const ShiftIndex&) = default;

private:
    std::size_t l_;
    std::size_t n_;
};

/// Canonical representative of l modulo n.
inline std::size_t wrap_index(long l, std::size_t n) noexcept {
    const long m = static_cast<long>(n);
    long r = l % m;
    return static_cast<std::size_t>(r < 0 ? r + m : r);
}

/// Parameters of the two-component zero-mean Gaussian mixture. alpha is the
/// weight of component 1.
struct NoiseModel {
    double alpha = 0.5;
    double sigma1_sq = 1.0;
    double sigma2_sq = 1.0;

    NoiseModel() = default;
    NoiseModel(double alpha_, double sigma1_sq_, double sigma2_sq_);

    double weight(int k) const noexcept { return k == 1 ? alpha : 1.0 - alpha; }
    double variance(int k) const noexcept { return k == 1 ? sigma1_sq : sigma2_sq; }

    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

void validate(const NoiseModel& theta);

/// Probability vector: entries in [0,1], summing to one within 1e-12.
class SimplexVector {
public:
    explicit SimplexVector(std::vector<double> weights);
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t d) const noexcept { return weights_[d]; }

private:
    std::vector<double> weights_;
};

bool is_simplex(std::span<const double> v, double tol = 1e-12);

/// (R_l x)[j] = x[(j - l) mod n].
Signal circular_shift(const Signal& x, const ShiftIndex& l);
Signal circular_shift(const Signal& x, long l);

/// log(sum(exp(v))) with max subtraction. Throws DegenerateLikelihoodError
/// when every entry is -inf.
double log_sum_exp(std::span<const double> v);

/// Two-term specialisation used in the inner likelihood loops.
inline double log_add_exp(double a, double b) noexcept {
    if (a < b) std::swap(a, b);
    if (a == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

struct SoftMax {
    double value;
    SimplexVector maximizer;
};

/// eps * log(sum(exp(x / eps))), together with the simplex vector w* that
/// attains the variational form <w, x> - eps * sum(w log w).
SoftMax soft_max_eps(std::span<const double> x, double eps);

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) noexcept { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace mra
