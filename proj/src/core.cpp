#include "mra/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mra {

Signal::Signal(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw ParameterError("signal length must be at least 2, got " +
                             std::to_string(values_.size()));
    for (std::size_t j = 0; j < values_.size(); ++j)
        if (!std::isfinite(values_[j]))
            throw ParameterError("signal entry " + std::to_string(j) + " is not finite");
}

Signal Signal::zeros(std::size_t n) { return Signal(std::vector<double>(n, 0.0)); }

double Signal::norm() const noexcept {
    // summing the sorted squares makes the result independent of the order
    // of the entries, so cyclic shifts keep the norm bit for bit
    std::vector<double> sq(values_.size());
    for (std::size_t j = 0; j < sq.size(); ++j) sq[j] = values_[j] * values_[j];
    std::sort(sq.begin(), sq.end());
    double s = 0.0;
    for (double v : sq) s += v;
    return std::sqrt(s);
}

double Signal::mean() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0) /
           static_cast<double>(values_.size());
}

ShiftIndex::ShiftIndex(long l, std::size_t n) : n_(n) {
    if (n == 0) throw ParameterError("shift period must be positive");
    l_ = wrap_index(l, n);
}

NoiseModel::NoiseModel(double alpha_, double sigma1_sq_, double sigma2_sq_)
    : alpha(alpha_), sigma1_sq(sigma1_sq_), sigma2_sq(sigma2_sq_) {
    validate(*this);
}

void validate(const NoiseModel& theta) {
    if (!(theta.alpha >= 0.0 && theta.alpha <= 1.0))
        throw ParameterError("alpha must lie in [0,1], got " + std::to_string(theta.alpha));
    if (!(theta.sigma1_sq > 0.0 && std::isfinite(theta.sigma1_sq)))
        throw ParameterError("sigma1_sq must be positive and finite");
    if (!(theta.sigma2_sq > 0.0 && std::isfinite(theta.sigma2_sq)))
        throw ParameterError("sigma2_sq must be positive and finite");
}

bool is_simplex(std::span<const double> v, double tol) {
    double s = 0.0;
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) return false;
        s += x;
    }
    return std::abs(s - 1.0) <= tol;
}

SimplexVector::SimplexVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty() || !is_simplex(weights_))
        throw ParameterError("weights do not form a probability vector");
}

Signal circular_shift(const Signal& x, const ShiftIndex& l) {
    const std::size_t n = x.size();
    if (l.period() != n) throw ShapeError("shift period does not match signal length");
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = x[(j + n - l.value()) % n];
    return Signal(std::move(out));
}

Signal circular_shift(const Signal& x, long l) { return circular_shift(x, ShiftIndex(l, x.size())); }

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) throw ParameterError("log_sum_exp of an empty vector");
    const double top = *std::max_element(v.begin(), v.end());
    if (top == -std::numeric_limits<double>::infinity())
        throw DegenerateLikelihoodError("every log-likelihood is -inf");
    if (std::isnan(top) || top == std::numeric_limits<double>::infinity())
        throw DegenerateLikelihoodError("log-likelihood is not a number");
    double s = 0.0;
    for (double x : v) s += std::exp(x - top);
    return top + std::log(s);
}

SoftMax soft_max_eps(std::span<const double> x, double eps) {
    if (!(eps > 0.0)) throw ParameterError("soft-max temperature must be positive");
    std::vector<double> scaled(x.size());
    std::transform(x.begin(), x.end(), scaled.begin(), [eps](double v) { return v / eps; });
    const double lse = log_sum_exp(scaled);
    std::vector<double> w(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) w[d] = std::exp(scaled[d] - lse);
    // exp rounding can leave the sum a few ulps away from one
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    return {eps * lse, SimplexVector(std::move(w))};
}

}  // namespace mra
