#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mra/core.hpp"
#include "mra/datagen.hpp"

namespace mra {

/// Posterior probability w(i, l) that observation i carries shift l.
/// Every row lies on the simplex.
struct ShiftWeights {
    Matrix w;

    std::size_t m() const noexcept { return w.rows(); }
    std::size_t n() const noexcept { return w.cols(); }
    double operator()(std::size_t i, std::size_t l) const noexcept { return w(i, l); }
};

/// q1(i, j, l): probability that sample j of observation i came from noise
/// component 1, given shift l. The component-2 responsibility is 1 - q1.
class NoiseResponsibilities {
public:
    NoiseResponsibilities() = default;
    NoiseResponsibilities(std::size_t m, std::size_t n, double fill = 0.0)
        : m_(m), n_(n), q1_(m * n * n, fill) {}

    std::size_t m() const noexcept { return m_; }
    std::size_t n() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j, std::size_t l) noexcept {
        return q1_[(i * n_ + j) * n_ + l];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t l) const noexcept {
        return q1_[(i * n_ + j) * n_ + l];
    }
    double q(int k, std::size_t i, std::size_t j, std::size_t l) const noexcept {
        const double v = (*this)(i, j, l);
        return k == 1 ? v : 1.0 - v;
    }

private:
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    std::vector<double> q1_;
};

/// loglik(i, l) = sum_j log p(f_ij - (R_l u)_j) under the mixture theta.
Matrix shift_log_likelihoods(const ObservationSet& f, const Signal& u, const NoiseModel& theta);

/// Row-wise normalisation of exp(loglik).
ShiftWeights update_shift_weights(const Matrix& loglik);

NoiseResponsibilities update_noise_responsibilities(const ObservationSet& f, const Signal& u,
                                                    const NoiseModel& theta);

// ---------------------------------------------------------------------------
// Streaming path. The q tensor has M*N*N entries, which is too large to hold
// for full-size runs, so the solver never materialises it. Instead one
// pass per outer iteration computes w and q row by row and folds them into
// the moments the M-step needs, indexed by signal coordinate j' = j - l.

/// Weighted moments of the residuals r = f(i, j'+l) - u_ref(j') for each
/// noise component k (index 0 -> component 1):
///   mass[k][j']   = sum_{i,l} w(i,l) q_k(i, j'+l, l)
///   first[k][j']  = sum_{i,l} w(i,l) q_k(i, j'+l, l) r
///   second[k][j'] = sum_{i,l} w(i,l) q_k(i, j'+l, l) r^2
struct ResponsibilityMoments {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<double> u_ref;
    std::array<std::vector<double>, 2> mass;
    std::array<std::vector<double>, 2> first;
    std::array<std::vector<double>, 2> second;

    ResponsibilityMoments() = default;
    ResponsibilityMoments(std::size_t m_, std::size_t n_, std::span<const double> u);

    double total_mass(int k) const noexcept;
    void merge(const ResponsibilityMoments& other);
};

struct PosteriorPass {
    ShiftWeights weights;
    ResponsibilityMoments moments;
    /// sum_i log sum_l p(f_i - R_l u), the marginal log-likelihood without
    /// the uniform 1/N shift prior.
    double log_marginal = 0.0;
};

/// Computes w and q at (u, theta) and their moments in one sweep over the
/// observations. Rows are processed in fixed-size chunks whose partial sums
/// are merged in chunk order, so the result does not depend on `threads`.
PosteriorPass posterior_pass(const ObservationSet& f, const Signal& u, const NoiseModel& theta,
                             unsigned threads = 1);

/// The same moments computed from materialised w and q.
ResponsibilityMoments moments_from_tensors(const ObservationSet& f, const Signal& u_ref,
                                           const ShiftWeights& w, const NoiseResponsibilities& q);

}  // namespace mra
