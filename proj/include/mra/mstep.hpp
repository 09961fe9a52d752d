#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mra/core.hpp"
#include "mra/datagen.hpp"
#include "mra/estep.hpp"

namespace mra {

/// How the variance update normalises. EmStandard divides component k's
/// weighted squared residuals by component k's responsibility mass (the
/// usual EM M-step, and the exact minimiser of the energy over sigma_k^2).
/// PaperLiteral divides both components by the total mass M*N.
enum class SigmaMode { EmStandard, PaperLiteral };

enum class TvTopology { Circular, Linear };

/// Dual ascent form. PostUpdate uses p += tau (u_{k+1} - d_{k+1}); AsPrinted
/// uses the residual of the previous iterate, p += tau (u_k - d_k).
enum class DualUpdate { PostUpdate, AsPrinted };

struct AdmmParams {
    double r = 1.0;      ///< augmented-Lagrangian penalty
    double tau = 1.0;    ///< dual step, must satisfy 0 < tau < 2r
    double gamma = 0.0;  ///< TV weight
    int max_inner = 500;
    double inner_tol = 1e-6;
    DualUpdate dual = DualUpdate::PostUpdate;

    void validate() const;
};

struct AdmmState {
    Signal u;
    Signal d;
    Signal p;
};

struct AdmmResult {
    AdmmState state;
    int iterations = 0;
    bool converged = false;
};

double update_alpha(const ShiftWeights& w, const NoiseResponsibilities& q);

/// (sigma1^2, sigma2^2) from the squared residuals f - R_l u. Results are
/// floored at kVarianceFloor; a component with zero mass and zero residual
/// energy throws DegenerateComponentError.
std::pair<double, double> update_sigma(const ObservationSet& f, const Signal& u, const ShiftWeights& w,
                                       const NoiseResponsibilities& q, SigmaMode mode = SigmaMode::EmStandard);

inline constexpr double kVarianceFloor = 1e-12;

/// argmin_u 0.5 ||u - v||^2 + weight * sum_j |u_{j+1} - u_j|. The linear
/// case is solved by Condat's direct taut-string method; the circular case
/// fixes the dual variable of the wrap-around edge by bisection and solves a
/// linear problem for it.
Signal tv_prox_1d(const Signal& v, double weight, TvTopology topology = TvTopology::Circular);
void tv_prox_linear(std::span<const double> v, double weight, std::span<double> out);
void tv_prox_circular(std::span<const double> v, double weight, std::span<double> out);

double total_variation(std::span<const double> u, TvTopology topology = TvTopology::Circular);

/// Closed-form minimiser of the d-subproblem:
///   d_j = [sum w t1 + s (r u_j + p_j)] / [sum w t2 + r s],  s = sigma1^2 sigma2^2
/// with t2 = q1 sigma2^2 + (1 - q1) sigma1^2 and t1 = t2 * (R_l^{-1} f_i)_j.
Signal solve_d_subproblem(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q,
                          const NoiseModel& theta, const Signal& u, const Signal& p, double r);

/// ADMM for min_u  data(u) + gamma TV(u), splitting u (TV prox) from d
/// (quadratic data term).
AdmmResult admm_signal_update(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q,
                              const NoiseModel& theta, const AdmmState& state0, const AdmmParams& params);

// ---------------------------------------------------------------------------
// Moment-based forms used by the solver's streaming path.

/// The weighted least-squares data term
///   sum_{i,l,j,k} w q_k (f_ij - (R_l d)_j)^2 / (2 sigma_k^2)
/// reduced to per-coordinate sums.
class DataTerm {
public:
    DataTerm(ResponsibilityMoments moments, const NoiseModel& theta);

    std::size_t size() const noexcept { return numer_.size(); }
    /// sum_{i,l} w t1 at coordinate j
    std::span<const double> numerator() const noexcept { return numer_; }
    /// sum_{i,l} w t2 at coordinate j
    std::span<const double> denominator() const noexcept { return denom_; }
    double variance_product() const noexcept { return s_; }
    const ResponsibilityMoments& moments() const noexcept { return moments_; }

    /// d-update closed form.
    void solve_d(std::span<const double> u, std::span<const double> p, double r, std::span<double> d) const;
    double value(std::span<const double> u) const;
    /// Gradient of value() at u.
    std::vector<double> gradient(std::span<const double> u) const;

private:
    ResponsibilityMoments moments_;
    NoiseModel theta_;
    double s_;
    std::vector<double> numer_;
    std::vector<double> denom_;
};

/// Residual moments are taken about u_ref; any reference gives the same
/// term up to rounding, one close to the solution keeps the sums small.
DataTerm data_term(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q,
                   const NoiseModel& theta, const Signal& u_ref);

AdmmResult admm(const DataTerm& data, const AdmmState& state0, const AdmmParams& params);

/// data(u) + gamma * TV(u), the objective the ADMM loop minimises.
double signal_objective(const DataTerm& data, std::span<const double> u, double gamma);

double update_alpha(const ResponsibilityMoments& moments);

/// Variance update with the residuals re-centred on u_new.
std::pair<double, double> update_sigma(const ResponsibilityMoments& moments, std::span<const double> u_new,
                                       SigmaMode mode = SigmaMode::EmStandard);

/// Weighted squared residual sum for component k about u_new.
double residual_energy(const ResponsibilityMoments& moments, std::span<const double> u_new, int k);

}  // namespace mra
