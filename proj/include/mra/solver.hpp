#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mra/core.hpp"
#include "mra/datagen.hpp"
#include "mra/estep.hpp"
#include "mra/mstep.hpp"

namespace mra {

/// Starting signal.
///   FirstObservation  f_1
///   MeanObservation   the unaligned mean of all observations
///   AlignedMedian     robust consensus, see aligned_median_signal
///   Supplied          SolverConfig::u0 as given
enum class U0Policy { FirstObservation, MeanObservation, AlignedMedian, Supplied };

/// Named starting points for the noise parameters. All of them scale with
/// v, the variance of the observations about their (unaligned) mean:
///   Spread        alpha 0.5, sigma1^2 = v, sigma2^2 = v / 1e2
///   WideMinority  alpha 0.2, sigma1^2 = v, sigma2^2 = v / 1e3
///   WideMajority  alpha 0.8, sigma1^2 = v, sigma2^2 = v / 1e1
///   Supplied      SolverConfig::theta0 as given
enum class ThetaInit { Spread, WideMinority, WideMajority, Supplied };

struct SolverConfig {
    ThetaInit theta_init = ThetaInit::Spread;
    NoiseModel theta0;  ///< used when theta_init == Supplied
    AdmmParams admm;
    double outer_tol = 1e-4;
    int max_outer = 200;
    SigmaMode sigma_mode = SigmaMode::EmStandard;
    U0Policy u0_policy = U0Policy::FirstObservation;
    std::optional<Signal> u0;  ///< used when u0_policy == Supplied
    unsigned threads = 1;

    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double energy = 0.0;
    double rel_change = 0.0;
    NoiseModel theta;
    int inner_iters = 0;
    bool inner_converged = true;
};

struct SolverReport {
    Signal u_hat;
    NoiseModel theta_hat;
    NoiseModel initial_theta;
    double initial_energy = 0.0;
    std::vector<double> energy_trace;  ///< one entry per outer iteration
    std::vector<double> rel_change_trace;
    std::vector<IterationRecord> iterations;
    int outer_iters = 0;
    long inner_iters_total = 0;
    bool converged = false;
    bool inner_all_converged = true;

    /// Largest increase J[k+1] - J[k] relative to |J[k]|, including the
    /// step from the initial energy. Non-positive for a descending trace.
    double max_relative_energy_increase() const;
};

NoiseModel initial_noise_model(const ObservationSet& f, ThetaInit init, const NoiseModel& supplied = {});
Signal initial_signal(const ObservationSet& f, const SolverConfig& config);

/// Hard-assignment consensus started from f_1. Each round aligns every
/// observation to the template by the shift minimising
///   sum_j log(|f_ij - t_{j-l}| + eps),   eps = 1e-3 * robust scale of f,
/// which rewards near-exact agreement and ignores the size of outliers, then
/// replaces the template by the coordinatewise lower median of the aligned
/// samples. Stops when no assignment changes or after `max_rounds`.
Signal aligned_median_signal(const ObservationSet& f, int max_rounds = 10, unsigned threads = 1);

/// The mixed Gaussian-Gaussian energy
///   sum_{i,l} w [ sum_{j,k} q_k r^2 / (2 sigma_k^2)
///               + sum_{j,k} q_k (log sigma_k^2 / 2 - log alpha_k)
///               + sum_{j,k} q_k log q_k ]
///   + sum_{i,l} w log w + gamma TV(u)
/// with r = f_ij - (R_l u)_j and 0 log 0 = 0. A component with zero weight
/// that still carries responsibility makes the energy +inf.
double energy_J(const Signal& u, const NoiseModel& theta, const ShiftWeights& w, const NoiseResponsibilities& q,
                const ObservationSet& f, double gamma);

/// energy_J at the minimising (w, q), given the marginal log-likelihood
/// sum_i log sum_l p(f_i - R_l u):  -log_marginal - (MN/2) log(2 pi) + gamma TV(u).
double energy_at_posterior(double log_marginal, std::size_t m, std::size_t n, const Signal& u, double gamma);

/// Alternating minimisation: ADMM signal update, noise-parameter update,
/// then the noise and shift posteriors, until the relative change of u drops
/// below outer_tol.
SolverReport mgg_softmax_solve(const ObservationSet& f, const SolverConfig& config);

/// The same loop with a single Gaussian noise component (alpha fixed at 1,
/// one shared variance).
SolverReport em_single_gaussian_solve(const ObservationSet& f, const SolverConfig& config);

/// CSV: iter,energy,rel_change,alpha,sigma1_sq,sigma2_sq,inner_iters,inner_converged.
/// Row 0 holds the initial state with an empty rel_change.
void write_trace(std::ostream& out, const SolverReport& report);

}  // namespace mra
