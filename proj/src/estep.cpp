#include "mra/estep.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mra/parallel.hpp"

namespace mra {
namespace {

constexpr std::size_t kChunkRows = 64;

// a_k(r) = log(alpha_k / sqrt(2 pi sigma_k^2)) - r^2 / (2 sigma_k^2)
struct MixtureTerms {
    double log_c1;
    double log_c2;
    double half_prec1;
    double half_prec2;

    explicit MixtureTerms(const NoiseModel& theta) {
        validate(theta);
        const double log2pi = std::log(2.0 * std::numbers::pi);
        const double ninf = -std::numeric_limits<double>::infinity();
        log_c1 = theta.alpha > 0.0 ? std::log(theta.alpha) - 0.5 * (log2pi + std::log(theta.sigma1_sq)) : ninf;
        log_c2 = theta.alpha < 1.0 ? std::log1p(-theta.alpha) - 0.5 * (log2pi + std::log(theta.sigma2_sq))
                                   : ninf;
        half_prec1 = 0.5 / theta.sigma1_sq;
        half_prec2 = 0.5 / theta.sigma2_sq;
    }

    // log mixture density and component-1 responsibility via the log-odds
    void evaluate(double r, double& log_mix, double& q1) const noexcept {
        const double r2 = r * r;
        const double a1 = log_c1 - r2 * half_prec1;
        const double a2 = log_c2 - r2 * half_prec2;
        const double odds = a1 - a2;
        if (odds >= 0.0) {
            const double e = std::exp(-odds);
            log_mix = a1 + std::log1p(e);
            q1 = 1.0 / (1.0 + e);
        } else {
            const double e = std::exp(odds);
            log_mix = a2 + std::log1p(e);
            q1 = e / (1.0 + e);
        }
    }
};

void check_shapes(const ObservationSet& f, const Signal& u) {
    if (u.size() != f.n())
        throw ShapeError("signal length " + std::to_string(u.size()) + " differs from observation length " +
                         std::to_string(f.n()));
}

// For one observation: loglik[l] and q1[l * n + j] (j indexes the sample).
void row_posteriors(std::span<const double> fi, std::span<const double> u, const MixtureTerms& terms,
                    double* loglik, double* q1) {
    const std::size_t n = u.size();
    for (std::size_t l = 0; l < n; ++l) {
        double acc = 0.0;
        double* ql = q1 + l * n;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jp = j >= l ? j - l : j + n - l;
            double lm, q;
            terms.evaluate(fi[j] - u[jp], lm, q);
            acc += lm;
            ql[j] = q;
        }
        loglik[l] = acc;
    }
}

// Normalises a log-likelihood row into w and returns its log-sum-exp.
double normalise_row(std::span<const double> loglik, std::span<double> w) {
    const double lse = log_sum_exp(loglik);
    for (std::size_t l = 0; l < loglik.size(); ++l) w[l] = std::exp(loglik[l] - lse);
    return lse;
}

}  // namespace

Matrix shift_log_likelihoods(const ObservationSet& f, const Signal& u, const NoiseModel& theta) {
    check_shapes(f, u);
    const MixtureTerms terms(theta);
    const std::size_t n = f.n();
    Matrix out(f.m(), n);
    std::vector<double> q(n * n);
    for (std::size_t i = 0; i < f.m(); ++i) row_posteriors(f.row(i), u.values(), terms, out.row(i).data(), q.data());
    return out;
}

ShiftWeights update_shift_weights(const Matrix& loglik) {
    ShiftWeights sw{Matrix(loglik.rows(), loglik.cols())};
    for (std::size_t i = 0; i < loglik.rows(); ++i) {
        try {
            normalise_row(loglik.row(i), sw.w.row(i));
        } catch (const DegenerateLikelihoodError& e) {
            throw DegenerateLikelihoodError("observation " + std::to_string(i) + ": " + e.what());
        }
    }
    return sw;
}

NoiseResponsibilities update_noise_responsibilities(const ObservationSet& f, const Signal& u,
                                                    const NoiseModel& theta) {
    check_shapes(f, u);
    const MixtureTerms terms(theta);
    const std::size_t n = f.n();
    NoiseResponsibilities q(f.m(), n);
    std::vector<double> loglik(n), buf(n * n);
    for (std::size_t i = 0; i < f.m(); ++i) {
        row_posteriors(f.row(i), u.values(), terms, loglik.data(), buf.data());
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t j = 0; j < n; ++j) q(i, j, l) = buf[l * n + j];
    }
    return q;
}

ResponsibilityMoments::ResponsibilityMoments(std::size_t m_, std::size_t n_, std::span<const double> u)
    : m(m_), n(n_), u_ref(u.begin(), u.end()) {
    for (int k = 0; k < 2; ++k) {
        mass[k].assign(n, 0.0);
        first[k].assign(n, 0.0);
        second[k].assign(n, 0.0);
    }
}

double ResponsibilityMoments::total_mass(int k) const noexcept {
    double s = 0.0;
    for (double v : mass[k - 1]) s += v;
    return s;
}

void ResponsibilityMoments::merge(const ResponsibilityMoments& other) {
    for (int k = 0; k < 2; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            mass[k][j] += other.mass[k][j];
            first[k][j] += other.first[k][j];
            second[k][j] += other.second[k][j];
        }
}

PosteriorPass posterior_pass(const ObservationSet& f, const Signal& u, const NoiseModel& theta,
                             unsigned threads) {
    check_shapes(f, u);
    const MixtureTerms terms(theta);
    const std::size_t m = f.m();
    const std::size_t n = f.n();
    const std::size_t chunks = (m + kChunkRows - 1) / kChunkRows;

    PosteriorPass out;
    out.weights.w = Matrix(m, n);
    std::vector<ResponsibilityMoments> partial(chunks);
    std::vector<double> partial_lml(chunks, 0.0);

    run_chunks(chunks, threads, [&](std::size_t c) {
        ResponsibilityMoments mom(m, n, u.values());
        std::vector<double> loglik(n), q1(n * n);
        double lml = 0.0;
        const std::size_t end = std::min(m, (c + 1) * kChunkRows);
        for (std::size_t i = c * kChunkRows; i < end; ++i) {
            const auto fi = f.row(i);
            row_posteriors(fi, u.values(), terms, loglik.data(), q1.data());
            auto wi = out.weights.w.row(i);
            try {
                lml += normalise_row(loglik, wi);
            } catch (const DegenerateLikelihoodError& e) {
                throw DegenerateLikelihoodError("observation " + std::to_string(i) + ": " + e.what());
            }
            for (std::size_t l = 0; l < n; ++l) {
                const double wl = wi[l];
                if (wl == 0.0) continue;
                const double* ql = q1.data() + l * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t jp = j >= l ? j - l : j + n - l;
                    const double r = fi[j] - u[jp];
                    const double g1 = wl * ql[j];
                    const double g2 = wl - g1;
                    mom.mass[0][jp] += g1;
                    mom.first[0][jp] += g1 * r;
                    mom.second[0][jp] += g1 * r * r;
                    mom.mass[1][jp] += g2;
                    mom.first[1][jp] += g2 * r;
                    mom.second[1][jp] += g2 * r * r;
                }
            }
        }
        partial[c] = std::move(mom);
        partial_lml[c] = lml;
    });

    out.moments = ResponsibilityMoments(m, n, u.values());
    for (std::size_t c = 0; c < chunks; ++c) {
        out.moments.merge(partial[c]);
        out.log_marginal += partial_lml[c];
    }
    return out;
}

ResponsibilityMoments moments_from_tensors(const ObservationSet& f, const Signal& u_ref,
                                           const ShiftWeights& w, const NoiseResponsibilities& q) {
    check_shapes(f, u_ref);
    const std::size_t m = f.m();
    const std::size_t n = f.n();
    if (w.m() != m || w.n() != n || q.m() != m || q.n() != n)
        throw ShapeError("weights/responsibilities do not match the observation set");
    ResponsibilityMoments mom(m, n, u_ref.values());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t j = 0; j < n; ++j) {
                const std::size_t jp = (j + n - l) % n;
                const double r = f(i, j) - u_ref[jp];
                for (int k = 1; k <= 2; ++k) {
                    const double g = w(i, l) * q.q(k, i, j, l);
                    mom.mass[k - 1][jp] += g;
                    mom.first[k - 1][jp] += g * r;
                    mom.second[k - 1][jp] += g * r * r;
                }
            }
    return mom;
}

}  // namespace mra
