#include "mra/solver.hpp"

#include "mra/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace mra {
namespace {

// A component whose responsibility mass falls below this fraction of M*N is
// treated as dead: its variance is frozen and alpha moves to the boundary.
constexpr double kDeadMassFraction = 1e-8;

enum class Model { Mixture, SingleGaussian };

double rel_distance(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num += (a[j] - b[j]) * (a[j] - b[j]);
        den += b[j] * b[j];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

NoiseModel next_noise_model(const ResponsibilityMoments& mom, std::span<const double> u_new,
                            const NoiseModel& prev, SigmaMode mode, Model model) {
    if (model == Model::SingleGaussian) {
        const double total = static_cast<double>(mom.m * mom.n);
        const double s = std::max(residual_energy(mom, u_new, 1) / total, kVarianceFloor);
        return NoiseModel(1.0, s, s);
    }
    const double dead = kDeadMassFraction * static_cast<double>(mom.m * mom.n);
    const bool dead1 = mom.total_mass(1) < dead;
    const bool dead2 = mom.total_mass(2) < dead;
    if (dead1 && dead2) throw DegenerateComponentError(1);

    NoiseModel next = prev;
    if (dead1 || dead2) {
        // update only the live component, with the whole mass behind it
        const int live = dead1 ? 2 : 1;
        const double var =
            std::max(residual_energy(mom, u_new, live) / mom.total_mass(live), kVarianceFloor);
        next.alpha = dead1 ? 0.0 : 1.0;
        (live == 1 ? next.sigma1_sq : next.sigma2_sq) = var;
        return next;
    }
    next.alpha = update_alpha(mom);
    const auto [s1, s2] = update_sigma(mom, u_new, mode);
    next.sigma1_sq = s1;
    next.sigma2_sq = s2;
    validate(next);
    return next;
}

SolverReport run(const ObservationSet& f, const SolverConfig& config, Model model) {
    config.validate();
    validate(f);
    const std::size_t m = f.m();
    const std::size_t n = f.n();
    const double gamma = config.admm.gamma;

    Signal u = initial_signal(f, config);
    NoiseModel theta = initial_noise_model(f, config.theta_init, config.theta0);
    if (model == Model::SingleGaussian) theta = NoiseModel(1.0, theta.sigma1_sq, theta.sigma1_sq);

    SolverReport rep;
    rep.initial_theta = theta;
    PosteriorPass pass = posterior_pass(f, u, theta, config.threads);
    rep.initial_energy = energy_at_posterior(pass.log_marginal, m, n, u, gamma);

    Signal p = Signal::zeros(n);
    for (int nu = 1; nu <= config.max_outer; ++nu) {
        AdmmResult inner;
        try {
            const DataTerm data(std::move(pass.moments), theta);
            inner = admm(data, AdmmState{u, u, p}, config.admm);
            const NoiseModel next = next_noise_model(data.moments(), inner.state.u.values(), theta,
                                                     config.sigma_mode, model);
            theta = next;
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string("outer iteration ") + std::to_string(nu) + ": " + e.what(), nu);
        }
        const Signal& u_next = inner.state.u;
        try {
            pass = posterior_pass(f, u_next, theta, config.threads);
        } catch (const DegenerateLikelihoodError& e) {
            throw DegenerateLikelihoodError("outer iteration " + std::to_string(nu) + ": " + e.what());
        }

        IterationRecord rec;
        rec.iter = nu;
        rec.energy = energy_at_posterior(pass.log_marginal, m, n, u_next, gamma);
        rec.rel_change = rel_distance(u_next.values(), u.values());
        rec.theta = theta;
        rec.inner_iters = inner.iterations;
        rec.inner_converged = inner.converged;
        rep.iterations.push_back(rec);
        rep.energy_trace.push_back(rec.energy);
        rep.rel_change_trace.push_back(rec.rel_change);
        rep.inner_iters_total += inner.iterations;
        rep.inner_all_converged = rep.inner_all_converged && inner.converged;
        rep.outer_iters = nu;

        u = u_next;
        p = inner.state.p;
        if (!std::isfinite(rec.energy)) throw DivergenceError("energy is not finite", nu);
        if (rec.rel_change < config.outer_tol) {
            rep.converged = true;
            break;
        }
    }
    rep.u_hat = u;
    rep.theta_hat = theta;
    return rep;
}

}  // namespace

void SolverConfig::validate() const {
    if (!(outer_tol > 0.0)) throw ParameterError("outer_tol must be positive");
    if (max_outer < 1) throw ParameterError("max_outer must be at least 1");
    admm.validate();
    if (theta_init == ThetaInit::Supplied) mra::validate(theta0);
    if (u0_policy == U0Policy::Supplied && !u0) throw ParameterError("u0 policy 'supplied' needs an initial signal");
}

double SolverReport::max_relative_energy_increase() const {
    double worst = -std::numeric_limits<double>::infinity();
    double prev = initial_energy;
    for (double e : energy_trace) {
        worst = std::max(worst, (e - prev) / std::max(std::abs(prev), 1e-300));
        prev = e;
    }
    return worst;
}

NoiseModel initial_noise_model(const ObservationSet& f, ThetaInit init, const NoiseModel& supplied) {
    if (init == ThetaInit::Supplied) {
        validate(supplied);
        return supplied;
    }
    const std::size_t m = f.m(), n = f.n();
    std::vector<double> mean(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) mean[j] += f(i, j);
    for (double& v : mean) v /= static_cast<double>(m);
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) v += (f(i, j) - mean[j]) * (f(i, j) - mean[j]);
    v /= static_cast<double>(m * n);
    if (!(v > 0.0)) {
        // a single observation has no spread about its own mean
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += f(0, j);
        mu /= static_cast<double>(n);
        v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += (f(0, j) - mu) * (f(0, j) - mu);
        v /= static_cast<double>(n);
    }
    if (!(v > 0.0)) v = 1.0;
    switch (init) {
        case ThetaInit::WideMinority: return NoiseModel(0.2, v, v / 1e3);
        case ThetaInit::WideMajority: return NoiseModel(0.8, v, v / 1e1);
        default: return NoiseModel(0.5, v, v / 1e2);
    }
}

Signal initial_signal(const ObservationSet& f, const SolverConfig& config) {
    switch (config.u0_policy) {
        case U0Policy::Supplied:
            if (config.u0->size() != f.n()) throw ShapeError("supplied u0 has the wrong length");
            return *config.u0;
        case U0Policy::MeanObservation: {
            std::vector<double> mean(f.n(), 0.0);
            for (std::size_t i = 0; i < f.m(); ++i)
                for (std::size_t j = 0; j < f.n(); ++j) mean[j] += f(i, j);
            for (double& v : mean) v /= static_cast<double>(f.m());
            return Signal(std::move(mean));
        }
        case U0Policy::AlignedMedian: return aligned_median_signal(f, 10, config.threads);
        default: return Signal(std::vector<double>(f.row(0).begin(), f.row(0).end()));
    }
}

namespace {

double lower_median(std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

}  // namespace

Signal aligned_median_signal(const ObservationSet& f, int max_rounds, unsigned threads) {
    validate(f);
    const std::size_t m = f.m(), n = f.n();
    std::vector<double> all(f.data.data().begin(), f.data.data().end());
    const double centre = lower_median(all);
    for (double& x : all) x = std::abs(x - centre);
    double scale = 1.4826 * lower_median(all);
    if (!(scale > 0.0)) scale = 1.0;
    const double eps = 1e-3 * scale;

    std::vector<double> t(f.row(0).begin(), f.row(0).end());
    std::vector<std::size_t> shift(m, n);
    std::vector<double> column(m);
    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (m + kChunk - 1) / kChunk;
    for (int round = 0; round < max_rounds; ++round) {
        std::vector<char> changed(chunks, 0);
        run_chunks(chunks, threads, [&](std::size_t c) {
            const std::size_t end = std::min(m, (c + 1) * kChunk);
            for (std::size_t i = c * kChunk; i < end; ++i) {
                const auto fi = f.row(i);
                std::size_t best = 0;
                double best_score = std::numeric_limits<double>::infinity();
                for (std::size_t l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += std::log(std::abs(fi[j] - t[(j + n - l) % n]) + eps);
                    if (s < best_score) {
                        best_score = s;
                        best = l;
                    }
                }
                if (shift[i] != best) changed[c] = 1;
                shift[i] = best;
            }
        });
        if (std::find(changed.begin(), changed.end(), 1) == changed.end()) break;
        for (std::size_t j = 0; j < n; ++j) {
            // sample i sees t_j at its index j + l_i
            for (std::size_t i = 0; i < m; ++i) column[i] = f(i, (j + shift[i]) % n);
            t[j] = lower_median(column);
        }
    }
    return Signal(std::move(t));
}

double energy_J(const Signal& u, const NoiseModel& theta, const ShiftWeights& w, const NoiseResponsibilities& q,
                const ObservationSet& f, double gamma) {
    validate(theta);
    const std::size_t m = f.m(), n = f.n();
    if (u.size() != n || w.m() != m || w.n() != n || q.m() != m || q.n() != n)
        throw ShapeError("energy inputs disagree in shape");
    const double inf = std::numeric_limits<double>::infinity();
    double half_log_var[2], neg_log_alpha[2], inv_two_var[2];
    for (int k = 1; k <= 2; ++k) {
        half_log_var[k - 1] = 0.5 * std::log(theta.variance(k));
        const double a = theta.weight(k);
        neg_log_alpha[k - 1] = a > 0.0 ? -std::log(a) : inf;
        inv_two_var[k - 1] = 0.5 / theta.variance(k);
    }

    double data = 0.0, params = 0.0, q_entropy = 0.0, w_entropy = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < n; ++l) {
            const double wil = w(i, l);
            w_entropy += xlogx(wil);
            if (wil == 0.0) continue;
            double d = 0.0, pm = 0.0, qe = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double r = f(i, j) - u[(j + n - l) % n];
                for (int k = 1; k <= 2; ++k) {
                    const double qk = q.q(k, i, j, l);
                    if (qk == 0.0) continue;
                    d += qk * r * r * inv_two_var[k - 1];
                    pm += qk * (half_log_var[k - 1] + neg_log_alpha[k - 1]);
                    qe += xlogx(qk);
                }
            }
            data += wil * d;
            params += wil * pm;
            q_entropy += wil * qe;
        }
    return data + params + q_entropy + w_entropy + gamma * total_variation(u.values());
}

double energy_at_posterior(double log_marginal, std::size_t m, std::size_t n, const Signal& u, double gamma) {
    const double mn = static_cast<double>(m * n);
    return -log_marginal - 0.5 * mn * std::log(2.0 * std::numbers::pi) + gamma * total_variation(u.values());
}

SolverReport mgg_softmax_solve(const ObservationSet& f, const SolverConfig& config) {
    return run(f, config, Model::Mixture);
}

SolverReport em_single_gaussian_solve(const ObservationSet& f, const SolverConfig& config) {
    return run(f, config, Model::SingleGaussian);
}

void write_trace(std::ostream& out, const SolverReport& report) {
    out << "iter,energy,rel_change,alpha,sigma1_sq,sigma2_sq,inner_iters,inner_converged\n";
    out << std::setprecision(17);
    const auto& t0 = report.initial_theta;
    out << 0 << ',' << report.initial_energy << ",," << t0.alpha << ',' << t0.sigma1_sq << ',' << t0.sigma2_sq
        << ",0,true\n";
    for (const auto& rec : report.iterations)
        out << rec.iter << ',' << rec.energy << ',' << rec.rel_change << ',' << rec.theta.alpha << ','
            << rec.theta.sigma1_sq << ',' << rec.theta.sigma2_sq << ',' << rec.inner_iters << ','
            << (rec.inner_converged ? "true" : "false") << '\n';
}

}  // namespace mra
