#include "mra/mstep.hpp"

#include <algorithm>
#include <cmath>

namespace mra {
namespace {

void check_inputs(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q) {
    if (w.m() != f.m() || w.n() != f.n() || q.m() != f.m() || q.n() != f.n())
        throw ShapeError("weights/responsibilities do not match the observation set");
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

double finish_variance(double numer, double denom, int k) {
    if (denom <= 0.0) {
        if (numer <= 0.0) throw DegenerateComponentError(k);
        return std::max(numer, kVarianceFloor);
    }
    return std::max(numer / denom, kVarianceFloor);
}

}  // namespace

void AdmmParams::validate() const {
    if (!(r > 0.0 && std::isfinite(r))) throw ParameterError("ADMM penalty r must be positive");
    if (!(tau > 0.0 && tau < 2.0 * r))
        throw ParameterError("ADMM dual step tau must satisfy 0 < tau < 2r");
    if (!(gamma >= 0.0 && std::isfinite(gamma))) throw ParameterError("TV weight must be non-negative");
    if (max_inner < 1) throw ParameterError("max_inner must be at least 1");
    if (!(inner_tol > 0.0)) throw ParameterError("inner_tol must be positive");
}

double update_alpha(const ShiftWeights& w, const NoiseResponsibilities& q) {
    const std::size_t m = q.m();
    const std::size_t n = q.n();
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < n; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += q(i, j, l);
            acc += w(i, l) * s;
        }
    return std::clamp(acc / static_cast<double>(m * n), 0.0, 1.0);
}

std::pair<double, double> update_sigma(const ObservationSet& f, const Signal& u, const ShiftWeights& w,
                                       const NoiseResponsibilities& q, SigmaMode mode) {
    check_inputs(f, w, q);
    if (u.size() != f.n()) throw ShapeError("signal length differs from observation length");
    const std::size_t n = f.n();
    double numer[2] = {0.0, 0.0};
    double mass[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < f.m(); ++i)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t j = 0; j < n; ++j) {
                const double r = f(i, j) - u[(j + n - l) % n];
                for (int k = 1; k <= 2; ++k) {
                    const double g = w(i, l) * q.q(k, i, j, l);
                    numer[k - 1] += g * r * r;
                    mass[k - 1] += g;
                }
            }
    if (mode == SigmaMode::PaperLiteral) {
        const double total = static_cast<double>(f.m() * n);
        return {finish_variance(numer[0], total, 1), finish_variance(numer[1], total, 2)};
    }
    return {finish_variance(numer[0], mass[0], 1), finish_variance(numer[1], mass[1], 2)};
}

double total_variation(std::span<const double> u, TvTopology topology) {
    double tv = 0.0;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) tv += std::abs(u[j + 1] - u[j]);
    if (topology == TvTopology::Circular && u.size() > 1) tv += std::abs(u.front() - u.back());
    return tv;
}

// Condat, "A direct algorithm for 1D total variation denoising", IEEE SPL 2013.
void tv_prox_linear(std::span<const double> v, double weight, std::span<double> out) {
    const std::size_t n = v.size();
    if (n == 0) return;
    if (weight <= 0.0 || n == 1) {
        std::copy(v.begin(), v.end(), out.begin());
        return;
    }
    const double lam = weight;
    std::size_t k = 0, k0 = 0, kminus = 0, kplus = 0;
    double umin = lam, umax = -lam;
    double vmin = v[0] - lam, vmax = v[0] + lam;
    const auto last = n - 1;
    for (;;) {
        while (k == last) {
            if (umin < 0.0) {
                do out[k0++] = vmin; while (k0 <= kminus);
                k = kminus = k0;
                vmin = v[k];
                umin = lam;
                umax = vmin + umin - vmax;
            } else if (umax > 0.0) {
                do out[k0++] = vmax; while (k0 <= kplus);
                k = kplus = k0;
                vmax = v[k];
                umax = -lam;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / static_cast<double>(k - k0 + 1);
                do out[k0++] = vmin; while (k0 <= k);
                return;
            }
        }
        umin += v[k + 1] - vmin;
        if (umin < -lam) {
            do out[k0++] = vmin; while (k0 <= kminus);
            k = kminus = kplus = k0;
            vmin = v[k];
            vmax = vmin + 2.0 * lam;
            umin = lam;
            umax = -lam;
            continue;
        }
        umax += v[k + 1] - vmax;
        if (umax > lam) {
            do out[k0++] = vmax; while (k0 <= kplus);
            k = kminus = kplus = k0;
            vmax = v[k];
            vmin = vmax - 2.0 * lam;
            umin = lam;
            umax = -lam;
            continue;
        }
        ++k;
        if (umin >= lam) {
            kminus = k;
            vmin += (umin - lam) / static_cast<double>(kminus - k0 + 1);
            umin = lam;
        }
        if (umax <= -lam) {
            kplus = k;
            vmax += (umax + lam) / static_cast<double>(kplus - k0 + 1);
            umax = -lam;
        }
    }
}

void tv_prox_circular(std::span<const double> v, double weight, std::span<double> out) {
    const std::size_t n = v.size();
    if (weight <= 0.0 || n < 2) {
        std::copy(v.begin(), v.end(), out.begin());
        return;
    }
    // t is the dual variable of the edge (u_{n-1}, u_0). For fixed t the
    // problem is a linear one on v with v_0 -= t, v_{n-1} += t, and the wrap
    // difference h(t) = u_0 - u_{n-1} of its solution is non-increasing in t.
    std::vector<double> shifted(v.begin(), v.end());
    auto solve = [&](double t) {
        shifted[0] = v[0] - t;
        shifted[n - 1] = v[n - 1] + t;
        tv_prox_linear(shifted, weight, out);
        return out[0] - out[n - 1];
    };
    if (solve(weight) >= 0.0) return;
    if (solve(-weight) <= 0.0) return;
    double lo = -weight, hi = weight;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double h = solve(mid);
        if (h == 0.0) return;
        if (h > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    solve(0.5 * (lo + hi));
}

Signal tv_prox_1d(const Signal& v, double weight, TvTopology topology) {
    if (!(weight >= 0.0 && std::isfinite(weight))) throw ParameterError("TV weight must be finite and >= 0");
    std::vector<double> out(v.size());
    if (topology == TvTopology::Circular)
        tv_prox_circular(v.values(), weight, out);
    else
        tv_prox_linear(v.values(), weight, out);
    return Signal(std::move(out));
}

Signal solve_d_subproblem(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q,
                          const NoiseModel& theta, const Signal& u, const Signal& p, double r) {
    check_inputs(f, w, q);
    validate(theta);
    if (!(r > 0.0)) throw ParameterError("ADMM penalty r must be positive");
    const std::size_t n = f.n();
    if (u.size() != n || p.size() != n) throw ShapeError("u/p length differs from observation length");
    const double s1 = theta.sigma1_sq, s2 = theta.sigma2_sq;
    std::vector<double> sum_t1(n, 0.0), sum_t2(n, 0.0);
    for (std::size_t i = 0; i < f.m(); ++i)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t j = 0; j < n; ++j) {
                // (R_l^{-1} f_i)_j = f_i[j + l]; q is read at that sample
                const std::size_t jf = (j + l) % n;
                const double q1 = q(i, jf, l);
                const double t2 = q1 * s2 + (1.0 - q1) * s1;
                sum_t1[j] += w(i, l) * t2 * f(i, jf);
                sum_t2[j] += w(i, l) * t2;
            }
    const double s = s1 * s2;
    std::vector<double> d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = (sum_t1[j] + s * (r * u[j] + p[j])) / (sum_t2[j] + r * s);
    return Signal(std::move(d));
}

DataTerm::DataTerm(ResponsibilityMoments moments, const NoiseModel& theta)
    : moments_(std::move(moments)), theta_(theta), s_(theta.sigma1_sq * theta.sigma2_sq) {
    validate(theta);
    const std::size_t n = moments_.n;
    numer_.assign(n, 0.0);
    denom_.assign(n, 0.0);
    // t-bracket coefficient of component k is the other component's variance
    const double coeff[2] = {theta.sigma2_sq, theta.sigma1_sq};
    for (std::size_t j = 0; j < n; ++j)
        for (int k = 0; k < 2; ++k) {
            numer_[j] += coeff[k] * (moments_.first[k][j] + moments_.u_ref[j] * moments_.mass[k][j]);
            denom_[j] += coeff[k] * moments_.mass[k][j];
        }
}

void DataTerm::solve_d(std::span<const double> u, std::span<const double> p, double r, std::span<double> d) const {
    for (std::size_t j = 0; j < numer_.size(); ++j)
        d[j] = (numer_[j] + s_ * (r * u[j] + p[j])) / (denom_[j] + r * s_);
}

double DataTerm::value(std::span<const double> u) const {
    double total = 0.0;
    for (int k = 0; k < 2; ++k) total += residual_energy(moments_, u, k + 1) / (2.0 * theta_.variance(k + 1));
    return total;
}

std::vector<double> DataTerm::gradient(std::span<const double> u) const {
    const std::size_t n = numer_.size();
    std::vector<double> g(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double delta = u[j] - moments_.u_ref[j];
        for (int k = 0; k < 2; ++k)
            g[j] += (delta * moments_.mass[k][j] - moments_.first[k][j]) / theta_.variance(k + 1);
    }
    return g;
}

DataTerm data_term(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q,
                   const NoiseModel& theta, const Signal& u_ref) {
    return DataTerm(moments_from_tensors(f, u_ref, w, q), theta);
}

double signal_objective(const DataTerm& data, std::span<const double> u, double gamma) {
    return data.value(u) + gamma * total_variation(u);
}

AdmmResult admm(const DataTerm& data, const AdmmState& state0, const AdmmParams& params) {
    params.validate();
    const std::size_t n = data.size();
    if (state0.u.size() != n || state0.d.size() != n || state0.p.size() != n)
        throw ShapeError("ADMM state length differs from the data term");
    std::vector<double> u = state0.u.vector(), d = state0.d.vector(), p = state0.p.vector();
    std::vector<double> u_prev(n), d_prev(n), v(n);
    const double r = params.r;
    const double prox_weight = params.gamma / r;

    AdmmResult res;
    for (int it = 1; it <= params.max_inner; ++it) {
        u_prev = u;
        d_prev = d;
        for (std::size_t j = 0; j < n; ++j) v[j] = d[j] - p[j] / r;
        tv_prox_circular(v, prox_weight, u);
        data.solve_d(u, p, r, d);
        if (params.dual == DualUpdate::PostUpdate)
            for (std::size_t j = 0; j < n; ++j) p[j] += params.tau * (u[j] - d[j]);
        else
            for (std::size_t j = 0; j < n; ++j) p[j] += params.tau * (u_prev[j] - d_prev[j]);

        for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(u[j]) || !std::isfinite(d[j]) || !std::isfinite(p[j]))
                throw DivergenceError("ADMM produced a non-finite iterate", it);

        res.iterations = it;
        const double scale = std::max(norm2(u_prev), 1e-300);
        const double change = dist2(u, u_prev) / scale;
        const double primal = dist2(u, d) / std::max(norm2(u), 1e-300);
        if (change < params.inner_tol && primal < params.inner_tol) {
            res.converged = true;
            break;
        }
    }
    res.state = AdmmState{Signal(std::move(u)), Signal(std::move(d)), Signal(std::move(p))};
    return res;
}

AdmmResult admm_signal_update(const ObservationSet& f, const ShiftWeights& w, const NoiseResponsibilities& q,
                              const NoiseModel& theta, const AdmmState& state0, const AdmmParams& params) {
    check_inputs(f, w, q);
    return admm(data_term(f, w, q, theta, state0.u), state0, params);
}

double update_alpha(const ResponsibilityMoments& moments) {
    return std::clamp(moments.total_mass(1) / static_cast<double>(moments.m * moments.n), 0.0, 1.0);
}

double residual_energy(const ResponsibilityMoments& moments, std::span<const double> u_new, int k) {
    const auto& mass = moments.mass[k - 1];
    const auto& first = moments.first[k - 1];
    const auto& second = moments.second[k - 1];
    double e = 0.0;
    for (std::size_t j = 0; j < moments.n; ++j) {
        const double delta = u_new[j] - moments.u_ref[j];
        e += second[j] - 2.0 * delta * first[j] + delta * delta * mass[j];
    }
    return std::max(e, 0.0);
}

std::pair<double, double> update_sigma(const ResponsibilityMoments& moments, std::span<const double> u_new,
                                       SigmaMode mode) {
    const double e1 = residual_energy(moments, u_new, 1);
    const double e2 = residual_energy(moments, u_new, 2);
    if (mode == SigmaMode::PaperLiteral) {
        const double total = static_cast<double>(moments.m * moments.n);
        return {finish_variance(e1, total, 1), finish_variance(e2, total, 2)};
    }
    return {finish_variance(e1, moments.total_mass(1), 1), finish_variance(e2, moments.total_mass(2), 2)};
}

}  // namespace mra
