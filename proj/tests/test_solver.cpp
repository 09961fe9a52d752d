#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mra/eval.hpp"
#include "mra/solver.hpp"
#include "support.hpp"

using namespace mra;

namespace {

std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(n);
    double s = 0.0;
    for (double& x : w) s += (x = e(gen));
    for (double& x : w) x /= s;
    return w;
}

}  // namespace

TEST_CASE("energy with one-hot shifts and a single component") {
    std::mt19937_64 gen(1);
    const auto f = testing::random_observations(gen, 3, 4);
    const Signal u = testing::random_signal(gen, 4);
    const double s = 0.7;
    ShiftWeights w{Matrix(3, 4, 0.0)};
    const std::size_t shifts[3] = {0, 2, 3};
    for (std::size_t i = 0; i < 3; ++i) w.w(i, shifts[i]) = 1.0;
    NoiseResponsibilities q(3, 4, 1.0);
    double expect = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const Signal ru = circular_shift(u, static_cast<long>(shifts[i]));
        double ss = 0.0;
        for (std::size_t j = 0; j < 4; ++j) ss += std::pow(f(i, j) - ru[j], 2);
        expect += ss / (2 * s) + 2.0 * std::log(s);
    }
    CHECK(energy_J(u, NoiseModel(1.0, s, 0.3), w, q, f, 0.0) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("energy on a hand-enumerable instance") {
    ObservationSet f;
    f.data = Matrix(1, 2);
    f.data(0, 0) = 0.5;
    f.data(0, 1) = -1.0;
    const Signal u({0.2, 0.3});
    const NoiseModel t(0.25, 2.0, 0.5);
    ShiftWeights w{Matrix(1, 2)};
    w.w(0, 0) = 0.6;
    w.w(0, 1) = 0.4;
    NoiseResponsibilities q(1, 2);
    q(0, 0, 0) = 0.1;
    q(0, 1, 0) = 0.7;
    q(0, 0, 1) = 0.3;
    q(0, 1, 1) = 0.9;
    // l = 0: residuals (0.3, -1.3); l = 1: R_1 u = (0.3, 0.2), residuals (0.2, -1.2)
    const double r[2][2] = {{0.3, -1.3}, {0.2, -1.2}};
    const double qq[2][2] = {{0.1, 0.7}, {0.3, 0.9}};
    const double wl[2] = {0.6, 0.4};
    double e = 0.0;
    for (int l = 0; l < 2; ++l) {
        double inner = 0.0;
        for (int j = 0; j < 2; ++j) {
            const double q1 = qq[l][j], q2 = 1 - q1;
            inner += q1 * r[l][j] * r[l][j] / 4.0 + q2 * r[l][j] * r[l][j] / 1.0;
            inner += q1 * (0.5 * std::log(2.0) - std::log(0.25)) + q2 * (0.5 * std::log(0.5) - std::log(0.75));
            inner += q1 * std::log(q1) + q2 * std::log(q2);
        }
        e += wl[l] * inner + wl[l] * std::log(wl[l]);
    }
    const double tv = 2 * 0.1;
    CHECK(std::abs(energy_J(u, t, w, q, f, 1.5) - (e + 1.5 * tv)) <= 1e-12);
}

TEST_CASE("posterior shift weights minimise the energy") {
    std::mt19937_64 gen(2);
    const auto f = testing::random_observations(gen, 3, 5);
    const Signal u = testing::random_signal(gen, 5);
    const NoiseModel t(0.4, 3.0, 0.3);
    const auto w = update_shift_weights(shift_log_likelihoods(f, u, t));
    const auto q = update_noise_responsibilities(f, u, t);
    const double best = energy_J(u, t, w, q, f, 0.0);
    for (int s = 0; s < 100; ++s) {
        ShiftWeights other{Matrix(3, 5)};
        for (std::size_t i = 0; i < 3; ++i) {
            const auto row = random_simplex(gen, 5);
            for (std::size_t l = 0; l < 5; ++l) other.w(i, l) = row[l];
        }
        CHECK(best <= energy_J(u, t, other, q, f, 0.0) + 1e-12);
    }
}

TEST_CASE("energy at the posterior equals the negative marginal likelihood") {
    std::mt19937_64 gen(3);
    for (std::size_t m = 1; m <= 3; ++m)
        for (std::size_t n = 2; n <= 3; ++n)
            for (const NoiseModel& t : {NoiseModel(0.3, 2.0, 0.2), NoiseModel(0.9, 0.5, 4.0), NoiseModel(0.5, 1.0, 1.0)}) {
                const auto f = testing::random_observations(gen, m, n);
                const Signal u = testing::random_signal(gen, n);
                const auto w = update_shift_weights(shift_log_likelihoods(f, u, t));
                const auto q = update_noise_responsibilities(f, u, t);
                const double gamma = 0.3;
                const double direct = energy_J(u, t, w, q, f, gamma);
                // marginal likelihood by direct products of mixture densities
                double lml = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    double p = 0.0;
                    for (std::size_t l = 0; l < n; ++l) {
                        double prod = 1.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            const double r = f(i, j) - u[(j + n - l) % n];
                            prod *= t.alpha * testing::gauss_pdf(r, t.sigma1_sq) +
                                    (1 - t.alpha) * testing::gauss_pdf(r, t.sigma2_sq);
                        }
                        p += prod;
                    }
                    lml += std::log(p);
                }
                CHECK(std::abs(direct - energy_at_posterior(lml, m, n, u, gamma)) <= 1e-10 * std::max(1.0, std::abs(direct)));
                CHECK(std::abs(posterior_pass(f, u, t).log_marginal - lml) <= 1e-12 * std::max(1.0, std::abs(lml)));
            }
}

TEST_CASE("energy is infinite when a zero-weight component carries mass") {
    std::mt19937_64 gen(4);
    const auto f = testing::random_observations(gen, 2, 3);
    const Signal u = testing::random_signal(gen, 3);
    const NoiseModel t(0.0, 1.0, 1.0);
    const auto w = update_shift_weights(shift_log_likelihoods(f, u, t));
    NoiseResponsibilities q(2, 3, 0.5);
    CHECK(energy_J(u, t, w, q, f, 0.0) == std::numeric_limits<double>::infinity());
    NoiseResponsibilities q0(2, 3, 0.0);
    CHECK(std::isfinite(energy_J(u, t, w, q0, f, 0.0)));
}

TEST_CASE("noise-free data is a fixed point") {
    const Signal u = make_random_signal(8, 3);
    ObservationSet f;
    f.data = Matrix(4, 8);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 8; ++j) f.data(i, j) = u[j];
    SolverConfig cfg;
    cfg.theta_init = ThetaInit::Supplied;
    cfg.theta0 = NoiseModel(0.5, 1e-20, 1e-20);
    cfg.max_outer = 1;
    const auto rep = mgg_softmax_solve(f, cfg);
    for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(rep.u_hat[j] - u[j]) <= 1e-6);
}

TEST_CASE("equal variances collapse the mixture to single-Gaussian EM") {
    const Signal u = make_random_signal(12, 5);
    const auto obs = generate_observations(u, GenSpec{60, NoiseModel(1.0, 0.5, 0.5), 8});
    SolverConfig cfg;
    cfg.theta_init = ThetaInit::Supplied;
    cfg.theta0 = NoiseModel(0.35, 0.8, 0.8);
    cfg.admm.inner_tol = 1e-12;
    cfg.admm.max_inner = 5000;
    cfg.outer_tol = 1e-300;
    for (int k = 1; k <= 5; ++k) {
        cfg.max_outer = k;
        const auto a = mgg_softmax_solve(obs, cfg);
        const auto b = em_single_gaussian_solve(obs, cfg);
        for (std::size_t j = 0; j < 12; ++j) CHECK(std::abs(a.u_hat[j] - b.u_hat[j]) <= 1e-10);
        CHECK(a.theta_hat.sigma1_sq == doctest::Approx(b.theta_hat.sigma1_sq).epsilon(1e-10));
        CHECK(a.theta_hat.sigma2_sq == doctest::Approx(b.theta_hat.sigma1_sq).epsilon(1e-10));
        CHECK(a.theta_hat.alpha == doctest::Approx(0.35).epsilon(1e-10));
    }
}

TEST_CASE("energy descends and parameters stay valid") {
    const Signal u = make_random_signal(15, 9);
    const auto obs = generate_observations(u, GenSpec{300, NoiseModel(0.3, 9.0, 0.01), 4});
    for (auto init : {ThetaInit::Spread, ThetaInit::WideMinority, ThetaInit::WideMajority})
        for (double gamma : {0.0, 0.5}) {
            SolverConfig cfg;
            cfg.theta_init = init;
            cfg.admm.gamma = gamma;
            cfg.admm.max_inner = 20000;
            const auto rep = mgg_softmax_solve(obs, cfg);
            REQUIRE(rep.inner_all_converged);
            CHECK(rep.max_relative_energy_increase() <= 1e-8);
            CHECK(rep.energy_trace.size() == static_cast<std::size_t>(rep.outer_iters));
            CHECK(rep.rel_change_trace.size() == static_cast<std::size_t>(rep.outer_iters));
            for (const auto& it : rep.iterations) {
                CHECK(it.theta.alpha >= 0.0);
                CHECK(it.theta.alpha <= 1.0);
                CHECK(it.theta.sigma1_sq > 0.0);
                CHECK(it.theta.sigma2_sq > 0.0);
            }
        }
}

TEST_CASE("shifting every observation shifts the estimate") {
    const Signal u = make_random_signal(10, 2);
    const auto obs = generate_observations(u, GenSpec{80, NoiseModel(0.2, 4.0, 0.05), 6});
    SolverConfig cfg;
    const auto base = mgg_softmax_solve(obs, cfg);
    const double err = relative_error(base.u_hat, u);
    for (long s : {1L, 4L, 9L}) {
        ObservationSet moved = obs;
        for (std::size_t i = 0; i < obs.m(); ++i) {
            const Signal row = circular_shift(Signal(std::vector<double>(obs.row(i).begin(), obs.row(i).end())), s);
            for (std::size_t j = 0; j < obs.n(); ++j) moved.data(i, j) = row[j];
        }
        const auto rep = mgg_softmax_solve(moved, cfg);
        CHECK(std::abs(relative_error(rep.u_hat, circular_shift(u, s)) - err) <= 1e-10);
        CHECK(std::abs(relative_error(rep.u_hat, u) - err) <= 1e-10);
    }
}

TEST_CASE("pure narrow noise is recovered and the wide component dies") {
    const Signal u = make_random_signal(21, 7);
    const auto obs = generate_observations(u, GenSpec{400, NoiseModel(0.0, 100.0, 1e-4), 3});
    SolverConfig cfg;
    cfg.u0_policy = U0Policy::AlignedMedian;
    const auto rep = mgg_softmax_solve(obs, cfg);
    CHECK(relative_error(rep.u_hat, u) <= 0.05);
    CHECK(rep.max_relative_energy_increase() <= 1e-8);
}

TEST_CASE("initial noise models") {
    ObservationSet f;
    f.data = Matrix(2, 2);
    f.data(0, 0) = 1;
    f.data(0, 1) = 3;
    f.data(1, 0) = 3;
    f.data(1, 1) = 5;
    // mean observation (2, 4); every residual is +-1
    const auto s = initial_noise_model(f, ThetaInit::Spread);
    CHECK(s.alpha == 0.5);
    CHECK(s.sigma1_sq == doctest::Approx(1.0));
    CHECK(s.sigma2_sq == doctest::Approx(0.01));
    const auto a = initial_noise_model(f, ThetaInit::WideMinority);
    CHECK(a.alpha == 0.2);
    CHECK(a.sigma2_sq == doctest::Approx(1e-3));
    const auto b = initial_noise_model(f, ThetaInit::WideMajority);
    CHECK(b.alpha == 0.8);
    CHECK(b.sigma2_sq == doctest::Approx(0.1));
    const NoiseModel given(0.1, 2.0, 3.0);
    CHECK(initial_noise_model(f, ThetaInit::Supplied, given) == given);
}

TEST_CASE("initial signals") {
    std::mt19937_64 gen(5);
    const auto f = testing::random_observations(gen, 3, 4);
    SolverConfig cfg;
    const Signal first = initial_signal(f, cfg);
    for (std::size_t j = 0; j < 4; ++j) CHECK(first[j] == f(0, j));
    cfg.u0_policy = U0Policy::MeanObservation;
    const Signal mean = initial_signal(f, cfg);
    CHECK(mean[2] == doctest::Approx((f(0, 2) + f(1, 2) + f(2, 2)) / 3.0));
    cfg.u0_policy = U0Policy::Supplied;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg.u0 = Signal::zeros(5);
    CHECK_THROWS_AS(initial_signal(f, cfg), ShapeError);
}

TEST_CASE("aligned median start") {
    const Signal u = make_random_signal(17, 4);
    const auto obs = generate_observations(u, GenSpec{200, NoiseModel(0.3, 100.0, 1e-6), 2});
    const Signal a = aligned_median_signal(obs, 10, 1);
    CHECK(relative_error(a, u) <= 1e-2);
    CHECK(aligned_median_signal(obs, 10, 3) == a);
}

TEST_CASE("solver configuration validation") {
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.outer_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = SolverConfig{};
    cfg.max_outer = 0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = SolverConfig{};
    cfg.admm.tau = 2.5;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("non-convergence is reported, not thrown") {
    const Signal u = make_random_signal(9, 1);
    const auto obs = generate_observations(u, GenSpec{50, NoiseModel(0.3, 4.0, 0.1), 1});
    SolverConfig cfg;
    cfg.max_outer = 1;
    cfg.outer_tol = 1e-300;
    const auto rep = mgg_softmax_solve(obs, cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.outer_iters == 1);
}

TEST_CASE("trace records") {
    const Signal u = make_random_signal(9, 1);
    const auto obs = generate_observations(u, GenSpec{50, NoiseModel(0.3, 4.0, 0.1), 1});
    SolverConfig cfg;
    cfg.max_outer = 3;
    const auto rep = mgg_softmax_solve(obs, cfg);
    std::ostringstream out;
    write_trace(out, rep);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "iter,energy,rel_change,alpha,sigma1_sq,sigma2_sq,inner_iters,inner_converged");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == rep.outer_iters + 1);
}

TEST_CASE("mixture beats single-Gaussian EM on impulsive noise") {
    const Signal u = make_random_signal(21, 7);
    const auto obs = generate_observations(u, GenSpec{1000, NoiseModel(0.2, 100.0, 1e-4), 1});
    SolverConfig cfg;
    cfg.u0_policy = U0Policy::AlignedMedian;
    const double mgg = relative_error(mgg_softmax_solve(obs, cfg).u_hat, u);
    const double em = relative_error(em_single_gaussian_solve(obs, cfg).u_hat, u);
    CHECK(mgg <= 0.05);
    CHECK(em > mgg);
}
