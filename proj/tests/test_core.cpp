#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mra/core.hpp"
#include "support.hpp"

using namespace mra;

TEST_CASE("signal invariants") {
    CHECK_THROWS_AS(Signal({1.0}), ParameterError);
    CHECK_THROWS_AS(Signal({1.0, std::nan("")}), ParameterError);
    CHECK_THROWS_AS(Signal({1.0, std::numeric_limits<double>::infinity()}), ParameterError);
    const Signal s({3.0, 4.0});
    CHECK(s.norm() == doctest::Approx(5.0));
    CHECK(s.mean() == doctest::Approx(3.5));
    CHECK(Signal::zeros(3).norm() == 0.0);
}

TEST_CASE("shift index reduces to the canonical representative") {
    CHECK(ShiftIndex(0, 4).value() == 0);
    CHECK(ShiftIndex(5, 4).value() == 1);
    CHECK(ShiftIndex(-1, 4).value() == 3);
    CHECK(ShiftIndex(-8, 4).value() == 0);
    CHECK(wrap_index(-9, 4) == 3);
}

TEST_CASE("noise model invariants") {
    CHECK_NOTHROW(NoiseModel(0.0, 1.0, 1.0));
    CHECK_NOTHROW(NoiseModel(1.0, 1e-20, 1e-20));
    CHECK_THROWS_AS(NoiseModel(-0.1, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(NoiseModel(1.5, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(NoiseModel(0.5, 0.0, 1.0), ParameterError);
    CHECK_THROWS_AS(NoiseModel(0.5, 1.0, -1.0), ParameterError);
    CHECK_THROWS_AS(NoiseModel(0.5, 1.0, std::numeric_limits<double>::infinity()), ParameterError);
    const NoiseModel t(0.3, 4.0, 0.25);
    CHECK(t.weight(1) == 0.3);
    CHECK(t.weight(2) == doctest::Approx(0.7));
    CHECK(t.variance(2) == 0.25);
}

TEST_CASE("simplex vectors") {
    CHECK_NOTHROW(SimplexVector({0.25, 0.75}));
    CHECK_THROWS_AS(SimplexVector({0.5, 0.6}), ParameterError);
    CHECK_THROWS_AS(SimplexVector({-0.1, 1.1}), ParameterError);
    CHECK(is_simplex(std::vector<double>{1.0, 0.0, 0.0}));
    CHECK_FALSE(is_simplex(std::vector<double>{0.5, 0.5 + 1e-10}));
}

TEST_CASE("circular shift examples") {
    const Signal x({1, 2, 3, 4});
    CHECK(circular_shift(x, 0L) == x);
    CHECK(circular_shift(x, 1L) == Signal({4, 1, 2, 3}));
    CHECK(circular_shift(x, -1L) == Signal({2, 3, 4, 1}));
    for (long l = -4; l <= 4; ++l) {
        const Signal y = circular_shift(x, l);
        for (std::size_t j = 0; j < 4; ++j) {
            long src = (static_cast<long>(j) - l) % 4;
            if (src < 0) src += 4;
            CHECK(y[j] == x[static_cast<std::size_t>(src)]);
        }
        CHECK(circular_shift(y, -l) == x);
    }
}

TEST_CASE("circular shift is a group action that preserves values") {
    std::mt19937_64 gen(11);
    for (std::size_t n = 2; n <= 8; ++n) {
        const Signal x = testing::random_signal(gen, n);
        const long lim = 2 * static_cast<long>(n);
        for (long a = -lim; a <= lim; ++a)
            for (long b = -lim; b <= lim; ++b)
                CHECK(circular_shift(circular_shift(x, a), b) == circular_shift(x, a + b));
        for (long a = 0; a < static_cast<long>(n); ++a) {
            const Signal y = circular_shift(x, a);
            auto vx = x.vector(), vy = y.vector();
            std::sort(vx.begin(), vx.end());
            std::sort(vy.begin(), vy.end());
            CHECK(vx == vy);
            CHECK(y.norm() == x.norm());
        }
    }
}

TEST_CASE("log-sum-exp") {
    CHECK(log_sum_exp(std::vector<double>{0.0}) == 0.0);
    CHECK(log_sum_exp(std::vector<double>{-1000.0, -1000.0}) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
    const double direct = std::log(std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0));
    CHECK(std::abs(log_sum_exp(std::vector<double>{-1.0, -2.0, -3.0}) - direct) <= 1e-14);
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(log_sum_exp(std::vector<double>{ninf, 2.0}) == 2.0);
    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{ninf, ninf}), DegenerateLikelihoodError);
    CHECK_THROWS(log_sum_exp(std::vector<double>{}));

    std::mt19937_64 gen(3);
    for (int t = 0; t < 20; ++t) {
        auto v = testing::random_vector(gen, 7, -5.0, 5.0);
        const double base = log_sum_exp(v);
        for (double c : {1e4, -1e4}) {
            auto w = v;
            for (double& x : w) x += c;
            CHECK(std::abs(log_sum_exp(w) - (base + c)) <= 1e-10 * std::abs(c));
        }
    }
}

TEST_CASE("log-add-exp agrees with log-sum-exp") {
    CHECK(log_add_exp(-3.0, -4.0) == doctest::Approx(log_sum_exp(std::vector<double>{-3.0, -4.0})));
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(log_add_exp(ninf, ninf) == ninf);
    CHECK(log_add_exp(ninf, 1.5) == 1.5);
}

TEST_CASE("soft-max examples") {
    const auto s = soft_max_eps(std::vector<double>{5, 5, 5}, 1.0);
    CHECK(s.value == doctest::Approx(5.0 + std::log(3.0)).epsilon(1e-14));
    for (std::size_t k = 0; k < 3; ++k) CHECK(s.maximizer[k] == doctest::Approx(1.0 / 3.0));
    CHECK(std::abs(soft_max_eps(std::vector<double>{1, 0}, 1e-3).value - 1.0) <= 1e-2);
    CHECK_THROWS_AS(soft_max_eps(std::vector<double>{1, 0}, 0.0), ParameterError);
    CHECK_THROWS_AS(soft_max_eps(std::vector<double>{1, 0}, -1.0), ParameterError);
}

TEST_CASE("soft-max primal and dual values coincide at the maximiser") {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 100; ++t) {
        const auto x = testing::random_vector(gen, 1 + t % 9, -3.0, 3.0);
        for (double eps : {0.7, 0.05, 2.0}) {
            const auto s = soft_max_eps(x, eps);
            double dual = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) dual += s.maximizer[k] * x[k] - eps * xlogx(s.maximizer[k]);
            CHECK(std::abs(s.value - dual) <= 1e-10);
            const double mx = *std::max_element(x.begin(), x.end());
            CHECK(s.value >= mx - 1e-12);
            CHECK(s.value <= mx + eps * std::log(static_cast<double>(x.size())) + 1e-12);
        }
    }
}
