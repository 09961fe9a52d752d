#include "mra/eval.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

namespace mra {
namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffers {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    explicit FftwBuffers(std::size_t n) {
        const std::size_t h = n / 2 + 1;
        real = fftw_alloc_real(n);
        spec = fftw_alloc_complex(h);
        std::lock_guard lock(planner_mutex());
        forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spec, FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real, FFTW_ESTIMATE);
    }
    ~FftwBuffers() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(forward);
            fftw_destroy_plan(backward);
        }
        fftw_free(real);
        fftw_free(spec);
    }
    FftwBuffers(const FftwBuffers&) = delete;
    FftwBuffers& operator=(const FftwBuffers&) = delete;
};

void check_pair(const Signal& a, const Signal& b) {
    if (a.size() != b.size()) throw ShapeError("estimate and truth differ in length");
}

double shifted_distance(const Signal& estimate, const Signal& truth, std::size_t l) {
    const std::size_t n = truth.size();
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = estimate[(j + n - l) % n] - truth[j];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

std::vector<double> cross_correlation_fft(const Signal& estimate, const Signal& truth) {
    check_pair(estimate, truth);
    const std::size_t n = truth.size();
    const std::size_t h = n / 2 + 1;
    FftwBuffers buf(n);
    std::vector<std::complex<double>> t_hat(h);

    std::copy(truth.values().begin(), truth.values().end(), buf.real);
    fftw_execute(buf.forward);
    for (std::size_t k = 0; k < h; ++k) t_hat[k] = {buf.spec[k][0], buf.spec[k][1]};

    std::copy(estimate.values().begin(), estimate.values().end(), buf.real);
    fftw_execute(buf.forward);
    for (std::size_t k = 0; k < h; ++k) {
        const auto prod = t_hat[k] * std::conj(std::complex<double>(buf.spec[k][0], buf.spec[k][1]));
        buf.spec[k][0] = prod.real();
        buf.spec[k][1] = prod.imag();
    }
    fftw_execute(buf.backward);
    std::vector<double> c(n);
    for (std::size_t l = 0; l < n; ++l) c[l] = buf.real[l] / static_cast<double>(n);
    return c;
}

std::vector<double> cross_correlation_direct(const Signal& estimate, const Signal& truth) {
    check_pair(estimate, truth);
    const std::size_t n = truth.size();
    std::vector<double> c(n, 0.0);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j) c[l] += truth[j] * estimate[(j + n - l) % n];
    return c;
}

AlignmentResult best_cyclic_alignment(const Signal& estimate, const Signal& truth) {
    check_pair(estimate, truth);
    const double tnorm = truth.norm();
    if (!(tnorm > 0.0)) throw ParameterError("reference signal has zero norm");
    const std::size_t n = truth.size();
    const auto corr = cross_correlation_fft(estimate, truth);
    const double peak = *std::max_element(corr.begin(), corr.end());
    // FFT rounding is ~1e-15 of the energy; anything within this band of the
    // peak is re-scored exactly.
    const double band = 1e-9 * (estimate.norm() * tnorm) + 1e-300;

    std::size_t best = n;
    double best_dist = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        if (corr[l] < peak - band) continue;
        const double d = shifted_distance(estimate, truth, l);
        if (best == n || d < best_dist) {
            best = l;
            best_dist = d;
        }
    }
    ShiftIndex shift(static_cast<long>(best), n);
    return {shift, circular_shift(estimate, shift), best_dist / tnorm};
}

double relative_error(const Signal& estimate, const Signal& truth) {
    return best_cyclic_alignment(estimate, truth).error;
}

}  // namespace mra
