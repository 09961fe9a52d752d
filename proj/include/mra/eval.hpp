#pragma once

#include <vector>

#include "mra/core.hpp"

namespace mra {

struct AlignmentResult {
    ShiftIndex shift;
    Signal aligned;  ///< circular_shift(estimate, shift)
    double error;    ///< ||aligned - truth|| / ||truth||
};

/// c[l] = sum_j truth[j] * estimate[j - l], computed with FFTW.
std::vector<double> cross_correlation_fft(const Signal& estimate, const Signal& truth);
/// Same quantity by direct summation.
std::vector<double> cross_correlation_direct(const Signal& estimate, const Signal& truth);

/// The cyclic shift of `estimate` closest to `truth` in the l2 sense. The
/// correlation peak is located by FFT and the candidates near it are
/// re-scored exactly; ties go to the smallest shift.
AlignmentResult best_cyclic_alignment(const Signal& estimate, const Signal& truth);

/// Relative recovery error minimised over cyclic shifts.
double relative_error(const Signal& estimate, const Signal& truth);

}  // namespace mra
