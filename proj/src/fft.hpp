#pragma once

#include <complex>
#include <span>

namespace biharm::detail {

// Normalized forward transform of real samples on a size^dims grid:
// out[m] = size^-dims * sum_j in[j] exp(-2 pi i m.j / size).
void fft_forward(int size, int dims, std::span<const double> in, std::span<std::complex<double>> out);

// Inverse of fft_forward; the imaginary part is discarded.
void fft_inverse(int size, int dims, std::span<const std::complex<double>> in, std::span<double> out);

}  // namespace biharm::detail
