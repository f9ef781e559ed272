#pragma once

#include <complex>
#include <span>
#include <vector>

namespace mcfsim {

using cplx = std::complex<double>;

// Thin wrapper over FFTW. Plans are cached per length and shared across
// threads; execution uses the new-array interface so callers own buffers.
// The inverse transform is normalized by 1/N.
void fft_forward(std::span<const cplx> in, std::span<cplx> out);
void fft_inverse(std::span<const cplx> in, std::span<cplx> out);

std::vector<cplx> fft(std::span<const cplx> in);
std::vector<cplx> ifft(std::span<const cplx> in);

}  // namespace mcfsim
