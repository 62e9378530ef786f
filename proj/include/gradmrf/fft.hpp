#pragma once

#include "gradmrf/tensor.hpp"

namespace gradmrf {

/// Unnormalized forward 3-D DFT over all axes (circular). Parseval with this
/// convention reads |fft3(t)|^2 = (c*h*w) * |t|^2.
SpectrumGrid fft3(const TensorGrid& t);
SpectrumGrid fft3(const SpectrumGrid& s);

/// Inverse 3-D DFT including the 1/(c*h*w) factor; ifft3(fft3(t)) == t.
SpectrumGrid ifft3(const SpectrumGrid& s);

/// Inverse DFT of a (numerically) Hermitian spectrum; returns the real part.
TensorGrid ifft3_real(const SpectrumGrid& s);

namespace detail {
/// In-place 1-D transform of any length. sign = -1 forward, +1 inverse;
/// no normalization in either direction.
void fft_1d(std::complex<double>* x, std::size_t n, int sign);
}  // namespace detail

}  // namespace gradmrf
