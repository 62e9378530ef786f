#include "gradmrf/fft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace gradmrf {

namespace detail {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Iterative radix-2 Cooley-Tukey; n must be a power of two.
void fft_pow2(std::complex<double>* x, std::size_t n, int sign) {
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const std::size_t half = len >> 1;
        for (std::size_t base = 0; base < n; base += len) {
            for (std::size_t k = 0; k < half; ++k) {
                // direct trig per twiddle keeps roundoff at the 1e-15 level
                const std::complex<double> w(std::cos(ang * static_cast<double>(k)),
                                             std::sin(ang * static_cast<double>(k)));
                const std::complex<double> u = x[base + k];
                const std::complex<double> v = x[base + k + half] * w;
                x[base + k] = u + v;
                x[base + k + half] = u - v;
            }
        }
    }
}

/// Bluestein chirp-z transform for arbitrary n, built on the radix-2 kernel.
void fft_bluestein(std::complex<double>* x, std::size_t n, int sign) {
    const std::size_t m = next_pow2(2 * n - 1);
    // chirp c_k = exp(sign*i*pi*k^2/n); k^2 taken mod 2n to keep angles small
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = sign * std::numbers::pi * static_cast<double>(k2) /
                           static_cast<double>(n);
        chirp[k] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<std::complex<double>> a(m), b(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = {1.0, 0.0};
    for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
    fft_pow2(a.data(), m, -1);
    fft_pow2(b.data(), m, -1);
    for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
    fft_pow2(a.data(), m, +1);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * inv_m * chirp[k];
}

}  // namespace

void fft_1d(std::complex<double>* x, std::size_t n, int sign) {
    if (n <= 1) return;
    if (is_pow2(n))
        fft_pow2(x, n, sign);
    else
        fft_bluestein(x, n, sign);
}

}  // namespace detail

namespace {

/// Transform every 1-D line along one axis. Lines are independent, so the
/// batch parallelizes directly.
void transform_axis(std::vector<std::complex<double>>& data, const Shape3& shape, int axis,
                    int sign) {
    const long long c = shape.c, h = shape.h, w = shape.w;
    long long len = 0, stride = 0, nlines = 0;
    switch (axis) {
        case 0: len = c; stride = h * w; nlines = h * w; break;
        case 1: len = h; stride = w; nlines = c * w; break;
        default: len = w; stride = 1; nlines = c * h; break;
    }
    if (len == 1) return;

#pragma omp parallel for schedule(static)
    for (long long line = 0; line < nlines; ++line) {
        long long base = 0;
        switch (axis) {
            case 0: base = line; break;                                // (ih, iw) pairs
            case 1: base = (line / w) * (h * w) + (line % w); break;   // (ic, iw)
            default: base = line * w; break;                           // (ic, ih)
        }
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(len));
        for (long long k = 0; k < len; ++k) buf[static_cast<std::size_t>(k)] = data[base + k * stride];
        detail::fft_1d(buf.data(), static_cast<std::size_t>(len), sign);
        for (long long k = 0; k < len; ++k) data[base + k * stride] = buf[static_cast<std::size_t>(k)];
    }
}

void transform3(std::vector<std::complex<double>>& data, const Shape3& shape, int sign) {
    transform_axis(data, shape, 2, sign);
    transform_axis(data, shape, 1, sign);
    transform_axis(data, shape, 0, sign);
}

}  // namespace

SpectrumGrid fft3(const TensorGrid& t) {
    SpectrumGrid out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = {t[i], 0.0};
    transform3(out.data(), t.shape(), -1);
    return out;
}

SpectrumGrid fft3(const SpectrumGrid& s) {
    SpectrumGrid out = s;
    transform3(out.data(), s.shape(), -1);
    return out;
}

SpectrumGrid ifft3(const SpectrumGrid& s) {
    SpectrumGrid out = s;
    transform3(out.data(), s.shape(), +1);
    const double inv_n = 1.0 / static_cast<double>(s.shape().total());
    for (auto& z : out.data()) z *= inv_n;
    return out;
}

TensorGrid ifft3_real(const SpectrumGrid& s) {
    SpectrumGrid full = ifft3(s);
    TensorGrid out(s.shape());
    for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
    return out;
}

}  // namespace gradmrf
