#pragma once

#include <complex>
#include <vector>

#include "ff/common.hpp"

namespace ff {

using cplx = std::complex<double>;

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_inplace(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    require((n & (n - 1)) == 0, "fft size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

// Centered ("same") linear convolution of a real signal with a complex
// kernel, via zero-padded FFT. The kernel is treated as sampled on
// [-half, half] with odd length.
inline std::vector<cplx> convolve_same(const std::vector<double>& x,
                                       const std::vector<cplx>& kernel) {
    const size_t lx = x.size(), lk = kernel.size();
    require(lk % 2 == 1, "convolve_same: kernel length must be odd");
    const size_t half = lk / 2;
    const size_t full = lx + lk - 1;
    const size_t n = next_pow2(full);
    std::vector<cplx> fx(n), fk(n);
    for (size_t i = 0; i < lx; ++i) fx[i] = x[i];
    for (size_t i = 0; i < lk; ++i) fk[i] = kernel[i];
    fft_inplace(fx, false);
    fft_inplace(fk, false);
    for (size_t i = 0; i < n; ++i) fx[i] *= fk[i];
    fft_inplace(fx, true);
    std::vector<cplx> out(lx);
    for (size_t i = 0; i < lx; ++i) out[i] = fx[i + half];
    return out;
}

}  // namespace ff
