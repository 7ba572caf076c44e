#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace srw::radar {

using cplx = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT, forward kernel exp(-j*2*pi*k*n/N).
inline void fft_inplace(std::vector<cplx>& a) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
    if (n < 2) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * pi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

inline std::vector<cplx> fft(std::vector<cplx> a) {
    fft_inplace(a);
    return a;
}

// Symmetric Hamming window.
inline std::vector<double> hamming(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    const double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

// Rotate spectrum so DC lands at index n/2.
inline std::vector<cplx> fftshift(const std::vector<cplx>& a) {
    const std::size_t n = a.size();
    std::vector<cplx> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[(i + n / 2) % n];
    return out;
}

}  // namespace srw::radar
