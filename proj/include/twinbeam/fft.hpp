#pragma once

// Iterative radix-2 FFT with cached twiddle tables, plus real-signal
// wrappers. All trace lengths in this project are powers of two, so no
// mixed-radix support is needed.

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "twinbeam/errors.hpp"

namespace twinbeam {

inline bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

inline const std::vector<std::complex<double>>& twiddle_table(size_t n) {
    thread_local std::map<size_t, std::vector<std::complex<double>>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<std::complex<double>> table(n / 2);
    for (size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        table[k] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(table)).first->second;
}

inline void fft_radix2(std::vector<std::complex<double>>& d, bool inverse) {
    const size_t n = d.size();
    if (!is_power_of_two(n))
        throw SamplingError("FFT length must be a power of two, got " + std::to_string(n));
    if (n < 2) return;

    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(d[i], d[j]);
    }

    const auto& tw = twiddle_table(n);
    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t half = len >> 1;
        const size_t stride = n / len;
        for (size_t block = 0; block < n; block += len) {
            for (size_t k = 0; k < half; ++k) {
                std::complex<double> w = tw[k * stride];
                if (inverse) w = std::conj(w);
                const std::complex<double> u = d[block + k];
                const std::complex<double> v = d[block + k + half] * w;
                d[block + k] = u + v;
                d[block + k + half] = u - v;
            }
        }
    }
    if (inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& x : d) x *= scale;
    }
}

}  // namespace detail

inline void fft_forward(std::vector<std::complex<double>>& data) {
    detail::fft_radix2(data, false);
}

inline void fft_inverse(std::vector<std::complex<double>>& data) {
    detail::fft_radix2(data, true);
}

// Half spectrum (bins 0..n/2) of a real signal.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    std::vector<std::complex<double>> d(x.begin(), x.end());
    fft_forward(d);
    d.resize(x.size() / 2 + 1);
    return d;
}

// Real signal of length n from its half spectrum; the implied negative
// bins are the conjugate mirror.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& half, size_t n) {
    if (half.size() != n / 2 + 1)
        throw SamplingError("half spectrum size " + std::to_string(half.size()) +
                            " does not match signal length " + std::to_string(n));
    std::vector<std::complex<double>> d(n);
    for (size_t k = 0; k <= n / 2; ++k) d[k] = half[k];
    for (size_t k = n / 2 + 1; k < n; ++k) d[k] = std::conj(half[n - k]);
    // DC and Nyquist bins of a real signal carry no imaginary part.
    d[0] = d[0].real();
    if (n % 2 == 0) d[n / 2] = d[n / 2].real();
    fft_inverse(d);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = d[i].real();
    return out;
}

}  // namespace twinbeam
