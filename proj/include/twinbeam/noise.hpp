#pragma once

// Seeded Gaussian noise streams and the sampled-trace type shared by the
// Monte Carlo pipeline. Uniform deviates come straight from the top 53
// bits of mt19937_64 and normals from Box-Muller, so a single integer
// seed reproduces every trace exactly.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "twinbeam/csv.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/fft.hpp"

namespace twinbeam {

class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : engine_(seed) {}

    // Uniform in (0, 1].
    double uniform() {
        const uint64_t bits = engine_() >> 11;
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double ang = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(ang);
        have_spare_ = true;
        return r * std::cos(ang);
    }

    // Seed for an independent child stream.
    uint64_t derive_seed() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Real-valued stationary noise samples (quadrature or photocurrent units)
// with the master seed they were derived from.
struct NoiseTrace {
    std::vector<double> samples;
    double sample_rate_hz = 0.0;
    uint64_t seed = 0;
};

inline void validate(const NoiseTrace& t) {
    if (!is_power_of_two(t.samples.size()))
        throw SamplingError("trace length must be a power of two, got " +
                            std::to_string(t.samples.size()));
    if (!(t.sample_rate_hz > 0.0))
        throw ValidationError("trace sample rate must be > 0, got " +
                              detail::fmt(t.sample_rate_hz));
    for (double v : t.samples)
        if (!std::isfinite(v)) throw ValidationError("trace contains a non-finite sample");
}

// White Gaussian trace of unit per-sample variance (flat spectrum reading
// 1.0 in QNL units).
inline NoiseTrace white_trace(size_t n_samples, double sample_rate_hz, uint64_t seed,
                              SeededRng& rng) {
    if (!is_power_of_two(n_samples))
        throw SamplingError("trace length must be a power of two, got " +
                            std::to_string(n_samples));
    NoiseTrace t;
    t.sample_rate_hz = sample_rate_hz;
    t.seed = seed;
    t.samples.resize(n_samples);
    for (auto& v : t.samples) v = rng.gaussian();
    return t;
}

// Elementwise (a +/- b) / sqrt(2); the sqrt(2) keeps the combined channel
// in the same QNL normalization as the ± variances.
enum class TraceSign { plus, minus };

inline NoiseTrace combine(const NoiseTrace& a, const NoiseTrace& b, TraceSign sign) {
    if (a.samples.size() != b.samples.size())
        throw ValidationError("combine: trace lengths differ (" +
                              std::to_string(a.samples.size()) + " vs " +
                              std::to_string(b.samples.size()) + ")");
    if (a.sample_rate_hz != b.sample_rate_hz)
        throw ValidationError("combine: sample rates differ (" + detail::fmt(a.sample_rate_hz) +
                              " vs " + detail::fmt(b.sample_rate_hz) + ")");
    const double s = sign == TraceSign::plus ? 1.0 : -1.0;
    NoiseTrace out;
    out.sample_rate_hz = a.sample_rate_hz;
    out.seed = a.seed;
    out.samples.resize(a.samples.size());
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (size_t i = 0; i < a.samples.size(); ++i)
        out.samples[i] = (a.samples[i] + s * b.samples[i]) * inv_sqrt2;
    return out;
}

// Attenuation with compensating vacuum injection: sqrt(t) x + sqrt(1-t) w
// with w a fresh unit white stream, so QNL maps to QNL.
inline NoiseTrace attenuate_with_vacuum(const NoiseTrace& t, double transmittance,
                                        SeededRng& rng) {
    if (!(transmittance >= 0.0 && transmittance <= 1.0))
        throw ValidationError("transmittance must be in [0,1], got " +
                              detail::fmt(transmittance));
    NoiseTrace out = t;
    const double ct = std::sqrt(transmittance);
    const double cv = std::sqrt(1.0 - transmittance);
    for (auto& v : out.samples) v = ct * v + cv * rng.gaussian();
    return out;
}

inline void write_trace_csv(const NoiseTrace& t, const std::string& path) {
    auto out = csv::open_for_write(path);
    out << "time_s,value\n";
    for (size_t k = 0; k < t.samples.size(); ++k)
        out << csv::format_double(static_cast<double>(k) / t.sample_rate_hz) << ","
            << csv::format_double(t.samples[k]) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace twinbeam
