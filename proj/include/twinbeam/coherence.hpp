#pragma once

// Classical-coherence channel: interference fringe synthesis, visibility,
// and beat-note frequency estimation for two beams of different optical
// frequency. Visibility follows the Gaussian mutual-coherence law
// Vis = 2 sqrt(I1 I2)/(I1+I2) * exp(-(nu1-nu2)^2 / (2 dnu^2)) at zero
// interference delay, with dnu the spectral standard deviation of each
// beam (the 1/e point then sits at sqrt(2) * dnu).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "twinbeam/csv.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/fft.hpp"

namespace twinbeam {

// Visibility below this value counts as vanished classical coherence.
// It is the Gaussian-law value at 3.37 linewidths of frequency difference.
inline constexpr double kVisibilityVanishThreshold = 0.0034;

// Relative modulation amplitude below which a beat peak is undetectable.
inline constexpr double kBeatDetectionFloor = 1e-4;

struct CoherenceParams {
    double nu1_hz = 0.0;        // carrier frequencies, only the difference matters
    double nu2_hz = 0.0;
    double linewidth_hz = 1.0e6;
    double intensity1 = 1.0;    // photon-flux units
    double intensity2 = 1.0;
};

// Sampled interference intensity with extracted extrema. Synthesized
// traces record how many modulation cycles they span; imported traces
// leave it negative (unknown).
struct FringeTrace {
    std::vector<double> intensity;
    double sample_rate_hz = 0.0;
    double i_max = 0.0;
    double i_min = 0.0;
    double modulation_cycles = -1.0;

    double time_of(size_t k) const { return static_cast<double>(k) / sample_rate_hz; }
};

inline void validate(const CoherenceParams& p) {
    if (!(p.linewidth_hz > 0.0))
        throw ValidationError("linewidth_hz must be > 0, got " + detail::fmt(p.linewidth_hz));
    if (!(p.intensity1 >= 0.0) || !(p.intensity2 >= 0.0))
        throw ValidationError("intensities must be >= 0");
}

inline double visibility(const CoherenceParams& p) {
    validate(p);
    const double total = p.intensity1 + p.intensity2;
    if (!(total > 0.0)) throw ValidationError("both intensities are zero, visibility undefined");
    const double balance = 2.0 * std::sqrt(p.intensity1 * p.intensity2) / total;
    const double d = p.nu1_hz - p.nu2_hz;
    return balance * std::exp(-d * d / (2.0 * p.linewidth_hz * p.linewidth_hz));
}

// I(t) = I1 + I2 + 2 sqrt(I1 I2) g cos(2 pi (nu1-nu2) t + ramp t), with
// g the Gaussian coherence factor. The intensity-imbalance part of the
// visibility emerges from the extrema ratio, so the extracted value
// round-trips visibility(p). The phase ramp stands in for the scanned
// mirror that sweeps fringes across the detector.
inline FringeTrace fringe_trace(const CoherenceParams& p, double phase_ramp_rad_per_s,
                                double duration_s, double sample_rate_hz) {
    validate(p);
    if (!(duration_s > 0.0))
        throw ValidationError("duration_s must be > 0, got " + detail::fmt(duration_s));
    if (!(sample_rate_hz > 0.0))
        throw ValidationError("sample_rate_hz must be > 0, got " + detail::fmt(sample_rate_hz));
    const double beat = std::abs(p.nu1_hz - p.nu2_hz);
    const double modulation_hz = beat + std::abs(phase_ramp_rad_per_s) / (2.0 * M_PI);
    if (!(sample_rate_hz > 2.0 * modulation_hz))
        throw SamplingError("sample rate " + detail::fmt(sample_rate_hz) +
                            " Hz undersamples the fringe modulation at " +
                            detail::fmt(modulation_hz) + " Hz");
    const auto n = static_cast<size_t>(std::llround(duration_s * sample_rate_hz));
    if (n < 2) throw SamplingError("trace would hold fewer than 2 samples");

    const double d = p.nu1_hz - p.nu2_hz;
    const double coherence = std::exp(-d * d / (2.0 * p.linewidth_hz * p.linewidth_hz));
    const double amp = 2.0 * std::sqrt(p.intensity1 * p.intensity2) * coherence;
    const double base = p.intensity1 + p.intensity2;
    const double omega = 2.0 * M_PI * (p.nu1_hz - p.nu2_hz) + phase_ramp_rad_per_s;

    FringeTrace t;
    t.sample_rate_hz = sample_rate_hz;
    t.intensity.resize(n);
    for (size_t k = 0; k < n; ++k)
        t.intensity[k] = base + amp * std::cos(omega * static_cast<double>(k) / sample_rate_hz);
    const auto [lo, hi] = std::minmax_element(t.intensity.begin(), t.intensity.end());
    t.i_min = *lo;
    t.i_max = *hi;
    t.modulation_cycles = duration_s * std::abs(omega) / (2.0 * M_PI);
    return t;
}

namespace detail {

// Sub-sample extremum via a parabola through the extreme sample and its
// neighbors; keeps the visibility readout accurate at ~10 samples per
// fringe. Falls back to the raw sample at the trace edges.
inline double refine_extremum(const std::vector<double>& s, size_t k) {
    if (k == 0 || k + 1 >= s.size()) return s[k];
    const double denom = s[k - 1] - 2.0 * s[k] + s[k + 1];
    if (std::abs(denom) < 1e-300) return s[k];
    const double d = s[k - 1] - s[k + 1];
    return s[k] - d * d / (8.0 * denom);
}

}  // namespace detail

// (i_max - i_min) / (i_max + i_min) from the global trace extrema,
// parabolically refined between samples.
inline double extract_visibility(const FringeTrace& t) {
    if (t.intensity.size() < 4) throw SamplingError("trace too short: fewer than 4 samples");
    const double raw_swing = t.i_max - t.i_min;
    const double raw_total = t.i_max + t.i_min;
    if (!(raw_total > 0.0)) throw MeasurementError("trace carries no optical power");
    // A flat trace is a valid zero-visibility reading; an undersampled
    // modulation (fewer than 2 cycles) is not.
    if (t.modulation_cycles >= 0.0 && t.modulation_cycles < 2.0 && raw_swing > 1e-12 * raw_total)
        throw SamplingError("trace too short: spans " + detail::fmt(t.modulation_cycles) +
                            " modulation cycles, need at least 2");
    const auto [lo, hi] = std::minmax_element(t.intensity.begin(), t.intensity.end());
    const double i_max =
        detail::refine_extremum(t.intensity, static_cast<size_t>(hi - t.intensity.begin()));
    const double i_min = std::max(
        detail::refine_extremum(t.intensity, static_cast<size_t>(lo - t.intensity.begin())), 0.0);
    if (!(i_max + i_min > 0.0)) return 0.0;
    return (i_max - i_min) / (i_max + i_min);
}

// Power spectrum of the intensity trace (mean removed, Hann window,
// zero-padded to the next power of two), normalized so a pure modulation
// of relative amplitude m reads m in `relative_amplitude`.
struct BeatSpectrumBin {
    double freq_hz = 0.0;
    double relative_amplitude = 0.0;
};

inline std::vector<BeatSpectrumBin> beat_spectrum(const FringeTrace& t) {
    const size_t n = t.intensity.size();
    if (n < 8) throw SamplingError("trace too short for spectral analysis: " + std::to_string(n));
    if (!(t.sample_rate_hz > 0.0)) throw ValidationError("trace has no sample rate");
    double mean = 0.0;
    for (double v : t.intensity) mean += v;
    mean /= static_cast<double>(n);
    if (!(mean > 0.0)) throw MeasurementError("trace carries no optical power");

    size_t npad = 1;
    while (npad < 2 * n) npad <<= 1;
    std::vector<std::complex<double>> d(npad);
    double window_sum = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double w =
            0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n - 1));
        window_sum += w;
        d[k] = (t.intensity[k] - mean) * w;
    }
    fft_forward(d);

    std::vector<BeatSpectrumBin> bins(npad / 2 + 1);
    for (size_t k = 0; k < bins.size(); ++k) {
        bins[k].freq_hz = static_cast<double>(k) * t.sample_rate_hz / static_cast<double>(npad);
        // A cosine of amplitude A contributes A * window_sum / 2 to its bin.
        bins[k].relative_amplitude = std::abs(d[k]) / (0.5 * window_sum * mean);
    }
    return bins;
}

// Dominant beat frequency of the intensity trace, accurate to a bin of the
// padded spectrum. A flat trace reads 0 Hz (DC only); a modulation below
// the detection floor raises MeasurementError, mirroring the regime where
// the beat note disappears on the analyzer.
inline double beat_frequency(const FringeTrace& t) {
    if (t.modulation_cycles >= 0.0) {
        const double swing = t.i_max - t.i_min;
        if (t.modulation_cycles < 4.0 && swing > 1e-12 * std::max(t.i_max, 1e-300))
            throw SamplingError("trace spans " + detail::fmt(t.modulation_cycles) +
                                " beat periods, need at least 4");
    }
    const double total = t.i_max + t.i_min;
    if (total > 0.0 && (t.i_max - t.i_min) <= 1e-12 * total) return 0.0;

    const auto bins = beat_spectrum(t);
    size_t peak = 1;
    for (size_t k = 2; k < bins.size(); ++k)
        if (bins[k].relative_amplitude > bins[peak].relative_amplitude) peak = k;
    if (bins[peak].relative_amplitude < kBeatDetectionFloor)
        throw MeasurementError("no beat peak above the detection floor (relative amplitude " +
                               detail::fmt(bins[peak].relative_amplitude) + " < " +
                               detail::fmt(kBeatDetectionFloor) + ")");
    return bins[peak].freq_hz;
}

inline void write_fringe_csv(const FringeTrace& t, const std::string& path) {
    auto out = csv::open_for_write(path);
    out << "time_s,intensity\n";
    for (size_t k = 0; k < t.intensity.size(); ++k)
        out << csv::format_double(t.time_of(k)) << "," << csv::format_double(t.intensity[k])
            << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline FringeTrace read_fringe_csv(const std::string& path) {
    auto in = csv::open_for_read(path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty fringe CSV: " + path);
    FringeTrace t;
    std::vector<double> times;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != 2)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 2 columns, got " +
                             std::to_string(fields.size()));
        times.push_back(csv::parse_double(fields[0], path + ":" + std::to_string(line_no)));
        t.intensity.push_back(csv::parse_double(fields[1], path + ":" + std::to_string(line_no)));
    }
    if (t.intensity.size() < 2) throw ParseError("fringe CSV has fewer than 2 samples: " + path);
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) throw ParseError("fringe CSV time column is not increasing: " + path);
    for (size_t k = 1; k < times.size(); ++k)
        if (std::abs((times[k] - times[k - 1]) - dt) > 1e-6 * dt)
            throw ParseError("fringe CSV is not uniformly sampled: " + path);
    t.sample_rate_hz = 1.0 / dt;
    const auto [lo, hi] = std::minmax_element(t.intensity.begin(), t.intensity.end());
    t.i_min = *lo;
    t.i_max = *hi;
    if (t.i_min < 0.0) throw ValidationError("fringe CSV contains negative intensities: " + path);
    return t;
}

inline void write_beat_spectrum_csv(const std::vector<BeatSpectrumBin>& bins,
                                    const std::string& path) {
    auto out = csv::open_for_write(path);
    out << "freq_hz,power_db\n";
    for (const auto& b : bins) {
        const double db = 20.0 * std::log10(std::max(b.relative_amplitude, 1e-15));
        out << csv::format_double(b.freq_hz) << "," << csv::format_double(db) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace twinbeam
