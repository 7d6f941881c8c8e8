#pragma once

// Monte Carlo ground truth for the analytic model. Correlated quadrature
// time series are synthesized by spectral amplitude shaping of white
// Gaussian streams in the ± normal-mode basis, pushed through the loss
// chain and the interferometers as frequency-dependent linear maps, power
// combined, and re-estimated with an emulated spectrum analyzer (Welch
// periodograms). Everything is deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "twinbeam/covariance.hpp"
#include "twinbeam/csv.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/fft.hpp"
#include "twinbeam/mach_zehnder.hpp"
#include "twinbeam/noise.hpp"
#include "twinbeam/nopo.hpp"

namespace twinbeam {

struct SpectrumBin {
    double freq_hz = 0.0;
    double variance = 0.0;
};

// Averaged one-sided spectrum, calibrated so a unit-variance white input
// reads 1.0 (the QNL) in every bin.
struct SpectrumEstimate {
    std::vector<SpectrumBin> bins;
    double rbw_hz = 0.0;
    size_t n_averages = 0;
};

struct SynthTraces {
    NoiseTrace x1, y1, x2, y2;
};

namespace detail {

// Multiply the half spectrum of a white trace by sqrt(psd(f)) per bin.
inline NoiseTrace shape_to_psd(const NoiseTrace& white,
                               const std::function<double(double)>& psd) {
    const size_t n = white.samples.size();
    auto half = rfft(white.samples);
    for (size_t k = 0; k < half.size(); ++k) {
        const double f = static_cast<double>(k) * white.sample_rate_hz / static_cast<double>(n);
        const double s = psd(f);
        if (!(s >= 0.0) || !std::isfinite(s))
            throw PhysicalityError("target PSD is negative or non-finite at " + fmt(f) + " Hz");
        half[k] *= std::sqrt(s);
    }
    NoiseTrace out = white;
    out.samples = irfft(half, n);
    return out;
}

}  // namespace detail

// Four beam quadrature traces whose spectra realize the analytic model at
// detuning d: the minus-mode X and plus-mode Y carry the squeezed spectra,
// their partners the minimum-uncertainty completion, and the ± modes are
// rotated back to beams 1 and 2 through the inverse 50/50 relation.
inline SynthTraces synthesize_twin_traces(const NopoParams& p, Detuning d, size_t n_samples,
                                          double sample_rate_hz, uint64_t seed) {
    validate(p);
    if (!is_power_of_two(n_samples) || n_samples < (1u << 16))
        throw SamplingError("n_samples must be a power of two >= 65536, got " +
                            std::to_string(n_samples));
    if (!(sample_rate_hz > 4.0 * p.bandwidth_hz))
        throw SamplingError("sample rate " + detail::fmt(sample_rate_hz) +
                            " Hz must exceed 4x the cavity bandwidth " +
                            detail::fmt(p.bandwidth_hz) + " Hz");

    const double w = phasematch_factor(d, p);
    const double gain = p.eta * p.zeta * p.zeta * p.xi * w;
    const double s2 = p.qnl * p.qnl;
    const auto x_minus_psd = [&](double f) {
        return detail::squeezed_variances_gain(p, gain, f).vx_minus;
    };
    const auto y_plus_psd = [&](double f) {
        return detail::squeezed_variances_gain(p, gain, f).vy_plus;
    };
    const auto x_plus_psd = [&](double f) {
        return p.antisqueeze_excess * s2 / detail::squeezed_variances_gain(p, gain, f).vy_plus;
    };
    const auto y_minus_psd = [&](double f) {
        return p.antisqueeze_excess * s2 / detail::squeezed_variances_gain(p, gain, f).vx_minus;
    };

    SeededRng rng(seed);
    const auto colored = [&](const std::function<double(double)>& psd) {
        return detail::shape_to_psd(white_trace(n_samples, sample_rate_hz, seed, rng), psd);
    };
    const NoiseTrace x_plus = colored(x_plus_psd);
    const NoiseTrace y_plus = colored(y_plus_psd);
    const NoiseTrace x_minus = colored(x_minus_psd);
    const NoiseTrace y_minus = colored(y_minus_psd);

    SynthTraces out;
    out.x1 = combine(x_plus, x_minus, TraceSign::plus);
    out.x2 = combine(x_plus, x_minus, TraceSign::minus);
    out.y1 = combine(y_plus, y_minus, TraceSign::plus);
    out.y2 = combine(y_plus, y_minus, TraceSign::minus);
    return out;
}

// Averaged modified periodogram: Hann-windowed segments sized from the
// requested resolution bandwidth, 50% overlap, window-power corrected so
// white unit-variance noise reads 1.0 in every bin.
inline SpectrumEstimate welch_estimate(const NoiseTrace& t, double rbw_hz) {
    validate(t);
    const size_t n = t.samples.size();
    if (!(rbw_hz > 0.0)) throw ValidationError("rbw_hz must be > 0, got " + detail::fmt(rbw_hz));
    if (rbw_hz < 2.0 * t.sample_rate_hz / static_cast<double>(n))
        throw SamplingError("rbw " + detail::fmt(rbw_hz) + " Hz too small for trace length " +
                            std::to_string(n) + " at " + detail::fmt(t.sample_rate_hz) + " Hz");

    // Segment length: power of two nearest to fs / rbw, at least 8 bins.
    const double ideal = t.sample_rate_hz / rbw_hz;
    size_t n_seg = 8;
    while (n_seg * 2 <= n / 2 && static_cast<double>(n_seg) * M_SQRT2 < ideal) n_seg <<= 1;

    std::vector<double> window(n_seg);
    double window_power = 0.0;
    for (size_t k = 0; k < n_seg; ++k) {
        window[k] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) /
                                         static_cast<double>(n_seg));
        window_power += window[k] * window[k];
    }

    const size_t hop = n_seg / 2;
    const size_t n_segments = (n - n_seg) / hop + 1;
    std::vector<double> acc(n_seg / 2 + 1, 0.0);
    std::vector<std::complex<double>> buf(n_seg);
    for (size_t s = 0; s < n_segments; ++s) {
        const double* src = t.samples.data() + s * hop;
        for (size_t k = 0; k < n_seg; ++k) buf[k] = src[k] * window[k];
        fft_forward(buf);
        for (size_t k = 0; k <= n_seg / 2; ++k) acc[k] += std::norm(buf[k]);
    }

    SpectrumEstimate est;
    est.rbw_hz = t.sample_rate_hz / static_cast<double>(n_seg);
    est.n_averages = n_segments;
    est.bins.resize(acc.size());
    const double norm = 1.0 / (window_power * static_cast<double>(n_segments));
    for (size_t k = 0; k < acc.size(); ++k) {
        est.bins[k].freq_hz = static_cast<double>(k) * est.rbw_hz;
        est.bins[k].variance = acc[k] * norm;
    }
    return est;
}

namespace detail {

// Quadrature estimate from a combined photocurrent spectrum: each bin is
// corrected for the exact interferometer transfer at its own frequency
// (signal coefficient and vacuum background from the configs alone) and
// the bins are averaged with weights that de-emphasize frequencies where
// the channel stops reading the target quadrature.
inline double corrected_band_estimate(const SpectrumEstimate& est, const MzConfig& cfg1,
                                      const MzConfig& cfg2, bool phase_channel, double f0,
                                      double halfwidth) {
    double wsum = 0.0;
    double acc = 0.0;
    double max_sig = 0.0;
    struct Corrected {
        double value;
        double sig;
    };
    std::vector<Corrected> rows;
    for (const auto& b : est.bins) {
        if (b.freq_hz < f0 - halfwidth || b.freq_hz > f0 + halfwidth) continue;
        const MzCoefficients co1 = sideband_coefficients(cfg1, b.freq_hz);
        const MzCoefficients co2 = sideband_coefficients(cfg2, b.freq_hz);
        const MzChannelCoefficients& c1 = phase_channel ? co1.diff : co1.sum;
        const MzChannelCoefficients& c2 = phase_channel ? co2.diff : co2.sum;
        const double sig = phase_channel ? 0.5 * (std::norm(c1.ya) + std::norm(c2.ya))
                                         : 0.5 * (std::norm(c1.xa) + std::norm(c2.xa));
        const double cross = phase_channel ? 0.5 * (std::norm(c1.xa) + std::norm(c2.xa))
                                           : 0.5 * (std::norm(c1.ya) + std::norm(c2.ya));
        const double background = cross + 0.5 * (std::norm(c1.xv) + std::norm(c1.yv) +
                                                 std::norm(c2.xv) + std::norm(c2.yv));
        rows.push_back({b.variance - background, sig});
        max_sig = std::max(max_sig, sig);
    }
    if (rows.empty() || max_sig <= 0.0)
        throw ValidationError("no usable spectrum bins around " + fmt(f0) + " Hz");
    for (const auto& r : rows) {
        if (r.sig < 1e-6 * max_sig) continue;
        const double weight = r.sig * r.sig;
        acc += weight * (r.value / r.sig);
        wsum += weight;
    }
    return acc / wsum;
}

}  // namespace detail

// Mean bin value over [f_lo, f_hi] inclusive.
inline double band_average(const SpectrumEstimate& est, double f_lo, double f_hi) {
    double sum = 0.0;
    size_t count = 0;
    for (const auto& b : est.bins)
        if (b.freq_hz >= f_lo && b.freq_hz <= f_hi) {
            sum += b.variance;
            ++count;
        }
    if (count == 0)
        throw ValidationError("no spectrum bins in [" + detail::fmt(f_lo) + ", " +
                              detail::fmt(f_hi) + "] Hz");
    return sum / static_cast<double>(count);
}

inline void write_spectrum_csv(const SpectrumEstimate& est, const std::string& path) {
    auto out = csv::open_for_write(path);
    out << "freq_hz,variance,variance_db\n";
    for (const auto& b : est.bins) {
        const double db = 10.0 * std::log10(std::max(b.variance, 1e-300));
        out << csv::format_double(b.freq_hz) << "," << csv::format_double(b.variance) << ","
            << csv::format_double(db) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// Photocurrent traces of one interferometer: the quadrature traces of the
// bright input and of the vacuum port are mixed per frequency bin with the
// exact sideband coefficients, so the arm delay acts as the physical
// frequency-dependent phase across the whole analysis band.
struct MzTraceChannels {
    NoiseTrace sum;
    NoiseTrace diff;
};

inline MzTraceChannels mz_photocurrents(const MzConfig& cfg, const NoiseTrace& x,
                                        const NoiseTrace& y, SeededRng& rng) {
    validate(cfg);
    if (x.samples.size() != y.samples.size() || x.sample_rate_hz != y.sample_rate_hz)
        throw ValidationError("mz_photocurrents: X and Y traces do not match");
    const size_t n = x.samples.size();
    const double fs = x.sample_rate_hz;

    const NoiseTrace xv = white_trace(n, fs, x.seed, rng);
    const NoiseTrace yv = white_trace(n, fs, x.seed, rng);
    const auto hx = rfft(x.samples);
    const auto hy = rfft(y.samples);
    const auto hxv = rfft(xv.samples);
    const auto hyv = rfft(yv.samples);

    std::vector<std::complex<double>> hsum(hx.size()), hdiff(hx.size());
    for (size_t k = 0; k < hx.size(); ++k) {
        const double f = static_cast<double>(k) * fs / static_cast<double>(n);
        const MzCoefficients co = sideband_coefficients(cfg, f);
        hsum[k] = co.sum.xa * hx[k] + co.sum.ya * hy[k] + co.sum.xv * hxv[k] + co.sum.yv * hyv[k];
        hdiff[k] =
            co.diff.xa * hx[k] + co.diff.ya * hy[k] + co.diff.xv * hxv[k] + co.diff.yv * hyv[k];
    }
    MzTraceChannels out;
    out.sum.sample_rate_hz = fs;
    out.sum.seed = x.seed;
    out.sum.samples = irfft(hsum, n);
    out.diff.sample_rate_hz = fs;
    out.diff.seed = x.seed;
    out.diff.samples = irfft(hdiff, n);
    return out;
}

struct OracleOptions {
    size_t n_samples = 1u << 20;
    double sample_rate_hz = 80.0e6;
    uint64_t seed = 1;
    double rbw_hz = 30.0e3;
    double analysis_frequency_hz = 2.0e6;
    double avg_halfwidth_hz = 1.25e6;  // frequency averaging around the analysis point
};

struct OracleResult {
    double vx_minus = 1.0;  // linear, QNL-normalized
    double vy_plus = 1.0;
    double qnl = 1.0;       // calibration channel against the ideal 1.0
    double vx_minus_db = 0.0;
    double vy_plus_db = 0.0;
    double qnl_db = 0.0;
};

// Full simulated run of the measurement chain.
//
// The beams are synthesized at the source (eta = zeta = 1, excess phase
// noise deferred), attenuated by the detection chain eta zeta^2 with
// vacuum injection, read out by both interferometer modes, power combined,
// and Welch-estimated. The excess phase noise enters as an additive white
// stream on the combined phase channel, which reproduces the analytic
// constant for any loss. The QNL reference is the balanced-detection
// difference channel, averaged over a wide flat band; the two signal
// estimates are normalized to it.
//
// cfg1/cfg2 describe the phase-quadrature operating point (input splitter
// present); the amplitude measurement reuses them with the splitter
// removed. RNG draws happen in a fixed documented order, so a seed pins
// the entire run.
inline OracleResult oracle_run(const NopoParams& p, const MzConfig& cfg1, const MzConfig& cfg2,
                               Detuning d, const OracleOptions& opts) {
    validate(p);
    if (mz_mode(cfg1) != MzMode::phase || mz_mode(cfg2) != MzMode::phase)
        throw OperatingPointError(
            "oracle_run expects phase-mode configs (input splitter present); the amplitude "
            "measurement derives from them");
    const double f0 = opts.analysis_frequency_hz;
    validate_operating_point(cfg1, f0);
    validate_operating_point(cfg2, f0);
    if (!(f0 > 0.0) || !(f0 < opts.sample_rate_hz / 2.0))
        throw ValidationError("analysis frequency must sit inside (0, fs/2), got " +
                              detail::fmt(f0));
    if (!(opts.avg_halfwidth_hz >= 0.0))
        throw ValidationError("avg_halfwidth_hz must be >= 0");

    // Source-side parameters: the detection chain is applied to the traces
    // below, the excess phase noise is injected onto the detected beams.
    NopoParams src = p;
    src.eta = 1.0;
    src.zeta = 1.0;
    src.excess_phase_noise = 0.0;
    const double chain = p.eta * p.zeta * p.zeta;

    // The synthesis consumes an independent child stream so the loss and
    // interferometer vacua below stay uncorrelated with the beams.
    SeededRng rng(opts.seed);
    const uint64_t synth_seed = rng.derive_seed();
    SynthTraces beams = synthesize_twin_traces(src, d, opts.n_samples, opts.sample_rate_hz,
                                               synth_seed);
    // One fresh vacuum per beam and quadrature models the lumped loss.
    beams.x1 = attenuate_with_vacuum(beams.x1, chain, rng);
    beams.y1 = attenuate_with_vacuum(beams.y1, chain, rng);
    beams.x2 = attenuate_with_vacuum(beams.x2, chain, rng);
    beams.y2 = attenuate_with_vacuum(beams.y2, chain, rng);
    if (p.excess_phase_noise > 0.0) {
        // Independent white phase noise of variance epsilon per beam adds
        // epsilon to the phase-sum variance, matching the analytic model.
        const double amp = std::sqrt(p.excess_phase_noise);
        for (auto& v : beams.y1.samples) v += amp * rng.gaussian();
        for (auto& v : beams.y2.samples) v += amp * rng.gaussian();
    }

    // Phase mode: difference channels, positive combiner -> V Y+.
    const MzTraceChannels ph1 = mz_photocurrents(cfg1, beams.x1, beams.y1, rng);
    const MzTraceChannels ph2 = mz_photocurrents(cfg2, beams.x2, beams.y2, rng);
    const NoiseTrace phase_comb = combine(ph1.diff, ph2.diff, TraceSign::plus);

    // Amplitude mode: splitters removed; sum channels, negative combiner
    // -> V X-; the difference channels read pure vacuum and calibrate the
    // QNL.
    MzConfig amp_cfg1 = cfg1;
    MzConfig amp_cfg2 = cfg2;
    amp_cfg1.input_splitter_present = false;
    amp_cfg2.input_splitter_present = false;
    const MzTraceChannels am1 = mz_photocurrents(amp_cfg1, beams.x1, beams.y1, rng);
    const MzTraceChannels am2 = mz_photocurrents(amp_cfg2, beams.x2, beams.y2, rng);
    const NoiseTrace amp_comb = combine(am1.sum, am2.sum, TraceSign::minus);
    const NoiseTrace qnl_comb = combine(am1.diff, am2.diff, TraceSign::minus);

    const SpectrumEstimate amp_est = welch_estimate(amp_comb, opts.rbw_hz);
    const SpectrumEstimate phase_est = welch_estimate(phase_comb, opts.rbw_hz);
    const SpectrumEstimate qnl_est = welch_estimate(qnl_comb, opts.rbw_hz);

    // Each bin is corrected for the known interferometer transfer at its
    // own frequency, then the band around f0 stands in for the analyzer's
    // video averaging. The flat QNL channel averages over a wide band and
    // normalizes the two signal estimates.
    const double hw = std::max(opts.avg_halfwidth_hz, amp_est.rbw_hz);
    const double vx_corr =
        detail::corrected_band_estimate(amp_est, amp_cfg1, amp_cfg2, false, f0, hw);
    const double vy_corr = detail::corrected_band_estimate(phase_est, cfg1, cfg2, true, f0, hw);
    const double a2 = 0.5 * (cfg1.classical_amplitude * cfg1.classical_amplitude +
                             cfg2.classical_amplitude * cfg2.classical_amplitude);
    if (!(a2 > 0.0)) throw ValidationError("classical_amplitude must be > 0 for the oracle run");
    const double qnl_lo = std::max(f0 / 4.0, 2.0 * qnl_est.rbw_hz);
    const double qnl_hi = std::min(12.5 * f0, 0.45 * opts.sample_rate_hz);
    const double qnl_normalized = band_average(qnl_est, qnl_lo, qnl_hi) / a2;

    OracleResult r;
    r.qnl = qnl_normalized;
    r.vx_minus = vx_corr / qnl_normalized;
    r.vy_plus = vy_corr / qnl_normalized;
    r.qnl_db = 10.0 * std::log10(r.qnl);
    r.vx_minus_db = 10.0 * std::log10(r.vx_minus);
    r.vy_plus_db = 10.0 * std::log10(r.vy_plus);
    return r;
}

}  // namespace twinbeam
