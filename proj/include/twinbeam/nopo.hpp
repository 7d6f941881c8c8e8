#pragma once

// Analytic model of the above-threshold twin-beam source: squeezed
// correlation spectra of the amplitude-difference / phase-sum channels,
// the pump parameter, a phase-matching window over frequency detuning,
// and the minimum-uncertainty completion into a full covariance matrix.

#include <cmath>
#include <string>

#include "twinbeam/covariance.hpp"
#include "twinbeam/errors.hpp"

namespace twinbeam {

// Source and detection-chain parameters. Defaults reproduce the reference
// operating point of the simulator.
struct NopoParams {
    double eta = 0.90;                 // detection efficiency
    double zeta = 0.81;                // interferometer transmission
    double xi = 0.88;                  // output coupling efficiency
    double pump_power_mw = 195.0;      // P
    double threshold_power_mw = 130.0; // P0
    double bandwidth_hz = 15.4e6;      // cavity bandwidth B
    double qnl = 1.0;                  // S0, readout normalization
    double linewidth_hz = 1.0e6;       // Gaussian frequency spread per beam
    double band_low_hz = -83.2e9;      // phase-matching detuning edges
    double band_high_hz = 975.0e9;
    double band_softness_hz = 50.0e9;  // raised-cosine roll-off width
    double excess_phase_noise = 0.0;   // additive variance on V Y+
    double antisqueeze_excess = 1.0;   // >= 1, multiplies the completed anti-squeezed variances
};

// Signed optical frequency difference nu1 - nu2 between the twin beams.
struct Detuning {
    double hz = 0.0;
};

struct SqueezedVariances {
    double vx_minus = 1.0;
    double vy_plus = 1.0;
};

inline void validate(const NopoParams& p) {
    const struct { const char* name; double v; double lo; double hi; } unit[] = {
        {"eta", p.eta, 0.0, 1.0}, {"zeta", p.zeta, 0.0, 1.0}, {"xi", p.xi, 0.0, 1.0}};
    for (const auto& f : unit)
        if (!(f.v >= f.lo && f.v <= f.hi))
            throw ValidationError(std::string(f.name) + " must be in [0,1], got " +
                                  detail::fmt(f.v));
    if (!(p.pump_power_mw >= 0.0))
        throw ValidationError("pump_power_mw must be >= 0, got " + detail::fmt(p.pump_power_mw));
    if (!(p.threshold_power_mw > 0.0))
        throw ValidationError("threshold_power_mw must be > 0, got " +
                              detail::fmt(p.threshold_power_mw));
    if (!(p.pump_power_mw > p.threshold_power_mw))
        throw ValidationError("above-threshold operation needs pump parameter sigma > 1, got "
                              "sigma = " + detail::fmt(std::sqrt(p.pump_power_mw /
                                                                 p.threshold_power_mw)));
    if (!(p.bandwidth_hz > 0.0))
        throw ValidationError("bandwidth_hz must be > 0, got " + detail::fmt(p.bandwidth_hz));
    if (!(p.qnl > 0.0))
        throw ValidationError("qnl must be > 0, got " + detail::fmt(p.qnl));
    if (!(p.linewidth_hz > 0.0))
        throw ValidationError("linewidth_hz must be > 0, got " + detail::fmt(p.linewidth_hz));
    if (!(p.band_low_hz < p.band_high_hz))
        throw ValidationError("band_low_hz must be < band_high_hz, got [" +
                              detail::fmt(p.band_low_hz) + ", " + detail::fmt(p.band_high_hz) + "]");
    if (!(p.band_softness_hz > 0.0))
        throw ValidationError("band_softness_hz must be > 0, got " +
                              detail::fmt(p.band_softness_hz));
    if (!(p.excess_phase_noise >= 0.0))
        throw ValidationError("excess_phase_noise must be >= 0, got " +
                              detail::fmt(p.excess_phase_noise));
    if (!(p.antisqueeze_excess >= 1.0))
        throw ValidationError("antisqueeze_excess must be >= 1, got " +
                              detail::fmt(p.antisqueeze_excess));
}

// sigma = sqrt(P / P0); above-threshold operation needs sigma > 1.
inline double pump_parameter(const NopoParams& p) {
    if (!(p.threshold_power_mw > 0.0))
        throw ValidationError("threshold_power_mw must be > 0, got " +
                              detail::fmt(p.threshold_power_mw));
    return std::sqrt(p.pump_power_mw / p.threshold_power_mw);
}

namespace detail {

// Shared kernel with the gain product eta zeta^2 xi already scaled by a
// phase-matching factor.
inline SqueezedVariances squeezed_variances_gain(const NopoParams& p, double gain,
                                                 double sideband_hz) {
    const double sigma = pump_parameter(p);
    const double fb2 = (sideband_hz / p.bandwidth_hz) * (sideband_hz / p.bandwidth_hz);
    SqueezedVariances v;
    v.vx_minus = p.qnl * (1.0 - gain / (1.0 + fb2));
    v.vy_plus = p.qnl * (1.0 - gain / (sigma * sigma + fb2)) + p.excess_phase_noise;
    return v;
}

}  // namespace detail

// V X- = S0 [1 - eta zeta^2 xi / (1 + (f/B)^2)]
// V Y+ = S0 [1 - eta zeta^2 xi / (sigma^2 + (f/B)^2)] + excess_phase_noise
inline SqueezedVariances squeezed_variances(const NopoParams& p, double sideband_hz) {
    validate(p);
    if (!(sideband_hz >= 0.0))
        throw ValidationError("sideband frequency must be >= 0, got " + detail::fmt(sideband_hz));
    const double gain = p.eta * p.zeta * p.zeta * p.xi;
    return detail::squeezed_variances_gain(p, gain, sideband_hz);
}

// Smooth phase-matching window over detuning: 1 inside [band_low, band_high]
// (edges inclusive), raised-cosine roll-off of width band_softness outside,
// exactly 0 beyond the roll-off.
inline double phasematch_factor(Detuning d, const NopoParams& p) {
    if (!(p.band_low_hz < p.band_high_hz))
        throw ValidationError("band_low_hz must be < band_high_hz");
    if (!(p.band_softness_hz > 0.0))
        throw ValidationError("band_softness_hz must be > 0");
    double x = 0.0;
    if (d.hz < p.band_low_hz)
        x = (p.band_low_hz - d.hz) / p.band_softness_hz;
    else if (d.hz > p.band_high_hz)
        x = (d.hz - p.band_high_hz) / p.band_softness_hz;
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(M_PI * x));
}

// 10 log10(V / S0); negative values are below the quantum noise limit.
inline double variance_to_db(double variance, double s0 = 1.0) {
    if (!(variance > 0.0))
        throw ValidationError("variance must be > 0 for dB conversion, got " +
                              detail::fmt(variance));
    if (!(s0 > 0.0)) throw ValidationError("s0 must be > 0, got " + detail::fmt(s0));
    return 10.0 * std::log10(variance / s0);
}

inline double db_to_variance(double db, double s0 = 1.0) {
    if (!(s0 > 0.0)) throw ValidationError("s0 must be > 0, got " + detail::fmt(s0));
    return s0 * std::pow(10.0, db / 10.0);
}

// Full covariance matrix at sideband f and detuning d. The squeezed pair
// comes from the spectra above with the gain product scaled by the
// phase-matching factor; the anti-squeezed partners are completed at
// minimum uncertainty (vx+ = S0^2/vy+, vy- = S0^2/vx-), optionally
// inflated by antisqueeze_excess.
inline TwoModeCovariance twin_beam_covariance(const NopoParams& p, double sideband_hz,
                                              Detuning d) {
    validate(p);
    if (!(sideband_hz >= 0.0))
        throw ValidationError("sideband frequency must be >= 0, got " + detail::fmt(sideband_hz));
    const double w = phasematch_factor(d, p);
    const double gain = p.eta * p.zeta * p.zeta * p.xi * w;
    const SqueezedVariances v = detail::squeezed_variances_gain(p, gain, sideband_hz);
    const double s2 = p.qnl * p.qnl;
    const double vx_plus = p.antisqueeze_excess * s2 / v.vy_plus;
    const double vy_minus = p.antisqueeze_excess * s2 / v.vx_minus;
    return build_covariance(vx_plus, v.vx_minus, v.vy_plus, vy_minus, sideband_hz);
}

}  // namespace twinbeam
