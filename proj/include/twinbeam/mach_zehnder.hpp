#pragma once

// Unbalanced Mach-Zehnder self-homodyne model. A bright input mode and a
// vacuum port are split (input splitter optional), the long arm delays the
// field by n*delta_l/c, and the recombined outputs are photodetected. The
// sum/difference photocurrent fluctuations at sideband frequency Omega are
// linear combinations of the input and vacuum quadratures; at the operating
// point (carrier phase pi/2, sideband phase pi) the difference channel
// reads the input phase quadrature and the sum channel reads the vacuum
// level, while removing the input splitter gives balanced detection of the
// amplitude quadrature.

#include <cmath>
#include <complex>
#include <string>

#include "twinbeam/covariance.hpp"
#include "twinbeam/errors.hpp"

namespace twinbeam {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Interferometer geometry and operating phases.
struct MzConfig {
    double delta_l_m = 48.0;            // arm-length difference
    double refractive_index = 1.55;     // group index of the arm fiber
    double carrier_phase_rad = M_PI_2;  // long-minus-short carrier phase at the output splitter
    bool input_splitter_present = true; // false = balanced detection of the bare input
    double splitter_reflectivity = 0.5; // power reflectivity of both splitters
    double classical_amplitude = 1.0;   // mean amplitude a of the input mode
    double theta_tolerance_rad = 0.05;  // accepted |theta - pi| at the phase operating point
};

// Sum/difference photocurrent variances at one sideband frequency, in
// units of a^2 times the QNL.
struct PhotocurrentSpectra {
    double sum_variance = 0.0;
    double diff_variance = 0.0;
};

// Complex weights of (X_in, Y_in, X_vac, Y_vac) in a photocurrent channel.
struct MzChannelCoefficients {
    std::complex<double> xa{};
    std::complex<double> ya{};
    std::complex<double> xv{};
    std::complex<double> yv{};
};

struct MzCoefficients {
    MzChannelCoefficients sum;
    MzChannelCoefficients diff;
};

enum class MzMode { amplitude, phase };
enum class CombinerSign { plus, minus };

inline void validate(const MzConfig& cfg) {
    if (!(cfg.delta_l_m > 0.0))
        throw ValidationError("delta_l_m must be > 0, got " + detail::fmt(cfg.delta_l_m));
    if (!(cfg.refractive_index >= 1.0))
        throw ValidationError("refractive_index must be >= 1, got " +
                              detail::fmt(cfg.refractive_index));
    if (!(cfg.splitter_reflectivity >= 0.0 && cfg.splitter_reflectivity <= 1.0))
        throw ValidationError("splitter_reflectivity must be in [0,1], got " +
                              detail::fmt(cfg.splitter_reflectivity));
    if (!(cfg.classical_amplitude >= 0.0))
        throw ValidationError("classical_amplitude must be >= 0, got " +
                              detail::fmt(cfg.classical_amplitude));
    if (!(cfg.theta_tolerance_rad > 0.0))
        throw ValidationError("theta_tolerance_rad must be > 0, got " +
                              detail::fmt(cfg.theta_tolerance_rad));
}

inline double wrap_angle(double x) {
    double w = std::fmod(x, 2.0 * M_PI);
    if (w < 0.0) w += 2.0 * M_PI;
    return w;
}

// Distance between two angles on the circle, in [0, pi].
inline double angle_distance(double a, double b) {
    const double d = wrap_angle(a - b);
    return std::min(d, 2.0 * M_PI - d);
}

// Sideband phase theta = Omega * n * delta_l / c, unwrapped.
inline double sideband_phase(const MzConfig& cfg, double sideband_hz) {
    validate(cfg);
    if (!(sideband_hz >= 0.0))
        throw ValidationError("sideband frequency must be >= 0, got " + detail::fmt(sideband_hz));
    return 2.0 * M_PI * sideband_hz * cfg.refractive_index * cfg.delta_l_m / kSpeedOfLight;
}

inline MzMode mz_mode(const MzConfig& cfg) {
    return cfg.input_splitter_present ? MzMode::phase : MzMode::amplitude;
}

// Phase mode requires carrier phase pi/2 and sideband phase pi, both
// within theta_tolerance (mod 2 pi). Amplitude mode has no phase condition.
inline void validate_operating_point(const MzConfig& cfg, double sideband_hz) {
    validate(cfg);
    if (!cfg.input_splitter_present) return;
    const double dphi = angle_distance(cfg.carrier_phase_rad, M_PI_2);
    if (dphi > cfg.theta_tolerance_rad)
        throw OperatingPointError("carrier phase off the pi/2 operating point by " +
                                  detail::fmt(dphi) + " rad (tolerance " +
                                  detail::fmt(cfg.theta_tolerance_rad) + ")");
    const double theta = sideband_phase(cfg, sideband_hz);
    const double dth = angle_distance(theta, M_PI);
    if (dth > cfg.theta_tolerance_rad)
        throw OperatingPointError("sideband phase theta = " + detail::fmt(theta) +
                                  " rad deviates from pi by " + detail::fmt(dth) +
                                  " rad (tolerance " + detail::fmt(cfg.theta_tolerance_rad) + ")");
}

// Exact linearized propagation of the carrier and both sidebands through
// input splitter, unequal arms, and output splitter. Returns the complex
// quadrature weights of each photocurrent channel; variances follow as
// |weight|^2 sums because the two input modes are independent.
inline MzCoefficients sideband_coefficients(const MzConfig& cfg, double sideband_hz) {
    validate(cfg);
    using cplx = std::complex<double>;
    const double theta = sideband_phase(cfg, sideband_hz);
    const double phi = cfg.carrier_phase_rad;
    const double a = cfg.classical_amplitude;
    const double t = std::sqrt(1.0 - cfg.splitter_reflectivity);
    const double r = std::sqrt(cfg.splitter_reflectivity);

    // 2x2 propagation of (input, vacuum) into the two arms. With the input
    // splitter removed, the input takes the short arm and the vacuum port
    // faces the long arm.
    double b1[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    if (cfg.input_splitter_present) {
        b1[0][0] = t;  b1[0][1] = r;
        b1[1][0] = r;  b1[1][1] = -t;
    }
    const double b2[2][2] = {{t, r}, {r, -t}};

    // Long arm phases: carrier e^{i phi}; upper sidebands e^{i(phi+theta)};
    // the lower-sideband creation components pick up e^{i(theta-phi)}.
    const cplx arm_carrier = std::exp(cplx(0.0, phi));
    const cplx arm_upper = std::exp(cplx(0.0, phi + theta));
    const cplx arm_lower_conj = std::exp(cplx(0.0, theta - phi));

    cplx mean[2], mu[2][2], ml[2][2];
    for (int out = 0; out < 2; ++out) {
        mean[out] = a * (b2[out][0] * b1[0][0] + b2[out][1] * arm_carrier * b1[1][0]);
        for (int in = 0; in < 2; ++in) {
            mu[out][in] = b2[out][0] * b1[0][in] + b2[out][1] * arm_upper * b1[1][in];
            ml[out][in] = b2[out][0] * b1[0][in] + b2[out][1] * arm_lower_conj * b1[1][in];
        }
    }

    // Photocurrent fluctuation of output `out`:
    //   dn = conj(mean) * db(+Omega) + mean * db_dagger(-Omega)
    // expanded over X = A+ + A-, Y = -i(A+ - A-) of each input mode.
    MzChannelCoefficients ch[2];
    for (int out = 0; out < 2; ++out) {
        const cplx cs = std::conj(mean[out]);
        const cplx cxa = 0.5 * (cs * mu[out][0] + mean[out] * ml[out][0]);
        const cplx cya = cplx(0.0, 0.5) * (cs * mu[out][0] - mean[out] * ml[out][0]);
        const cplx cxv = 0.5 * (cs * mu[out][1] + mean[out] * ml[out][1]);
        const cplx cyv = cplx(0.0, 0.5) * (cs * mu[out][1] - mean[out] * ml[out][1]);
        ch[out] = MzChannelCoefficients{cxa, cya, cxv, cyv};
    }

    MzCoefficients co;
    co.sum = MzChannelCoefficients{ch[0].xa + ch[1].xa, ch[0].ya + ch[1].ya,
                                   ch[0].xv + ch[1].xv, ch[0].yv + ch[1].yv};
    co.diff = MzChannelCoefficients{ch[0].xa - ch[1].xa, ch[0].ya - ch[1].ya,
                                    ch[0].xv - ch[1].xv, ch[0].yv - ch[1].yv};
    return co;
}

namespace detail {

inline double channel_variance(const MzChannelCoefficients& c, double vx, double vy) {
    return std::norm(c.xa) * vx + std::norm(c.ya) * vy + std::norm(c.xv) + std::norm(c.yv);
}

inline double channel_qnl(const MzChannelCoefficients& c) {
    return std::norm(c.xa) + std::norm(c.ya) + std::norm(c.xv) + std::norm(c.yv);
}

}  // namespace detail

// Sum/difference photocurrent spectra for one bright input with quadrature
// variances (input_x_var, input_y_var); the vacuum port is fixed at 1.
inline PhotocurrentSpectra transfer(const MzConfig& cfg, double input_x_var, double input_y_var,
                                    double sideband_hz) {
    if (!(input_x_var > 0.0))
        throw ValidationError("input_x_var must be > 0, got " + detail::fmt(input_x_var));
    if (!(input_y_var > 0.0))
        throw ValidationError("input_y_var must be > 0, got " + detail::fmt(input_y_var));
    const MzCoefficients co = sideband_coefficients(cfg, sideband_hz);
    PhotocurrentSpectra out;
    out.sum_variance = detail::channel_variance(co.sum, input_x_var, input_y_var);
    out.diff_variance = detail::channel_variance(co.diff, input_x_var, input_y_var);
    return out;
}

// Calibration channel: the photocurrent combination that reads the vacuum
// level regardless of the input state, a^2 * 1 in QNL units.
inline double qnl_reference(const MzConfig& cfg, double sideband_hz) {
    validate_operating_point(cfg, sideband_hz);
    return cfg.classical_amplitude * cfg.classical_amplitude;
}

// Measure a two-mode state with one interferometer per beam and an RF
// power combiner. Phase mode (input splitters present, pi/2 / pi operating
// point) combines the difference channels; amplitude mode (splitters
// removed) combines the sum channels. The result is normalized to the QNL
// of the same combined channel, so amplitude/minus returns V X- and
// phase/plus returns V Y+ of the input state at exact operating points.
inline double measure_twin_beams(const TwoModeCovariance& cm, const MzConfig& cfg1,
                                 const MzConfig& cfg2, CombinerSign sign) {
    if (mz_mode(cfg1) != mz_mode(cfg2))
        throw OperatingPointError(
            "the two interferometers are in different modes (one input splitter present, one "
            "removed)");
    const double f = cm.analysis_frequency_hz;
    validate_operating_point(cfg1, f);
    validate_operating_point(cfg2, f);
    if (!(cfg1.classical_amplitude > 0.0) || !(cfg2.classical_amplitude > 0.0))
        throw ValidationError("classical_amplitude must be > 0 to measure a beam");
    validate_physical(cm);

    const bool phase_mode = mz_mode(cfg1) == MzMode::phase;
    const MzCoefficients co1 = sideband_coefficients(cfg1, f);
    const MzCoefficients co2 = sideband_coefficients(cfg2, f);
    const MzChannelCoefficients& c1 = phase_mode ? co1.diff : co1.sum;
    const MzChannelCoefficients b2 = [&] {
        MzChannelCoefficients c = phase_mode ? co2.diff : co2.sum;
        if (sign == CombinerSign::minus) {
            c.xa = -c.xa; c.ya = -c.ya; c.xv = -c.xv; c.yv = -c.yv;
        }
        return c;
    }();

    // Combined channel K = c1.(X1,Y1,Xv1,Yv1) + (+/-) c2.(X2,Y2,Xv2,Yv2).
    // The vacuum ports of the two interferometers are independent of each
    // other and of the beams, so only the beam-beam cross terms use cm.
    const Mat4& s = cm.entries;
    const auto re = [](std::complex<double> u, std::complex<double> v) {
        return u.real() * v.real() + u.imag() * v.imag();  // Re(u * conj(v))
    };
    double var = re(c1.xa, c1.xa) * s(0, 0) + re(c1.ya, c1.ya) * s(1, 1) +
                 2.0 * re(c1.xa, c1.ya) * s(0, 1);
    var += re(b2.xa, b2.xa) * s(2, 2) + re(b2.ya, b2.ya) * s(3, 3) +
           2.0 * re(b2.xa, b2.ya) * s(2, 3);
    var += 2.0 * (re(c1.xa, b2.xa) * s(0, 2) + re(c1.xa, b2.ya) * s(0, 3) +
                  re(c1.ya, b2.xa) * s(1, 2) + re(c1.ya, b2.ya) * s(1, 3));
    var += std::norm(c1.xv) + std::norm(c1.yv) + std::norm(b2.xv) + std::norm(b2.yv);

    const double qnl = detail::channel_qnl(c1) + detail::channel_qnl(b2);
    return var / qnl;
}

}  // namespace twinbeam
