#pragma once

// Two-mode Gaussian sideband states: covariance matrices over the
// quadrature basis (X1, Y1, X2, Y2), normalized so a vacuum/coherent mode
// has variance 1 (the quantum noise limit). Combined ± variances, the
// inseparability criterion, and the passive transformations (loss,
// beamsplitter) that the rest of the simulator composes.

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "twinbeam/errors.hpp"

namespace twinbeam {

inline constexpr double kSymmetryTol = 1e-12;       // matrix symmetry
inline constexpr double kPsdTol = 1e-10;            // min eigenvalue floor
inline constexpr double kHeisenbergTol = 1e-9;      // symplectic eigenvalue floor

// Small fixed-size real matrix, row-major.
struct Mat4 {
    std::array<double, 16> a{};

    double& operator()(int i, int j) { return a[static_cast<size_t>(4 * i + j)]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(4 * i + j)]; }

    static Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Mat4 operator*(const Mat4& lhs, const Mat4& rhs) {
    Mat4 out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += lhs(i, k) * rhs(k, j);
            out(i, j) = s;
        }
    return out;
}

inline Mat4 transposed(const Mat4& m) {
    Mat4 out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out(i, j) = m(j, i);
    return out;
}

// Quadrature covariance matrix of a two-mode state at one sideband
// analysis frequency. Entries are dimensionless QNL units.
struct TwoModeCovariance {
    Mat4 entries;
    double analysis_frequency_hz = 0.0;
};

// The four combined variances V X± = ½<(δX1 ± δX2)²>, V Y± likewise.
struct CombinedVariances {
    double vx_plus = 1.0;
    double vx_minus = 1.0;
    double vy_plus = 1.0;
    double vy_minus = 1.0;
};

struct SymplecticEigenvalues {
    double nu_min = 1.0;
    double nu_max = 1.0;
};

// Inseparability sums V X∓ + V Y±; entangled when either falls below 2.
struct DuanResult {
    double value_corr = 2.0;      // V X− + V Y+
    double value_anticorr = 2.0;  // V X+ + V Y−
    bool entangled = false;
};

namespace detail {

// Eigenvalues of a symmetric 4x4 by cyclic Jacobi sweeps, ascending.
inline std::array<double, 4> jacobi_eigenvalues(Mat4 m) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += m(p, q) * m(p, q);
        if (off < 1e-30) break;
        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                if (m(p, q) == 0.0) continue;
                const double tau = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < 4; ++k) {
                    const double mkp = m(k, p);
                    const double mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < 4; ++k) {
                    const double mpk = m(p, k);
                    const double mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }
    std::array<double, 4> ev{m(0, 0), m(1, 1), m(2, 2), m(3, 3)};
    for (int i = 1; i < 4; ++i)
        for (int j = i; j > 0 && ev[j - 1] > ev[j]; --j) std::swap(ev[j - 1], ev[j]);
    return ev;
}

inline double det2(double a, double b, double c, double d) { return a * d - b * c; }

// Lower-triangular Cholesky factor; false when a pivot is not positive.
inline bool cholesky4(const Mat4& m, Mat4& lower) {
    lower = Mat4{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            if (i == j) {
                if (!(s > 0.0)) return false;
                lower(i, i) = std::sqrt(s);
            } else {
                lower(i, j) = s / lower(j, j);
            }
        }
    }
    return true;
}

inline double det4(const Mat4& m) {
    double det = 0.0;
    for (int c0 = 0; c0 < 4; ++c0) {
        double sub[9];
        int idx = 0;
        for (int i = 1; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (j != c0) sub[idx++] = m(i, j);
        const double minor = sub[0] * (sub[4] * sub[8] - sub[5] * sub[7]) -
                             sub[1] * (sub[3] * sub[8] - sub[5] * sub[6]) +
                             sub[2] * (sub[3] * sub[7] - sub[4] * sub[6]);
        det += ((c0 % 2 == 0) ? 1.0 : -1.0) * m(0, c0) * minor;
    }
    return det;
}

}  // namespace detail

// Symplectic eigenvalues (nu_min, nu_max). For positive definite matrices
// they are computed as singular values of L^T J L with sigma = L L^T,
// which stays accurate when the two eigenvalues degenerate at 1; the
// invariant-based closed form (Delta = det A + det B + 2 det C together
// with det sigma) covers the remaining edge cases.
inline SymplecticEigenvalues symplectic_eigenvalues(const TwoModeCovariance& cm) {
    const Mat4& m = cm.entries;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (std::abs(m(i, j) - m(j, i)) > kSymmetryTol)
                throw PhysicalityError("covariance matrix is not symmetric: |m(" +
                                       std::to_string(i) + "," + std::to_string(j) + ") - m(" +
                                       std::to_string(j) + "," + std::to_string(i) +
                                       ")| = " + detail::fmt(std::abs(m(i, j) - m(j, i))));
    Mat4 lower;
    if (detail::cholesky4(m, lower)) {
        Mat4 j4;  // symplectic form, (X1, Y1, X2, Y2) basis
        j4(0, 1) = 1.0; j4(1, 0) = -1.0;
        j4(2, 3) = 1.0; j4(3, 2) = -1.0;
        const Mat4 a = transposed(lower) * j4 * lower;  // antisymmetric
        const Mat4 gram = transposed(a) * a;            // symmetric PSD
        const auto ev = detail::jacobi_eigenvalues(gram);
        SymplecticEigenvalues nu;
        nu.nu_min = std::sqrt(std::max(0.5 * (ev[0] + ev[1]), 0.0));
        nu.nu_max = std::sqrt(std::max(0.5 * (ev[2] + ev[3]), 0.0));
        return nu;
    }
    const double det_a = detail::det2(m(0, 0), m(0, 1), m(1, 0), m(1, 1));
    const double det_b = detail::det2(m(2, 2), m(2, 3), m(3, 2), m(3, 3));
    const double det_c = detail::det2(m(0, 2), m(0, 3), m(1, 2), m(1, 3));
    const double delta = det_a + det_b + 2.0 * det_c;
    const double det_s = detail::det4(m);
    const double disc = std::max(delta * delta - 4.0 * det_s, 0.0);
    const double root = std::sqrt(disc);
    SymplecticEigenvalues nu;
    nu.nu_min = std::sqrt(std::max((delta - root) / 2.0, 0.0));
    nu.nu_max = std::sqrt(std::max((delta + root) / 2.0, 0.0));
    return nu;
}

// Throws PhysicalityError naming the first violated invariant:
// symmetry within 1e-12, positive semidefiniteness, and symplectic
// eigenvalues >= 1 (the uncertainty principle with vacuum variance 1).
inline void validate_physical(const TwoModeCovariance& cm) {
    const Mat4& m = cm.entries;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (std::abs(m(i, j) - m(j, i)) > kSymmetryTol)
                throw PhysicalityError(
                    "covariance matrix is not symmetric: |m(" + std::to_string(i) + "," +
                    std::to_string(j) + ") - m(" + std::to_string(j) + "," + std::to_string(i) +
                    ")| = " + detail::fmt(std::abs(m(i, j) - m(j, i))));
    const auto ev = detail::jacobi_eigenvalues(m);
    if (ev[0] < -kPsdTol)
        throw PhysicalityError("covariance matrix is not positive semidefinite: min eigenvalue = " +
                               detail::fmt(ev[0]));
    const auto nu = symplectic_eigenvalues(cm);
    if (nu.nu_min < 1.0 - kHeisenbergTol)
        throw PhysicalityError(
            "state violates the uncertainty principle: symplectic eigenvalues = (" +
            detail::fmt(nu.nu_min) + ", " + detail::fmt(nu.nu_max) + "), both must be >= 1");
}

// Positivity plus the uncertainty products of the ± superposition modes.
inline void validate(const CombinedVariances& cv) {
    const struct { const char* name; double v; } fields[] = {
        {"vx_plus", cv.vx_plus}, {"vx_minus", cv.vx_minus},
        {"vy_plus", cv.vy_plus}, {"vy_minus", cv.vy_minus}};
    for (const auto& f : fields)
        if (!(f.v > 0.0))
            throw ValidationError(std::string("combined variance ") + f.name +
                                  " must be > 0, got " + detail::fmt(f.v));
    if (cv.vx_plus * cv.vy_plus < 1.0 - kHeisenbergTol)
        throw PhysicalityError("vx_plus * vy_plus = " + detail::fmt(cv.vx_plus * cv.vy_plus) +
                               " violates the uncertainty product >= 1 of the + mode");
    if (cv.vx_minus * cv.vy_minus < 1.0 - kHeisenbergTol)
        throw PhysicalityError("vx_minus * vy_minus = " + detail::fmt(cv.vx_minus * cv.vy_minus) +
                               " violates the uncertainty product >= 1 of the - mode");
}

// V X± = ½(V X1 + V X2 ± 2 Cov(X1,X2)), V Y± likewise.
inline CombinedVariances combined_variances(const TwoModeCovariance& cm) {
    validate_physical(cm);
    const Mat4& m = cm.entries;
    CombinedVariances cv;
    cv.vx_plus = 0.5 * (m(0, 0) + m(2, 2) + 2.0 * m(0, 2));
    cv.vx_minus = 0.5 * (m(0, 0) + m(2, 2) - 2.0 * m(0, 2));
    cv.vy_plus = 0.5 * (m(1, 1) + m(3, 3) + 2.0 * m(1, 3));
    cv.vy_minus = 0.5 * (m(1, 1) + m(3, 3) - 2.0 * m(1, 3));
    return cv;
}

// Inverse of combined_variances under the beam-symmetric, zero X-Y
// cross-correlation assumption: both beams get the same single-beam
// variances and the ± split fixes the cross covariances.
inline TwoModeCovariance build_covariance(double vx_plus, double vx_minus, double vy_plus,
                                          double vy_minus, double analysis_frequency_hz = 0.0) {
    const struct { const char* name; double v; } fields[] = {
        {"vx_plus", vx_plus}, {"vx_minus", vx_minus}, {"vy_plus", vy_plus}, {"vy_minus", vy_minus}};
    for (const auto& f : fields)
        if (!(f.v > 0.0) || !std::isfinite(f.v))
            throw ValidationError(std::string("combined variance ") + f.name +
                                  " must be finite and > 0, got " + detail::fmt(f.v));
    TwoModeCovariance cm;
    cm.analysis_frequency_hz = analysis_frequency_hz;
    Mat4& m = cm.entries;
    const double vx = 0.5 * (vx_plus + vx_minus);
    const double cx = 0.5 * (vx_plus - vx_minus);
    const double vy = 0.5 * (vy_plus + vy_minus);
    const double cy = 0.5 * (vy_plus - vy_minus);
    m(0, 0) = vx; m(2, 2) = vx; m(0, 2) = cx; m(2, 0) = cx;
    m(1, 1) = vy; m(3, 3) = vy; m(1, 3) = cy; m(3, 1) = cy;
    validate_physical(cm);
    return cm;
}

// Eq.-style sufficient criterion: entangled iff V X∓ + V Y± < 2 for either
// pairing, strict inequality at the boundary.
inline DuanResult duan_criterion(const CombinedVariances& cv) {
    validate(cv);
    DuanResult r;
    r.value_corr = cv.vx_minus + cv.vy_plus;
    r.value_anticorr = cv.vx_plus + cv.vy_minus;
    r.entangled = std::min(r.value_corr, r.value_anticorr) < 2.0;
    return r;
}

// Vacuum-admixture loss channel: per mode, V -> t V + (1-t) I; cross
// blocks scale by sqrt(t1 t2).
inline TwoModeCovariance apply_loss(const TwoModeCovariance& cm, double t1, double t2) {
    if (!(t1 >= 0.0 && t1 <= 1.0))
        throw ValidationError("transmittance t1 must be in [0,1], got " + detail::fmt(t1));
    if (!(t2 >= 0.0 && t2 <= 1.0))
        throw ValidationError("transmittance t2 must be in [0,1], got " + detail::fmt(t2));
    const double g[4] = {t1, t1, t2, t2};
    TwoModeCovariance out = cm;
    Mat4& m = out.entries;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = std::sqrt(g[i] * g[j]) * cm.entries(i, j);
    for (int i = 0; i < 4; ++i) m(i, i) += 1.0 - g[i];
    return out;
}

// Row-major CSV dump of the matrix entries, one matrix row per line.
inline void write_covariance_csv(const TwoModeCovariance& cm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.12g", cm.entries(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// Two-mode beamsplitter as a symplectic congruence S sigma S^T.
// Power reflectivity r; phi is the phase picked up by the transferred
// amplitude, acting as an X-Y rotation on the coupled block.
inline TwoModeCovariance beamsplitter(const TwoModeCovariance& cm, double reflectivity,
                                      double phi) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0))
        throw ValidationError("reflectivity must be in [0,1], got " + detail::fmt(reflectivity));
    const double tau = std::sqrt(1.0 - reflectivity);
    const double rho = std::sqrt(reflectivity);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    Mat4 sp;
    sp(0, 0) = tau;            sp(1, 1) = tau;
    sp(2, 2) = tau;            sp(3, 3) = tau;
    sp(0, 2) = rho * c;        sp(0, 3) = -rho * s;   // +rho R(phi)
    sp(1, 2) = rho * s;        sp(1, 3) = rho * c;
    sp(2, 0) = -rho * c;       sp(2, 1) = -rho * s;   // -rho R(-phi)
    sp(3, 0) = rho * s;        sp(3, 1) = -rho * c;
    TwoModeCovariance out = cm;
    out.entries = sp * cm.entries * transposed(sp);
    // Re-symmetrize roundoff so chained congruences stay within tolerance.
    Mat4& m = out.entries;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    return out;
}

}  // namespace twinbeam
