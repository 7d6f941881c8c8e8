#include <doctest.h>

#include <cmath>
#include <string>

#include "test_support.hpp"
#include "twinbeam/nopo.hpp"

using namespace twinbeam;

namespace {
bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }
}

TEST_CASE("pump parameter") {
    NopoParams p;
    p.pump_power_mw = 130.0;
    p.threshold_power_mw = 130.0;
    CHECK(pump_parameter(p) == 1.0);
    p.pump_power_mw = 195.0;
    CHECK(near(pump_parameter(p), 1.224744871391589, 1e-12));  // rounds to 1.22
    p.pump_power_mw = 4.0 * 130.0;
    CHECK(pump_parameter(p) == 2.0);
    p.threshold_power_mw = 0.0;
    CHECK_THROWS_AS(pump_parameter(p), ValidationError);
}

TEST_CASE("squeezed variances at the reference operating point") {
    const NopoParams p;  // defaults are the reference parameters
    const SqueezedVariances v = squeezed_variances(p, 2.0e6);

    // hand evaluation of the two spectra
    const double gain = 0.90 * 0.81 * 0.81 * 0.88;
    const double fb2 = (2.0e6 / 15.4e6) * (2.0e6 / 15.4e6);
    const double sigma2 = 195.0 / 130.0;
    CHECK(near(v.vx_minus, 1.0 - gain / (1.0 + fb2), 1e-14));
    CHECK(near(v.vy_plus, 1.0 - gain / (sigma2 + fb2), 1e-14));
    CHECK(near(v.vx_minus, 0.489, 5e-4));
    CHECK(near(v.vy_plus, 0.657, 5e-4));
    CHECK(near(variance_to_db(v.vx_minus), -3.11, 0.005));
    CHECK(near(variance_to_db(v.vy_plus), -1.82, 0.005));
}

TEST_CASE("squeezed variances limits") {
    SUBCASE("no nonlinear gain leaves the QNL plus excess noise") {
        NopoParams p;
        p.eta = 0.0;
        p.excess_phase_noise = 0.07;
        const SqueezedVariances v = squeezed_variances(p, 2.0e6);
        CHECK(v.vx_minus == 1.0);
        CHECK(near(v.vy_plus, 1.07, 1e-15));
    }
    SUBCASE("correlations vanish far outside the cavity bandwidth") {
        NopoParams p;
        const SqueezedVariances v = squeezed_variances(p, 1.0e13);
        CHECK(near(v.vx_minus, 1.0, 1e-10));
        CHECK(near(v.vy_plus, 1.0, 1e-10));
    }
    SUBCASE("negative sideband frequency is rejected") {
        CHECK_THROWS_AS(squeezed_variances(NopoParams{}, -1.0), ValidationError);
    }
}

TEST_CASE("phase-matching window") {
    const NopoParams p;  // band [-83.2 GHz, 975 GHz], softness 50 GHz
    CHECK(phasematch_factor(Detuning{0.0}, p) == 1.0);
    CHECK(phasematch_factor(Detuning{p.band_high_hz}, p) == 1.0);  // edge inclusive
    CHECK(phasematch_factor(Detuning{p.band_low_hz}, p) == 1.0);
    CHECK(phasematch_factor(Detuning{p.band_low_hz - 10.0 * p.band_softness_hz}, p) < 0.01);
    CHECK(phasematch_factor(Detuning{p.band_low_hz - p.band_softness_hz}, p) == 0.0);
    CHECK(near(phasematch_factor(Detuning{p.band_high_hz + 0.5 * p.band_softness_hz}, p), 0.5,
               1e-12));
    SUBCASE("monotone on each side of the band") {
        double prev = 1.0;
        for (int i = 1; i <= 20; ++i) {
            const double w = phasematch_factor(
                Detuning{p.band_high_hz + i * p.band_softness_hz / 20.0}, p);
            CHECK(w <= prev + 1e-15);
            prev = w;
        }
    }
}

TEST_CASE("twin beam covariance composition") {
    const NopoParams p;
    SUBCASE("in-band state reproduces the duan sum of the spectra") {
        const TwoModeCovariance cm = twin_beam_covariance(p, 2.0e6, Detuning{0.0});
        const DuanResult duan = duan_criterion(combined_variances(cm));
        const SqueezedVariances v = squeezed_variances(p, 2.0e6);
        CHECK(near(duan.value_corr, v.vx_minus + v.vy_plus, 1e-12));
        CHECK(near(duan.value_corr, 1.146, 5e-4));
        CHECK(duan.entangled);
        CHECK(cm.analysis_frequency_hz == 2.0e6);
    }
    SUBCASE("far-detuned beams decohere to vacuum") {
        const TwoModeCovariance cm =
            twin_beam_covariance(p, 2.0e6, Detuning{p.band_high_hz + 2.0 * p.band_softness_hz});
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                CHECK(near(cm.entries(i, j), i == j ? 1.0 : 0.0, 1e-12));
    }
    SUBCASE("excess phase noise reproduces the measured phase level") {
        NopoParams pe = p;
        pe.excess_phase_noise = 0.051;
        const CombinedVariances cv =
            combined_variances(twin_beam_covariance(pe, 2.0e6, Detuning{0.0}));
        CHECK(near(cv.vy_plus, 0.708, 5e-4));
        CHECK(near(variance_to_db(cv.vy_plus), -1.50, 0.005));
        // minimum-uncertainty completion includes the excess term
        CHECK(near(cv.vx_plus * cv.vy_plus, 1.0, 1e-12));
    }
    SUBCASE("anti-squeeze excess inflates only the completed variances") {
        NopoParams pe = p;
        pe.antisqueeze_excess = 1.5;
        const CombinedVariances base =
            combined_variances(twin_beam_covariance(p, 2.0e6, Detuning{0.0}));
        const CombinedVariances inflated =
            combined_variances(twin_beam_covariance(pe, 2.0e6, Detuning{0.0}));
        CHECK(near(inflated.vx_minus, base.vx_minus, 1e-13));
        CHECK(near(inflated.vy_plus, base.vy_plus, 1e-13));
        CHECK(near(inflated.vx_plus, 1.5 * base.vx_plus, 1e-12));
        CHECK(near(inflated.vy_minus, 1.5 * base.vy_minus, 1e-12));
    }
}

TEST_CASE("squeezing is monotone in the efficiency chain") {
    const double grid[] = {0.2, 0.5, 0.7, 0.9, 1.0};
    const auto check_channel = [&](auto setter) {
        double prev_vx = 2.0, prev_vy = 2.0;
        for (double g : grid) {
            NopoParams p;
            setter(p, g);
            const SqueezedVariances v = squeezed_variances(p, 2.0e6);
            CHECK(v.vx_minus <= prev_vx + 1e-15);
            CHECK(v.vy_plus <= prev_vy + 1e-15);
            prev_vx = v.vx_minus;
            prev_vy = v.vy_plus;
        }
    };
    check_channel([](NopoParams& p, double g) { p.eta = g; });
    check_channel([](NopoParams& p, double g) { p.zeta = g; });
    check_channel([](NopoParams& p, double g) { p.xi = g; });
}

TEST_CASE("phase anticorrelation grows with pump power above threshold") {
    double prev = 0.0;
    for (double pump : {140.0, 170.0, 195.0, 260.0, 400.0}) {
        NopoParams p;
        p.pump_power_mw = pump;
        const SqueezedVariances v = squeezed_variances(p, 2.0e6);
        CHECK(v.vy_plus >= prev - 1e-15);
        prev = v.vy_plus;
    }
}

TEST_CASE("dB conversions round-trip") {
    testsupport::Rand rnd(31);
    for (int i = 0; i < 100; ++i) {
        const double db = rnd.uniform(-30.0, 10.0);
        CHECK(near(variance_to_db(db_to_variance(db)), db, 1e-12));
        const double s0 = rnd.uniform(0.5, 2.0);
        CHECK(near(variance_to_db(db_to_variance(db, s0), s0), db, 1e-12));
    }
    CHECK_THROWS_AS(variance_to_db(0.0), ValidationError);
    CHECK_THROWS_AS(variance_to_db(-1.0), ValidationError);
}

TEST_CASE("duan value is exactly flat across the phase-matching band") {
    const NopoParams p;
    const auto value = [&](double d) {
        return duan_criterion(combined_variances(twin_beam_covariance(p, 2.0e6, Detuning{d})))
            .value_corr;
    };
    const double ref = value(0.0);
    for (double d : {p.band_low_hz, -1.0e9, 5.0e6, 1.0e11, 8.6e11, p.band_high_hz})
        CHECK(value(d) == ref);
}

TEST_CASE("model states are physical across random parameters and detunings") {
    testsupport::Rand rnd(59);
    for (int i = 0; i < 300; ++i) {
        NopoParams p;
        p.eta = rnd.uniform(0.0, 1.0);
        p.zeta = rnd.uniform(0.0, 1.0);
        p.xi = rnd.uniform(0.0, 1.0);
        p.pump_power_mw = p.threshold_power_mw * rnd.uniform(1.01, 4.0);
        p.bandwidth_hz = rnd.uniform(5.0e6, 30.0e6);
        p.excess_phase_noise = rnd.uniform(0.0, 0.2);
        p.antisqueeze_excess = rnd.uniform(1.0, 2.0);
        const double d = rnd.uniform(-300.0e9, 1.3e12);
        const double f = rnd.uniform(0.0, 20.0e6);
        // construction validates symmetry, positivity, and the
        // uncertainty principle internally
        CHECK_NOTHROW(twin_beam_covariance(p, f, Detuning{d}));
    }
}

TEST_CASE("parameter validation names the offending field") {
    NopoParams p;
    p.zeta = 1.2;
    try {
        validate(p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("zeta") != std::string::npos);
    }
    p = NopoParams{};
    p.pump_power_mw = 100.0;  // below threshold
    CHECK_THROWS_AS(validate(p), ValidationError);
    p = NopoParams{};
    p.band_low_hz = 1.0e9;
    p.band_high_hz = -1.0e9;
    CHECK_THROWS_AS(validate(p), ValidationError);
}
