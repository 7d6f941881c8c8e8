#pragma once

// Configuration ingestion, sweep orchestration, coexistence reporting,
// and file emission: the user-facing surface behind the CLI. The config
// file is JSON; every field is optional and defaults to the reference
// operating point, so a run with no config reproduces the headline
// numbers. Reruns with identical config and seed emit identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinbeam/coherence.hpp"
#include "twinbeam/covariance.hpp"
#include "twinbeam/csv.hpp"
#include "twinbeam/errors.hpp"
#include "twinbeam/mach_zehnder.hpp"
#include "twinbeam/nopo.hpp"
#include "twinbeam/oracle.hpp"

namespace twinbeam {

struct SweepSettings {
    std::string variable = "detuning";
    double start_hz = 0.0;
    double stop_hz = 5.0e6;
    size_t points = 1001;
    std::string scale = "linear";  // "linear" | "log"
};

struct OracleConfig {
    bool enabled = false;
    size_t n_samples = 1u << 20;
    double sample_rate_hz = 80.0e6;
    uint64_t seed = 1;
    double rbw_hz = 30.0e3;
    double avg_halfwidth_hz = 1.25e6;
};

struct OutputConfig {
    std::string directory = "out";
    std::string format = "csv";  // "csv" | "gnuplot"
};

struct ExperimentConfig {
    NopoParams nopo;
    MzConfig mz1;
    MzConfig mz2;
    CoherenceParams coherence;
    double analysis_frequency_hz = 2.0e6;
    SweepSettings sweep;
    OracleConfig oracle;
    OutputConfig output;
};

struct SweepRow {
    double detuning_hz = 0.0;
    double visibility = 0.0;
    double vx_minus_db = 0.0;
    double vy_plus_db = 0.0;
    double duan_value = 2.0;
    bool entangled = false;
    bool has_oracle = false;
    double vx_minus_oracle_db = 0.0;
    double vy_plus_oracle_db = 0.0;
    double qnl_oracle_db = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

struct Interval {
    double low_hz = 0.0;
    double high_hz = 0.0;
    bool empty = true;
};

// Detuning regions: A carries both classical coherence and entanglement,
// B entanglement with vanished interference, C neither (outside the
// phase-matching roll-off).
struct CoexistenceReport {
    double vanish_threshold = kVisibilityVanishThreshold;
    double classical_halfwidth_hz = 0.0;  // |d| below this has visibility >= threshold
    Interval entangled;                   // contiguous entangled detuning interval
    Interval region_a;
    std::vector<Interval> region_b;
    double duan_in_band = 2.0;
    double vx_minus_db_in_band = 0.0;
    double vy_plus_db_in_band = 0.0;
    bool entangled_in_band = false;
};

namespace cfgdetail {

using nlohmann::json;

inline void expect_keys(const json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ParseError("unknown field '" + it.key() + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError("field '" + std::string(key) + "' in " + where + ": " + e.what());
    }
}

inline void read_nopo(const json& j, NopoParams& p) {
    expect_keys(j,
                {"eta", "zeta", "xi", "pump_power_mw", "threshold_power_mw", "bandwidth_hz",
                 "qnl", "linewidth_hz", "band_low_hz", "band_high_hz", "band_softness_hz",
                 "excess_phase_noise", "antisqueeze_excess"},
                "nopo");
    read(j, "eta", p.eta, "nopo");
    read(j, "zeta", p.zeta, "nopo");
    read(j, "xi", p.xi, "nopo");
    read(j, "pump_power_mw", p.pump_power_mw, "nopo");
    read(j, "threshold_power_mw", p.threshold_power_mw, "nopo");
    read(j, "bandwidth_hz", p.bandwidth_hz, "nopo");
    read(j, "qnl", p.qnl, "nopo");
    read(j, "linewidth_hz", p.linewidth_hz, "nopo");
    read(j, "band_low_hz", p.band_low_hz, "nopo");
    read(j, "band_high_hz", p.band_high_hz, "nopo");
    read(j, "band_softness_hz", p.band_softness_hz, "nopo");
    read(j, "excess_phase_noise", p.excess_phase_noise, "nopo");
    read(j, "antisqueeze_excess", p.antisqueeze_excess, "nopo");
}

inline void read_mz(const json& j, MzConfig& m, const std::string& where) {
    expect_keys(j,
                {"delta_l_m", "refractive_index", "carrier_phase_rad", "input_splitter_present",
                 "mode", "splitter_reflectivity", "classical_amplitude", "theta_tolerance_rad"},
                where);
    read(j, "delta_l_m", m.delta_l_m, where);
    read(j, "refractive_index", m.refractive_index, where);
    read(j, "carrier_phase_rad", m.carrier_phase_rad, where);
    read(j, "input_splitter_present", m.input_splitter_present, where);
    // "mode" mirrors the waveplate switch: phase keeps the input splitter
    // in place, amplitude removes it.
    if (j.contains("mode")) {
        if (j.contains("input_splitter_present"))
            throw ParseError("give either 'mode' or 'input_splitter_present' in " + where +
                             ", not both");
        std::string mode;
        read(j, "mode", mode, where);
        if (mode == "phase")
            m.input_splitter_present = true;
        else if (mode == "amplitude")
            m.input_splitter_present = false;
        else
            throw ParseError("field 'mode' in " + where + " must be 'amplitude' or 'phase', got '" +
                             mode + "'");
    }
    read(j, "splitter_reflectivity", m.splitter_reflectivity, where);
    read(j, "classical_amplitude", m.classical_amplitude, where);
    read(j, "theta_tolerance_rad", m.theta_tolerance_rad, where);
}

inline json nopo_to_json(const NopoParams& p) {
    return json{{"eta", p.eta},
                {"zeta", p.zeta},
                {"xi", p.xi},
                {"pump_power_mw", p.pump_power_mw},
                {"threshold_power_mw", p.threshold_power_mw},
                {"bandwidth_hz", p.bandwidth_hz},
                {"qnl", p.qnl},
                {"linewidth_hz", p.linewidth_hz},
                {"band_low_hz", p.band_low_hz},
                {"band_high_hz", p.band_high_hz},
                {"band_softness_hz", p.band_softness_hz},
                {"excess_phase_noise", p.excess_phase_noise},
                {"antisqueeze_excess", p.antisqueeze_excess}};
}

inline json mz_to_json(const MzConfig& m) {
    return json{{"delta_l_m", m.delta_l_m},
                {"refractive_index", m.refractive_index},
                {"carrier_phase_rad", m.carrier_phase_rad},
                {"input_splitter_present", m.input_splitter_present},
                {"splitter_reflectivity", m.splitter_reflectivity},
                {"classical_amplitude", m.classical_amplitude},
                {"theta_tolerance_rad", m.theta_tolerance_rad}};
}

}  // namespace cfgdetail

inline void validate(const ExperimentConfig& cfg) {
    validate(cfg.nopo);
    validate(cfg.mz1);
    validate(cfg.mz2);
    validate(cfg.coherence);
    if (!(cfg.analysis_frequency_hz > 0.0))
        throw ValidationError("analysis_frequency_hz must be > 0, got " +
                              detail::fmt(cfg.analysis_frequency_hz));
    if (cfg.sweep.variable != "detuning")
        throw ValidationError("sweep.variable must be 'detuning', got '" + cfg.sweep.variable +
                              "'");
    if (!(cfg.sweep.start_hz < cfg.sweep.stop_hz))
        throw ValidationError("sweep bounds must be ordered, got [" +
                              detail::fmt(cfg.sweep.start_hz) + ", " +
                              detail::fmt(cfg.sweep.stop_hz) + "]");
    if (cfg.sweep.points < 2) throw ValidationError("sweep.points must be >= 2");
    if (cfg.sweep.scale != "linear" && cfg.sweep.scale != "log")
        throw ValidationError("sweep.scale must be 'linear' or 'log', got '" + cfg.sweep.scale +
                              "'");
    if (cfg.output.format != "csv" && cfg.output.format != "gnuplot")
        throw ValidationError("output.format must be 'csv' or 'gnuplot', got '" +
                              cfg.output.format + "'");
    if (!is_power_of_two(cfg.oracle.n_samples) || cfg.oracle.n_samples < (1u << 16))
        throw ValidationError("oracle.n_samples must be a power of two >= 65536");
    if (!(cfg.oracle.sample_rate_hz > 0.0) || !(cfg.oracle.rbw_hz > 0.0))
        throw ValidationError("oracle.sample_rate_hz and oracle.rbw_hz must be > 0");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using nlohmann::json;
    ExperimentConfig cfg;
    cfgdetail::expect_keys(
        j, {"nopo", "mz1", "mz2", "coherence", "analysis_frequency_hz", "sweep", "oracle",
            "output"},
        "config root");
    if (j.contains("nopo")) cfgdetail::read_nopo(j.at("nopo"), cfg.nopo);
    if (j.contains("mz1")) cfgdetail::read_mz(j.at("mz1"), cfg.mz1, "mz1");
    if (j.contains("mz2")) cfgdetail::read_mz(j.at("mz2"), cfg.mz2, "mz2");
    // The coherence linewidth mirrors the source linewidth unless set.
    cfg.coherence.linewidth_hz = cfg.nopo.linewidth_hz;
    if (j.contains("coherence")) {
        const json& c = j.at("coherence");
        cfgdetail::expect_keys(c, {"linewidth_hz", "intensity1", "intensity2"}, "coherence");
        cfgdetail::read(c, "linewidth_hz", cfg.coherence.linewidth_hz, "coherence");
        cfgdetail::read(c, "intensity1", cfg.coherence.intensity1, "coherence");
        cfgdetail::read(c, "intensity2", cfg.coherence.intensity2, "coherence");
    }
    cfgdetail::read(j, "analysis_frequency_hz", cfg.analysis_frequency_hz, "config root");
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        cfgdetail::expect_keys(s, {"variable", "start_hz", "stop_hz", "points", "scale"}, "sweep");
        cfgdetail::read(s, "variable", cfg.sweep.variable, "sweep");
        cfgdetail::read(s, "start_hz", cfg.sweep.start_hz, "sweep");
        cfgdetail::read(s, "stop_hz", cfg.sweep.stop_hz, "sweep");
        cfgdetail::read(s, "points", cfg.sweep.points, "sweep");
        cfgdetail::read(s, "scale", cfg.sweep.scale, "sweep");
    }
    if (j.contains("oracle")) {
        const json& o = j.at("oracle");
        cfgdetail::expect_keys(
            o, {"enabled", "n_samples", "sample_rate_hz", "seed", "rbw_hz", "avg_halfwidth_hz"},
            "oracle");
        cfgdetail::read(o, "enabled", cfg.oracle.enabled, "oracle");
        cfgdetail::read(o, "n_samples", cfg.oracle.n_samples, "oracle");
        cfgdetail::read(o, "sample_rate_hz", cfg.oracle.sample_rate_hz, "oracle");
        cfgdetail::read(o, "seed", cfg.oracle.seed, "oracle");
        cfgdetail::read(o, "rbw_hz", cfg.oracle.rbw_hz, "oracle");
        cfgdetail::read(o, "avg_halfwidth_hz", cfg.oracle.avg_halfwidth_hz, "oracle");
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        cfgdetail::expect_keys(o, {"directory", "format"}, "output");
        cfgdetail::read(o, "directory", cfg.output.directory, "output");
        cfgdetail::read(o, "format", cfg.output.format, "output");
    }
    validate(cfg);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    auto in = csv::open_for_read(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_config(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    return json{
        {"nopo", cfgdetail::nopo_to_json(cfg.nopo)},
        {"mz1", cfgdetail::mz_to_json(cfg.mz1)},
        {"mz2", cfgdetail::mz_to_json(cfg.mz2)},
        {"coherence",
         json{{"linewidth_hz", cfg.coherence.linewidth_hz},
              {"intensity1", cfg.coherence.intensity1},
              {"intensity2", cfg.coherence.intensity2}}},
        {"analysis_frequency_hz", cfg.analysis_frequency_hz},
        {"sweep",
         json{{"variable", cfg.sweep.variable},
              {"start_hz", cfg.sweep.start_hz},
              {"stop_hz", cfg.sweep.stop_hz},
              {"points", cfg.sweep.points},
              {"scale", cfg.sweep.scale}}},
        {"oracle",
         json{{"enabled", cfg.oracle.enabled},
              {"n_samples", cfg.oracle.n_samples},
              {"sample_rate_hz", cfg.oracle.sample_rate_hz},
              {"seed", cfg.oracle.seed},
              {"rbw_hz", cfg.oracle.rbw_hz},
              {"avg_halfwidth_hz", cfg.oracle.avg_halfwidth_hz}}},
        {"output", json{{"directory", cfg.output.directory}, {"format", cfg.output.format}}}};
}

// Detuning grid. Linear spacing, or log spacing that handles signed
// ranges: magnitudes are log-spaced down to a 1 MHz anchor on each side
// of zero (with zero itself included when the range crosses it), since
// the interesting axis spans six orders of magnitude.
inline std::vector<double> make_detuning_grid(const SweepSettings& s) {
    if (!(s.start_hz < s.stop_hz)) throw ValidationError("sweep bounds must be ordered");
    if (s.points < 2) throw ValidationError("sweep.points must be >= 2");
    std::vector<double> grid;
    grid.reserve(s.points);
    if (s.scale == "linear") {
        const double step = (s.stop_hz - s.start_hz) / static_cast<double>(s.points - 1);
        for (size_t k = 0; k < s.points; ++k)
            grid.push_back(s.start_hz + static_cast<double>(k) * step);
        grid.back() = s.stop_hz;
        return grid;
    }
    const double anchor = 1.0e6;
    const auto log_span = [&](double lo, double hi, size_t n, std::vector<double>& out) {
        // log spacing of positive magnitudes [lo, hi]
        const double llo = std::log10(lo);
        const double lhi = std::log10(hi);
        for (size_t k = 0; k < n; ++k) {
            const double t = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
            out.push_back(std::pow(10.0, llo + t * (lhi - llo)));
        }
    };
    if (s.start_hz > 0.0) {
        log_span(s.start_hz, s.stop_hz, s.points, grid);
    } else if (s.stop_hz < 0.0) {
        std::vector<double> mags;
        log_span(-s.stop_hz, -s.start_hz, s.points, mags);
        for (auto it = mags.rbegin(); it != mags.rend(); ++it) grid.push_back(-*it);
    } else {
        // The range crosses zero: log-space the magnitudes down to the
        // anchor on each side, with one point at zero itself.
        const double neg_decades =
            -s.start_hz > anchor ? std::log10(-s.start_hz / anchor) : 0.0;
        const double pos_decades = s.stop_hz > anchor ? std::log10(s.stop_hz / anchor) : 0.0;
        if (neg_decades + pos_decades <= 0.0)
            throw ValidationError(
                "log-scale sweep bounds must extend beyond the 1 MHz anchor around zero");
        const size_t budget = s.points - 1;  // one point reserved for zero
        const size_t neg_points = static_cast<size_t>(std::llround(
            static_cast<double>(budget) * neg_decades / (neg_decades + pos_decades)));
        const size_t pos_points = budget - neg_points;
        if (neg_points > 0) {
            std::vector<double> mags;
            log_span(anchor, -s.start_hz, neg_points, mags);
            for (auto it = mags.rbegin(); it != mags.rend(); ++it) grid.push_back(-*it);
        }
        grid.push_back(0.0);
        if (pos_points > 0) log_span(anchor, s.stop_hz, pos_points, grid);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

namespace detail {

inline SweepRow analytic_row(const ExperimentConfig& cfg, double detuning_hz) {
    SweepRow row;
    row.detuning_hz = detuning_hz;
    CoherenceParams cp = cfg.coherence;
    cp.nu1_hz = detuning_hz;
    cp.nu2_hz = 0.0;
    row.visibility = visibility(cp);
    const TwoModeCovariance cm =
        twin_beam_covariance(cfg.nopo, cfg.analysis_frequency_hz, Detuning{detuning_hz});
    const CombinedVariances cv = combined_variances(cm);
    const DuanResult duan = duan_criterion(cv);
    row.vx_minus_db = variance_to_db(cv.vx_minus, cfg.nopo.qnl);
    row.vy_plus_db = variance_to_db(cv.vy_plus, cfg.nopo.qnl);
    row.duan_value = duan.value_corr;
    row.entangled = duan.entangled;
    return row;
}

}  // namespace detail

// Per-point interference visibility over the detuning grid (correlation
// columns are filled too; they are cheap and keep rows uniform).
inline SweepResult run_visibility_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    SweepResult result;
    for (double d : make_detuning_grid(cfg.sweep))
        result.rows.push_back(detail::analytic_row(cfg, d));
    return result;
}

// Analytic correlation spectra over the detuning grid, with optional
// Monte Carlo columns. Each oracle point derives its seed from the base
// seed and its grid index, so a parallel evaluation would merge to the
// same rows.
inline SweepResult run_correlation_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    SweepResult result;
    const auto grid = make_detuning_grid(cfg.sweep);
    for (size_t k = 0; k < grid.size(); ++k) {
        SweepRow row = detail::analytic_row(cfg, grid[k]);
        if (cfg.oracle.enabled) {
            OracleOptions opts;
            opts.n_samples = cfg.oracle.n_samples;
            opts.sample_rate_hz = cfg.oracle.sample_rate_hz;
            opts.seed = cfg.oracle.seed + static_cast<uint64_t>(k);
            opts.rbw_hz = cfg.oracle.rbw_hz;
            opts.analysis_frequency_hz = cfg.analysis_frequency_hz;
            opts.avg_halfwidth_hz = cfg.oracle.avg_halfwidth_hz;
            const OracleResult o = oracle_run(cfg.nopo, cfg.mz1, cfg.mz2, Detuning{grid[k]}, opts);
            row.has_oracle = true;
            row.vx_minus_oracle_db = o.vx_minus_db;
            row.vy_plus_oracle_db = o.vy_plus_db;
            row.qnl_oracle_db = o.qnl_db;
        }
        result.rows.push_back(row);
    }
    return result;
}

// Boundaries of the entangled detuning interval and of the classical
// coherence window, intersected into the named regions.
inline CoexistenceReport run_coexistence_report(const ExperimentConfig& cfg) {
    validate(cfg);
    CoexistenceReport rep;
    const double f0 = cfg.analysis_frequency_hz;

    const auto duan_at = [&](double d) {
        const CombinedVariances cv =
            combined_variances(twin_beam_covariance(cfg.nopo, f0, Detuning{d}));
        return duan_criterion(cv);
    };
    // Probe the flat in-band level at zero detuning, clamped into the band
    // in case the band does not straddle zero.
    const double probe = std::clamp(0.0, cfg.nopo.band_low_hz, cfg.nopo.band_high_hz);
    const DuanResult in_band = duan_at(probe);
    const CombinedVariances cv0 =
        combined_variances(twin_beam_covariance(cfg.nopo, f0, Detuning{probe}));
    rep.duan_in_band = in_band.value_corr;
    rep.vx_minus_db_in_band = variance_to_db(cv0.vx_minus, cfg.nopo.qnl);
    rep.vy_plus_db_in_band = variance_to_db(cv0.vy_plus, cfg.nopo.qnl);
    rep.entangled_in_band = in_band.entangled;

    // Classical window: balance * exp(-d^2 / (2 dnu^2)) >= threshold.
    const CoherenceParams& cp = cfg.coherence;
    const double balance = (cp.intensity1 + cp.intensity2) > 0.0
                               ? 2.0 * std::sqrt(cp.intensity1 * cp.intensity2) /
                                     (cp.intensity1 + cp.intensity2)
                               : 0.0;
    rep.classical_halfwidth_hz =
        balance > rep.vanish_threshold
            ? cp.linewidth_hz * std::sqrt(2.0 * std::log(balance / rep.vanish_threshold))
            : 0.0;

    if (rep.entangled_in_band) {
        // Entanglement dies where the phase-matching factor drops enough;
        // bisect the strict duan < 2 condition through each roll-off.
        const auto bisect_edge = [&](double inside, double outside) {
            double lo = inside, hi = outside;
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                if (duan_at(mid).entangled)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        };
        const double hi_outside = cfg.nopo.band_high_hz + cfg.nopo.band_softness_hz;
        const double lo_outside = cfg.nopo.band_low_hz - cfg.nopo.band_softness_hz;
        rep.entangled.empty = false;
        rep.entangled.high_hz = duan_at(hi_outside).entangled
                                    ? hi_outside
                                    : bisect_edge(cfg.nopo.band_high_hz, hi_outside);
        rep.entangled.low_hz = duan_at(lo_outside).entangled
                                   ? lo_outside
                                   : bisect_edge(cfg.nopo.band_low_hz, lo_outside);

        const double cw = rep.classical_halfwidth_hz;
        const double a_lo = std::max(rep.entangled.low_hz, -cw);
        const double a_hi = std::min(rep.entangled.high_hz, cw);
        if (cw > 0.0 && a_lo < a_hi) rep.region_a = Interval{a_lo, a_hi, false};
        if (rep.entangled.low_hz < -cw)
            rep.region_b.push_back(Interval{rep.entangled.low_hz, -cw, false});
        if (rep.entangled.high_hz > cw)
            rep.region_b.push_back(Interval{cw, rep.entangled.high_hz, false});
    }
    return rep;
}

inline nlohmann::json report_to_json(const CoexistenceReport& rep) {
    using nlohmann::json;
    const auto interval = [](const Interval& iv) {
        if (iv.empty) return json(nullptr);
        return json{{"low_hz", iv.low_hz}, {"high_hz", iv.high_hz}};
    };
    json b = json::array();
    for (const auto& iv : rep.region_b) b.push_back(interval(iv));
    return json{{"vanish_threshold", rep.vanish_threshold},
                {"classical_halfwidth_hz", rep.classical_halfwidth_hz},
                {"entangled_interval", interval(rep.entangled)},
                {"region_a_both", interval(rep.region_a)},
                {"region_b_quantum_only", b},
                {"duan_in_band", rep.duan_in_band},
                {"vx_minus_db_in_band", rep.vx_minus_db_in_band},
                {"vy_plus_db_in_band", rep.vy_plus_db_in_band},
                {"entangled_in_band", rep.entangled_in_band}};
}

namespace detail {

inline void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

struct TableWriter {
    std::ofstream out;
    bool gnuplot = false;
    char sep() const { return gnuplot ? ' ' : ','; }

    void header(const std::vector<std::string>& cols) {
        if (gnuplot) out << "# ";
        for (size_t i = 0; i < cols.size(); ++i) out << (i ? std::string(1, sep()) : "") << cols[i];
        out << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (size_t i = 0; i < vals.size(); ++i)
            out << (i ? std::string(1, sep()) : "") << csv::format_double(vals[i]);
        out << "\n";
    }
};

}  // namespace detail

enum class SweepKind { visibility, correlation };

// Writes the sweep table plus a manifest recording the fully resolved
// configuration, and returns the paths written. File contents depend only
// on the config and seed.
inline std::vector<std::string> emit_outputs(const SweepResult& result,
                                             const ExperimentConfig& cfg, SweepKind kind) {
    detail::ensure_directory(cfg.output.directory);
    const bool gp = cfg.output.format == "gnuplot";
    const std::string ext = gp ? ".dat" : ".csv";
    const std::string base = kind == SweepKind::visibility ? "visibility" : "correlation";
    const std::string table_path = cfg.output.directory + "/" + base + ext;

    detail::TableWriter w{csv::open_for_write(table_path), gp};
    if (kind == SweepKind::visibility) {
        w.header({"detuning_hz", "visibility"});
        for (const auto& r : result.rows) w.row({r.detuning_hz, r.visibility});
    } else {
        const bool oracle = !result.rows.empty() && result.rows.front().has_oracle;
        std::vector<std::string> cols = {"detuning_hz", "vx_minus_db", "vy_plus_db", "duan_value",
                                         "entangled"};
        if (oracle) {
            cols.push_back("vx_minus_oracle_db");
            cols.push_back("vy_plus_oracle_db");
            cols.push_back("qnl_oracle_db");
        }
        w.header(cols);
        for (const auto& r : result.rows) {
            std::vector<double> vals = {r.detuning_hz, r.vx_minus_db, r.vy_plus_db, r.duan_value,
                                        r.entangled ? 1.0 : 0.0};
            if (oracle) {
                vals.push_back(r.vx_minus_oracle_db);
                vals.push_back(r.vy_plus_oracle_db);
                vals.push_back(r.qnl_oracle_db);
            }
            w.row(vals);
        }
    }
    if (!w.out) throw IoError("write failed: " + table_path);
    w.out.close();

    const std::string manifest_path = cfg.output.directory + "/manifest.json";
    nlohmann::json manifest{{"command", base + "-sweep"},
                            {"config", config_to_json(cfg)},
                            {"outputs", {table_path}}};
    auto mout = csv::open_for_write(manifest_path);
    mout << manifest.dump(2) << "\n";
    if (!mout) throw IoError("write failed: " + manifest_path);
    return {table_path, manifest_path};
}

inline std::vector<std::string> emit_report(const CoexistenceReport& rep,
                                            const ExperimentConfig& cfg) {
    detail::ensure_directory(cfg.output.directory);
    const std::string path = cfg.output.directory + "/coexistence.json";
    auto out = csv::open_for_write(path);
    out << report_to_json(rep).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
    // in-band covariance matrix, row-major
    const std::string matrix_path = cfg.output.directory + "/covariance_in_band.csv";
    const double probe = std::clamp(0.0, cfg.nopo.band_low_hz, cfg.nopo.band_high_hz);
    write_covariance_csv(
        twin_beam_covariance(cfg.nopo, cfg.analysis_frequency_hz, Detuning{probe}), matrix_path);
    const std::string manifest_path = cfg.output.directory + "/manifest.json";
    nlohmann::json manifest{{"command", "coexistence-report"},
                            {"config", config_to_json(cfg)},
                            {"outputs", {path, matrix_path}}};
    auto mout = csv::open_for_write(manifest_path);
    mout << manifest.dump(2) << "\n";
    if (!mout) throw IoError("write failed: " + manifest_path);
    return {path, matrix_path, manifest_path};
}

// Single-point oracle-vs-analytic comparison, the `oracle-check` command.
struct OracleCheck {
    OracleResult oracle;
    double analytic_vx_minus_db = 0.0;
    double analytic_vy_plus_db = 0.0;
    double delta_vx_db = 0.0;
    double delta_vy_db = 0.0;
    bool within_tolerance = false;
};

inline OracleCheck run_oracle_check(const ExperimentConfig& cfg, double detuning_hz,
                                    double signal_tol_db = 0.1, double qnl_tol_db = 0.05) {
    validate(cfg);
    OracleOptions opts;
    opts.n_samples = cfg.oracle.n_samples;
    opts.sample_rate_hz = cfg.oracle.sample_rate_hz;
    opts.seed = cfg.oracle.seed;
    opts.rbw_hz = cfg.oracle.rbw_hz;
    opts.analysis_frequency_hz = cfg.analysis_frequency_hz;
    opts.avg_halfwidth_hz = cfg.oracle.avg_halfwidth_hz;

    OracleCheck chk;
    chk.oracle = oracle_run(cfg.nopo, cfg.mz1, cfg.mz2, Detuning{detuning_hz}, opts);
    const CombinedVariances cv = combined_variances(
        twin_beam_covariance(cfg.nopo, cfg.analysis_frequency_hz, Detuning{detuning_hz}));
    chk.analytic_vx_minus_db = variance_to_db(cv.vx_minus, cfg.nopo.qnl);
    chk.analytic_vy_plus_db = variance_to_db(cv.vy_plus, cfg.nopo.qnl);
    chk.delta_vx_db = chk.oracle.vx_minus_db - chk.analytic_vx_minus_db;
    chk.delta_vy_db = chk.oracle.vy_plus_db - chk.analytic_vy_plus_db;
    chk.within_tolerance = std::abs(chk.delta_vx_db) <= signal_tol_db &&
                           std::abs(chk.delta_vy_db) <= signal_tol_db &&
                           std::abs(chk.oracle.qnl_db) <= qnl_tol_db;
    return chk;
}

// Spectrum-analyzer calibration, the `qnl-calibrate` command: a white
// unit-variance trace must read 0 dB in every bin up to statistics.
struct QnlCalibration {
    SpectrumEstimate spectrum;
    double mean = 1.0;
    double worst_bin = 1.0;
    double fraction_within_band = 1.0;
    double band_rel = 0.0;  // the 3 sigma acceptance band, relative
    bool pass = false;
};

inline QnlCalibration run_qnl_calibration(const ExperimentConfig& cfg) {
    validate(cfg);
    SeededRng rng(cfg.oracle.seed);
    const NoiseTrace white =
        white_trace(cfg.oracle.n_samples, cfg.oracle.sample_rate_hz, cfg.oracle.seed, rng);
    QnlCalibration cal;
    cal.spectrum = welch_estimate(white, cfg.oracle.rbw_hz);
    // Hann windows at 50% overlap: adjacent segments correlate, inflating
    // the per-bin variance of the mean by ~1.06 over 1/K.
    cal.band_rel = 3.0 * std::sqrt(1.06 / static_cast<double>(cal.spectrum.n_averages));
    double worst_dev = 0.0;
    size_t inside = 0;
    double sum = 0.0;
    for (const auto& b : cal.spectrum.bins) {
        sum += b.variance;
        const double dev = std::abs(b.variance - 1.0);
        if (dev <= cal.band_rel) ++inside;
        if (dev > worst_dev) {
            worst_dev = dev;
            cal.worst_bin = b.variance;
        }
    }
    cal.mean = sum / static_cast<double>(cal.spectrum.bins.size());
    cal.fraction_within_band =
        static_cast<double>(inside) / static_cast<double>(cal.spectrum.bins.size());
    cal.pass = cal.fraction_within_band >= 0.99;
    return cal;
}

}  // namespace twinbeam
