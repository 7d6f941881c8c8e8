// Command-line front end: sweeps, coexistence report, oracle check, and
// spectrum-analyzer calibration, all driven by one JSON config with full
// defaulting. Errors land on stderr as one JSON object and a nonzero exit.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "twinbeam/pipeline.hpp"

namespace {

using twinbeam::ExperimentConfig;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::optional<uint64_t> seed;
    std::optional<size_t> points;
    bool oracle = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON configuration file (defaults apply)");
    cmd->add_option("--out", o.out_dir, "output directory (overrides output.directory)");
    cmd->add_option("--seed", o.seed, "override oracle.seed");
    cmd->add_option("--points", o.points, "override sweep.points");
    cmd->add_flag("--oracle", o.oracle, "enable Monte Carlo columns / paths");
}

ExperimentConfig resolve(const CommonOpts& o) {
    ExperimentConfig cfg =
        o.config_path.empty() ? ExperimentConfig{} : twinbeam::load_config(o.config_path);
    if (!o.out_dir.empty()) cfg.output.directory = o.out_dir;
    if (o.seed) cfg.oracle.seed = *o.seed;
    if (o.points) cfg.sweep.points = *o.points;
    if (o.oracle) cfg.oracle.enabled = true;
    twinbeam::validate(cfg);
    return cfg;
}

void print_error(const std::string& code, const std::string& message) {
    nlohmann::json err{{"error", {{"code", code}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"twinbeam: twin-beam quadrature correlation and classical coherence simulator"};
    app.require_subcommand(1);

    CommonOpts vis_opts, corr_opts, coex_opts, check_opts, cal_opts;
    double check_detuning_hz = 0.0;

    CLI::App* vis = app.add_subcommand(
        "visibility-sweep", "interference visibility vs frequency difference");
    add_common(vis, vis_opts);

    CLI::App* corr = app.add_subcommand(
        "correlation-sweep", "quadrature correlation variances vs frequency difference");
    add_common(corr, corr_opts);

    CLI::App* coex = app.add_subcommand(
        "coexistence-report", "detuning regions of classical and quantum correlations");
    add_common(coex, coex_opts);

    CLI::App* check = app.add_subcommand(
        "oracle-check", "Monte Carlo run compared against the analytic spectra");
    add_common(check, check_opts);
    check->add_option("--detuning-hz", check_detuning_hz, "detuning of the checked point");

    CLI::App* cal = app.add_subcommand(
        "qnl-calibrate", "white-noise calibration of the emulated spectrum analyzer");
    add_common(cal, cal_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        print_error("cli", e.what());
        return 2;
    }

    try {
        if (vis->parsed()) {
            const ExperimentConfig cfg = resolve(vis_opts);
            const auto result = twinbeam::run_visibility_sweep(cfg);
            const auto files = twinbeam::emit_outputs(result, cfg, twinbeam::SweepKind::visibility);
            std::printf("wrote %zu rows to %s\n", result.rows.size(), files.front().c_str());
        } else if (corr->parsed()) {
            const ExperimentConfig cfg = resolve(corr_opts);
            const auto result = twinbeam::run_correlation_sweep(cfg);
            const auto files =
                twinbeam::emit_outputs(result, cfg, twinbeam::SweepKind::correlation);
            std::printf("wrote %zu rows to %s\n", result.rows.size(), files.front().c_str());
        } else if (coex->parsed()) {
            const ExperimentConfig cfg = resolve(coex_opts);
            const auto rep = twinbeam::run_coexistence_report(cfg);
            const auto files = twinbeam::emit_report(rep, cfg);
            std::cout << twinbeam::report_to_json(rep).dump(2) << "\n";
            std::printf("wrote %s\n", files.front().c_str());
        } else if (check->parsed()) {
            const ExperimentConfig cfg = resolve(check_opts);
            const auto chk = twinbeam::run_oracle_check(cfg, check_detuning_hz);
            twinbeam::detail::ensure_directory(cfg.output.directory);
            const std::string path = cfg.output.directory + "/oracle_check.csv";
            auto out = twinbeam::csv::open_for_write(path);
            out << "channel,analytic_db,oracle_db,delta_db\n";
            out << "vx_minus," << twinbeam::csv::format_double(chk.analytic_vx_minus_db) << ","
                << twinbeam::csv::format_double(chk.oracle.vx_minus_db) << ","
                << twinbeam::csv::format_double(chk.delta_vx_db) << "\n";
            out << "vy_plus," << twinbeam::csv::format_double(chk.analytic_vy_plus_db) << ","
                << twinbeam::csv::format_double(chk.oracle.vy_plus_db) << ","
                << twinbeam::csv::format_double(chk.delta_vy_db) << "\n";
            out << "qnl,0," << twinbeam::csv::format_double(chk.oracle.qnl_db) << ","
                << twinbeam::csv::format_double(chk.oracle.qnl_db) << "\n";
            out.close();
            std::printf("vx_minus: analytic %+.3f dB, oracle %+.3f dB (delta %+.4f)\n",
                        chk.analytic_vx_minus_db, chk.oracle.vx_minus_db, chk.delta_vx_db);
            std::printf("vy_plus:  analytic %+.3f dB, oracle %+.3f dB (delta %+.4f)\n",
                        chk.analytic_vy_plus_db, chk.oracle.vy_plus_db, chk.delta_vy_db);
            std::printf("qnl:      oracle %+.4f dB\n", chk.oracle.qnl_db);
            if (!chk.within_tolerance) {
                print_error("oracle_mismatch",
                            "oracle deviates from the analytic model beyond tolerance");
                return 3;
            }
        } else if (cal->parsed()) {
            const ExperimentConfig cfg = resolve(cal_opts);
            const auto res = twinbeam::run_qnl_calibration(cfg);
            twinbeam::detail::ensure_directory(cfg.output.directory);
            const std::string path = cfg.output.directory + "/qnl_spectrum.csv";
            twinbeam::write_spectrum_csv(res.spectrum, path);
            std::printf("qnl calibration: mean %.5f, worst bin %.5f, %.2f%% of bins within "
                        "the 3-sigma band (+/-%.4f), %zu averages\n",
                        res.mean, res.worst_bin, 100.0 * res.fraction_within_band, res.band_rel,
                        res.spectrum.n_averages);
            std::printf("wrote %s\n", path.c_str());
            if (!res.pass) {
                print_error("calibration_failed",
                            "fewer than 99% of bins sit inside the 3-sigma band");
                return 3;
            }
        }
    } catch (const twinbeam::Error& e) {
        print_error(e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}
