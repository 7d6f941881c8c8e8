#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "twinbeam/pipeline.hpp"

using namespace twinbeam;
namespace fs = std::filesystem;

namespace {

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const fs::path& dir, const std::string& name, const std::string& body) {
    const std::string path = (dir / name).string();
    std::ofstream out(path, std::ios::binary);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("config defaults reproduce the reference operating point") {
    const fs::path dir = fresh_dir("twinbeam_cfg_test");
    const std::string path = write_file(dir, "empty.json", "{}\n");
    const ExperimentConfig cfg = load_config(path);
    CHECK(near(pump_parameter(cfg.nopo), 1.2247448714, 1e-9));
    CHECK(cfg.nopo.eta == 0.90);
    CHECK(cfg.nopo.zeta == 0.81);
    CHECK(cfg.nopo.xi == 0.88);
    CHECK(cfg.nopo.bandwidth_hz == 15.4e6);
    CHECK(cfg.analysis_frequency_hz == 2.0e6);
    CHECK(cfg.mz1.delta_l_m == 48.0);
    CHECK(cfg.mz1.refractive_index == 1.55);
    CHECK(cfg.coherence.linewidth_hz == 1.0e6);
    fs::remove_all(dir);
}

TEST_CASE("config validation and parse diagnostics") {
    const fs::path dir = fresh_dir("twinbeam_cfg_test2");
    SUBCASE("out-of-range field names the culprit") {
        const std::string path =
            write_file(dir, "bad.json", R"({"nopo": {"zeta": 1.2}})");
        try {
            load_config(path);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("zeta") != std::string::npos);
        }
    }
    SUBCASE("unknown fields are rejected") {
        const std::string path =
            write_file(dir, "unknown.json", R"({"nopo": {"zetta": 0.8}})");
        try {
            load_config(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("zetta") != std::string::npos);
        }
    }
    SUBCASE("malformed JSON is a parse error") {
        const std::string path = write_file(dir, "broken.json", "{ nope");
        CHECK_THROWS_AS(load_config(path), ParseError);
    }
    SUBCASE("missing file is an IO error") {
        CHECK_THROWS_AS(load_config((dir / "absent.json").string()), IoError);
    }
    SUBCASE("sweep bounds must be ordered") {
        const std::string path = write_file(
            dir, "sweep.json", R"({"sweep": {"start_hz": 5e6, "stop_hz": 1e6}})");
        CHECK_THROWS_AS(load_config(path), ValidationError);
    }
    fs::remove_all(dir);
}

TEST_CASE("interferometer mode flag") {
    const fs::path dir = fresh_dir("twinbeam_cfg_mode");
    SUBCASE("amplitude removes the input splitter, phase keeps it") {
        const std::string path = write_file(
            dir, "mode.json", R"({"mz1": {"mode": "amplitude"}, "mz2": {"mode": "phase"}})");
        const ExperimentConfig cfg = load_config(path);
        CHECK_FALSE(cfg.mz1.input_splitter_present);
        CHECK(cfg.mz2.input_splitter_present);
    }
    SUBCASE("mode and the raw boolean are mutually exclusive") {
        const std::string path = write_file(
            dir, "both.json",
            R"({"mz1": {"mode": "phase", "input_splitter_present": true}})");
        CHECK_THROWS_AS(load_config(path), ParseError);
    }
    SUBCASE("unknown mode string") {
        const std::string path =
            write_file(dir, "typo.json", R"({"mz1": {"mode": "phasey"}})");
        CHECK_THROWS_AS(load_config(path), ParseError);
    }
    fs::remove_all(dir);
}

TEST_CASE("coexistence report dumps the in-band covariance matrix") {
    const fs::path dir = fresh_dir("twinbeam_matrix_dump");
    ExperimentConfig cfg;
    cfg.output.directory = dir.string();
    const auto files = emit_report(run_coexistence_report(cfg), cfg);
    REQUIRE(files.size() == 3);
    const std::string body = slurp(files[1]);
    // four rows of four comma-separated values, row-major
    CHECK(std::count(body.begin(), body.end(), '\n') == 4);
    CHECK(std::count(body.begin(), body.end(), ',') == 12);
    std::istringstream is(body);
    std::string first_line;
    std::getline(is, first_line);
    const double v00 = std::stod(first_line);
    const CombinedVariances cv = combined_variances(
        twin_beam_covariance(cfg.nopo, cfg.analysis_frequency_hz, Detuning{0.0}));
    CHECK(near(v00, 0.5 * (cv.vx_plus + cv.vx_minus), 1e-9));
    fs::remove_all(dir);
}

TEST_CASE("analysis frequency override feeds the spectra") {
    const fs::path dir = fresh_dir("twinbeam_cfg_test3");
    const std::string path =
        write_file(dir, "f3.json", R"({"analysis_frequency_hz": 3.0e6})");
    const ExperimentConfig cfg = load_config(path);
    const SqueezedVariances v = squeezed_variances(cfg.nopo, cfg.analysis_frequency_hz);
    const double gain = 0.90 * 0.81 * 0.81 * 0.88;
    const double fb2 = (3.0 / 15.4) * (3.0 / 15.4);
    CHECK(near(v.vx_minus, 1.0 - gain / (1.0 + fb2), 1e-14));
    fs::remove_all(dir);
}

TEST_CASE("detuning grids") {
    SUBCASE("linear grid hits both endpoints uniformly") {
        SweepSettings s;
        s.start_hz = 0.0;
        s.stop_hz = 5.0e6;
        s.points = 101;
        const auto grid = make_detuning_grid(s);
        REQUIRE(grid.size() == 101);
        CHECK(grid.front() == 0.0);
        CHECK(grid.back() == 5.0e6);
        CHECK(near(grid[1] - grid[0], 5.0e4, 1e-9));
    }
    SUBCASE("positive log grid needs no anchor") {
        SweepSettings s;
        s.start_hz = 1.0e3;
        s.stop_hz = 1.0e9;
        s.points = 13;
        s.scale = "log";
        const auto grid = make_detuning_grid(s);
        REQUIRE(grid.size() == 13);
        CHECK(near(grid.front(), 1.0e3, 1e-6));
        CHECK(near(grid.back(), 1.0e9, 1.0));
        for (double d : grid) CHECK((d >= 1.0e3 && d <= 1.0e9));
    }
    SUBCASE("log grid confined inside the anchor is rejected") {
        SweepSettings s;
        s.start_hz = -0.5e6;
        s.stop_hz = 0.5e6;
        s.points = 11;
        s.scale = "log";
        CHECK_THROWS_AS(make_detuning_grid(s), ValidationError);
    }
    SUBCASE("signed log grid is sorted, includes zero, spans both sides") {
        SweepSettings s;
        s.start_hz = -200.0e9;
        s.stop_hz = 1.1e12;
        s.points = 161;
        s.scale = "log";
        const auto grid = make_detuning_grid(s);
        CHECK(grid.size() >= 150);
        CHECK(std::is_sorted(grid.begin(), grid.end()));
        CHECK(std::find(grid.begin(), grid.end(), 0.0) != grid.end());
        CHECK(near(grid.front(), -200.0e9, 1.0));
        CHECK(near(grid.back(), 1.1e12, 1.0));
    }
}

TEST_CASE("visibility sweep reproduces the coherence landmarks") {
    ExperimentConfig cfg;  // default sweep: 0..5 MHz, 1001 points
    const SweepResult result = run_visibility_sweep(cfg);
    REQUIRE(result.rows.size() == 1001);
    CHECK(result.rows.front().visibility == 1.0);

    // 1/e crossing by linear interpolation between bracketing rows
    const double target = std::exp(-1.0);
    double crossing = 0.0;
    for (size_t i = 1; i < result.rows.size(); ++i) {
        const auto& a = result.rows[i - 1];
        const auto& b = result.rows[i];
        if (a.visibility >= target && b.visibility < target) {
            const double t = (a.visibility - target) / (a.visibility - b.visibility);
            crossing = a.detuning_hz + t * (b.detuning_hz - a.detuning_hz);
            break;
        }
    }
    CHECK(near(crossing, 1.414214e6, 1.0e4));

    // grid point at exactly 3.37 MHz (multiple of the 5 kHz step)
    const auto row337 = std::find_if(result.rows.begin(), result.rows.end(),
                                     [](const SweepRow& r) { return r.detuning_hz == 3.37e6; });
    REQUIRE(row337 != result.rows.end());
    CHECK(near(row337->visibility, 0.0034, 2.0e-4));
}

TEST_CASE("correlation sweep columns and the analytic floor") {
    ExperimentConfig cfg;
    cfg.sweep.start_hz = -700.0e9;
    cfg.sweep.stop_hz = 1.2e12;
    cfg.sweep.points = 201;
    cfg.sweep.scale = "log";
    const SweepResult result = run_correlation_sweep(cfg);
    REQUIRE(result.rows.size() >= 190);

    const double floor = 1.1464208;
    bool found_in_band = false;
    bool found_far = false;
    for (const auto& r : result.rows) {
        CHECK(r.duan_value >= floor - 1e-4);
        CHECK(std::isfinite(r.vx_minus_db));
        CHECK(std::isfinite(r.vy_plus_db));
        if (r.detuning_hz == 0.0) {
            CHECK(near(r.duan_value, floor, 1e-4));
            CHECK(r.entangled);
            CHECK(near(r.vx_minus_db, -3.107, 0.01));
            CHECK(near(r.vy_plus_db, -1.821, 0.01));
            found_in_band = true;
        }
        if (r.detuning_hz < -600.0e9) {
            CHECK(near(r.vx_minus_db, 0.0, 1e-9));
            CHECK_FALSE(r.entangled);
            found_far = true;
        }
    }
    CHECK(found_in_band);
    CHECK(found_far);
}

TEST_CASE("coexistence report with the default configuration") {
    ExperimentConfig cfg;
    const CoexistenceReport rep = run_coexistence_report(cfg);
    CHECK(rep.entangled_in_band);
    CHECK(near(rep.duan_in_band, 1.1464208, 1e-4));
    // classical window: dnu * sqrt(2 ln(1/0.0034))
    CHECK(near(rep.classical_halfwidth_hz, 3.3716e6, 5.0e3));
    REQUIRE_FALSE(rep.entangled.empty);
    CHECK(near(rep.entangled.low_hz, -133.2e9, 1.0e6));
    CHECK(near(rep.entangled.high_hz, 1025.0e9, 1.0e6));
    REQUIRE_FALSE(rep.region_a.empty);
    CHECK(near(rep.region_a.low_hz, -3.3716e6, 5.0e3));
    CHECK(near(rep.region_a.high_hz, 3.3716e6, 5.0e3));
    REQUIRE(rep.region_b.size() == 2);
    CHECK(near(rep.region_b[0].low_hz, -133.2e9, 1.0e6));
    CHECK(near(rep.region_b[0].high_hz, -3.3716e6, 5.0e3));
    CHECK(near(rep.region_b[1].low_hz, 3.3716e6, 5.0e3));
    CHECK(near(rep.region_b[1].high_hz, 1025.0e9, 1.0e6));
}

TEST_CASE("coexistence report scales with the linewidth and dies without gain") {
    SUBCASE("doubling the linewidth doubles the classical window") {
        ExperimentConfig cfg;
        cfg.coherence.linewidth_hz = 2.0e6;
        const CoexistenceReport rep = run_coexistence_report(cfg);
        CHECK(near(rep.classical_halfwidth_hz, 6.7433e6, 1.0e4));
    }
    SUBCASE("no nonlinear gain leaves region B empty") {
        ExperimentConfig cfg;
        cfg.nopo.xi = 0.0;
        const CoexistenceReport rep = run_coexistence_report(cfg);
        CHECK_FALSE(rep.entangled_in_band);
        CHECK(rep.region_b.empty());
        CHECK(rep.region_a.empty);
    }
}

TEST_CASE("region B rows in a sweep are entangled with vanished visibility") {
    ExperimentConfig cfg;
    cfg.sweep.start_hz = -200.0e9;
    cfg.sweep.stop_hz = 1.1e12;
    cfg.sweep.points = 181;
    cfg.sweep.scale = "log";
    const CoexistenceReport rep = run_coexistence_report(cfg);
    const SweepResult result = run_correlation_sweep(cfg);
    REQUIRE(rep.region_b.size() == 2);
    size_t checked = 0;
    for (const auto& r : result.rows) {
        const bool in_b = (r.detuning_hz > rep.region_b[0].low_hz &&
                           r.detuning_hz < rep.region_b[0].high_hz) ||
                          (r.detuning_hz > rep.region_b[1].low_hz &&
                           r.detuning_hz < rep.region_b[1].high_hz);
        if (!in_b) continue;
        CHECK(r.entangled);
        CHECK(r.visibility < rep.vanish_threshold);
        ++checked;
    }
    CHECK(checked > 20);
}

TEST_CASE("emitted files have the documented headers and deterministic bytes") {
    const fs::path dir = fresh_dir("twinbeam_emit_test");
    ExperimentConfig cfg;
    cfg.output.directory = (dir / "run").string();
    cfg.sweep.points = 51;

    SUBCASE("visibility table") {
        const SweepResult result = run_visibility_sweep(cfg);
        const auto files = emit_outputs(result, cfg, SweepKind::visibility);
        const std::string body = slurp(files[0]);
        CHECK(body.rfind("detuning_hz,visibility\n", 0) == 0);
        const std::string first = slurp(files[0]);
        const std::string manifest_first = slurp(files[1]);
        emit_outputs(result, cfg, SweepKind::visibility);
        CHECK(slurp(files[0]) == first);
        CHECK(slurp(files[1]) == manifest_first);
    }
    SUBCASE("correlation table") {
        cfg.sweep.start_hz = -10.0e6;
        cfg.sweep.stop_hz = 10.0e6;
        const SweepResult result = run_correlation_sweep(cfg);
        const auto files = emit_outputs(result, cfg, SweepKind::correlation);
        CHECK(slurp(files[0]).rfind("detuning_hz,vx_minus_db,vy_plus_db,duan_value,entangled\n",
                                    0) == 0);
    }
    SUBCASE("gnuplot format") {
        cfg.output.format = "gnuplot";
        const SweepResult result = run_visibility_sweep(cfg);
        const auto files = emit_outputs(result, cfg, SweepKind::visibility);
        CHECK(files[0].find(".dat") != std::string::npos);
        CHECK(slurp(files[0]).rfind("# detuning_hz visibility\n", 0) == 0);
    }
    SUBCASE("manifest records the resolved config") {
        const SweepResult result = run_visibility_sweep(cfg);
        const auto files = emit_outputs(result, cfg, SweepKind::visibility);
        const auto manifest = nlohmann::json::parse(slurp(files[1]));
        CHECK(manifest.at("config").at("nopo").at("eta").get<double>() == 0.90);
        CHECK(manifest.at("command").get<std::string>() == "visibility-sweep");
    }
    fs::remove_all(dir);
}

TEST_CASE("oracle-enabled sweep adds the Monte Carlo columns") {
    const fs::path dir = fresh_dir("twinbeam_oracle_sweep_test");
    ExperimentConfig cfg;
    cfg.output.directory = dir.string();
    cfg.sweep.start_hz = -1.0e6;
    cfg.sweep.stop_hz = 1.0e6;
    cfg.sweep.points = 2;
    cfg.oracle.enabled = true;
    cfg.oracle.n_samples = 1u << 16;
    cfg.oracle.rbw_hz = 100.0e3;
    const SweepResult result = run_correlation_sweep(cfg);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0].has_oracle);
    // loose bound: tiny trace, but the channels stay in the right regime
    CHECK(near(result.rows[0].vx_minus_oracle_db, result.rows[0].vx_minus_db, 0.6));
    const auto files = emit_outputs(result, cfg, SweepKind::correlation);
    const std::string body = slurp(files[0]);
    CHECK(body.rfind("detuning_hz,vx_minus_db,vy_plus_db,duan_value,entangled,"
                     "vx_minus_oracle_db,vy_plus_oracle_db,qnl_oracle_db\n",
                     0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("qnl calibration run") {
    ExperimentConfig cfg;
    cfg.oracle.n_samples = 1u << 18;
    const QnlCalibration cal = run_qnl_calibration(cfg);
    CHECK(cal.pass);
    CHECK(near(cal.mean, 1.0, 0.01));
    CHECK(cal.fraction_within_band >= 0.99);
}
