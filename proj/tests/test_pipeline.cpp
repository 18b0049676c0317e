#include <filagauge/pipeline.hpp>

#include "helpers.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using filagauge::exit_code::config_error;
using filagauge::exit_code::defects_found;
using filagauge::exit_code::ok;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// Renders calibration sample sets at three distances and writes samples.json.
// Returns the samples file path.
std::filesystem::path make_calibration_sets(const testutil::TempDir& tmp,
                                            filagauge::SynthScene scene, double diameter_mm,
                                            int frames_per_set) {
    nlohmann::json samples = nlohmann::json::array();
    for (double L : {98.0, 100.0, 102.0}) {
        scene.camera_distance_mm = L;
        const auto dir = tmp / ("cal_" + std::to_string(static_cast<int>(L)));
        filagauge::render_sequence(scene, frames_per_set, dir, "pgm");
        samples.push_back(
            {{"dir", dir.string()}, {"diameter_mm", diameter_mm}, {"distance_mm", L}});
    }
    const auto path = tmp / "samples.json";
    write_file(path, samples.dump(2));
    return path;
}

} // namespace

TEST_CASE("synth -> calibrate -> measure round trip") {
    testutil::TempDir tmp;
    filagauge::SynthScene scene = testutil::scene_175();

    // Rig config on disk.
    const auto config_path = tmp / "rig.json";
    write_file(config_path, filagauge::rig_config_to_json_text(testutil::standard_rig(1.75)));

    // Calibrate from three rendered distances.
    const auto samples_path = make_calibration_sets(tmp, scene, 1.75, 3);
    const auto calib_path = tmp / "calibration.json";
    REQUIRE(filagauge::run_calibrate({config_path, samples_path, calib_path, 0.002}) == ok);
    REQUIRE(std::filesystem::exists(calib_path));

    const auto calib = filagauge::load_calibration(calib_path);
    CHECK(calib.main.residual_rms <= 0.002);
    CHECK(calib.main.x_min < calib.main.x_max);

    SUBCASE("clean sequence measures with exit 0 and full CSV") {
        const auto frames_dir = tmp / "frames_clean";
        filagauge::render_sequence(scene, 12, frames_dir, "pgm");

        const auto out_dir = tmp / "out_clean";
        const int code = filagauge::run_measure(
            {config_path, calib_path, frames_dir, out_dir, false, 1});
        CHECK(code == ok);

        const std::string csv = slurp(out_dir / "measurements.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);  // header + 12 rows
        CHECK(slurp(out_dir / "defects.json").find("[]") != std::string::npos);

        const auto manifest = nlohmann::json::parse(slurp(out_dir / "manifest.json"));
        CHECK(manifest.at("tool_version").get<std::string>() == "1.0.0");
        CHECK(manifest.at("input_dir").get<std::string>().front() == '/');

        // Measured diameters sit near the truth.
        std::istringstream rows(csv);
        std::string line;
        std::getline(rows, line);  // header
        while (std::getline(rows, line)) {
            const auto first_comma = line.find(',');
            const auto second_comma = line.find(',', first_comma + 1);
            const auto third_comma = line.find(',', second_comma + 1);
            const double d_main =
                std::stod(line.substr(second_comma + 1, third_comma - second_comma - 1));
            CHECK(d_main == testutil::approx_abs(1.75, 0.02));
        }
    }

    SUBCASE("diameter excursion trips the defect gate with one interval") {
        filagauge::SynthScene stepped = scene;
        stepped.profile = {{0, 1.75, 1.75, 0.0}, {5, 1.90, 1.90, 0.0}, {10, 1.75, 1.75, 0.0}};
        const auto frames_dir = tmp / "frames_step";
        filagauge::render_sequence(stepped, 15, frames_dir, "pgm");

        const auto out_dir = tmp / "out_step";
        const int code = filagauge::run_measure(
            {config_path, calib_path, frames_dir, out_dir, false, 1});
        CHECK(code == defects_found);

        const auto defects = nlohmann::json::parse(slurp(out_dir / "defects.json"));
        REQUIRE(defects.size() == 1);
        CHECK(defects[0].at("reason").get<std::string>() == "OverTolerance");
        CHECK(defects[0].at("start_mm").get<double>() == testutil::approx_abs(50.0, 10.0));
        CHECK(defects[0].at("end_mm").get<double>() == testutil::approx_abs(90.0, 10.0));
    }

    SUBCASE("measure output is byte-identical across runs and worker counts") {
        const auto frames_dir = tmp / "frames_det";
        filagauge::SynthScene noisy = scene;
        noisy.noise_sigma = 5.0;
        noisy.seed = 7;
        filagauge::render_sequence(noisy, 14, frames_dir, "pgm");

        const auto out1 = tmp / "det1";
        const auto out2 = tmp / "det2";
        const auto out4 = tmp / "det4";
        CHECK(filagauge::run_measure({config_path, calib_path, frames_dir, out1, false, 1}) == ok);
        CHECK(filagauge::run_measure({config_path, calib_path, frames_dir, out2, false, 1}) == ok);
        CHECK(filagauge::run_measure({config_path, calib_path, frames_dir, out4, false, 4}) == ok);

        CHECK(slurp(out1 / "measurements.csv") == slurp(out2 / "measurements.csv"));
        CHECK(slurp(out1 / "measurements.csv") == slurp(out4 / "measurements.csv"));
        CHECK(slurp(out1 / "defects.json") == slurp(out4 / "defects.json"));
    }

    SUBCASE("blank frames mid-sequence still produce rows, flagged SparseData") {
        filagauge::SynthScene gappy = scene;
        gappy.profile = {{0, 1.75, 1.75, 0.0}, {4, 0.0, 0.0, 0.0}, {6, 1.75, 1.75, 0.0}};
        const auto frames_dir = tmp / "frames_gappy";
        filagauge::render_sequence(gappy, 10, frames_dir, "pgm");

        const auto out_dir = tmp / "out_gappy";
        const int code = filagauge::run_measure(
            {config_path, calib_path, frames_dir, out_dir, false, 1});
        CHECK(code == defects_found);  // the unmeasurable stretch is a defect interval

        const std::string csv = slurp(out_dir / "measurements.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);  // header + all 10 frames
        CHECK(csv.find("SparseData") != std::string::npos);

        const auto defects = nlohmann::json::parse(slurp(out_dir / "defects.json"));
        REQUIRE(defects.size() == 1);
        CHECK(defects[0].at("reason").get<std::string>() == "SparseData");
        CHECK(defects[0].at("start_mm").get<double>() == doctest::Approx(40.0));
        CHECK(defects[0].at("end_mm").get<double>() == doctest::Approx(50.0));
    }

    SUBCASE("patch dump writes one PGM per frame") {
        const auto frames_dir = tmp / "frames_patch";
        filagauge::render_sequence(scene, 3, frames_dir, "pgm");
        const auto out_dir = tmp / "out_patch";
        CHECK(filagauge::run_measure({config_path, calib_path, frames_dir, out_dir, true, 1}) ==
              ok);
        CHECK(std::filesystem::exists(out_dir / "patches" / "patch_0.pgm"));
        CHECK(std::filesystem::exists(out_dir / "patches" / "patch_2.pgm"));
    }

    SUBCASE("png sequences measure identically to pgm") {
        const auto dir_pgm = tmp / "fmt_pgm";
        const auto dir_png = tmp / "fmt_png";
        filagauge::render_sequence(scene, 4, dir_pgm, "pgm");
        filagauge::render_sequence(scene, 4, dir_png, "png");
        const auto out_pgm = tmp / "fmt_out_pgm";
        const auto out_png = tmp / "fmt_out_png";
        REQUIRE(filagauge::run_measure({config_path, calib_path, dir_pgm, out_pgm, false, 1}) ==
                ok);
        REQUIRE(filagauge::run_measure({config_path, calib_path, dir_png, out_png, false, 1}) ==
                ok);
        CHECK(slurp(out_pgm / "measurements.csv") == slurp(out_png / "measurements.csv"));
    }

    SUBCASE("undecodable files are skipped, rows cover the decodable frames") {
        const auto frames_dir = tmp / "frames_bad";
        filagauge::render_sequence(scene, 5, frames_dir, "pgm");
        write_file(frames_dir / "frame_00002.pgm", "");  // truncate one frame to zero bytes

        const auto out_dir = tmp / "out_bad";
        const int code = filagauge::run_measure(
            {config_path, calib_path, frames_dir, out_dir, false, 1});
        CHECK(code == ok);
        const std::string csv = slurp(out_dir / "measurements.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 decodable frames
    }

    SUBCASE("report summarizes the log") {
        const auto frames_dir = tmp / "frames_report";
        filagauge::render_sequence(scene, 8, frames_dir, "pgm");
        const auto out_dir = tmp / "out_report";
        REQUIRE(filagauge::run_measure({config_path, calib_path, frames_dir, out_dir, false, 1}) ==
                ok);

        filagauge::ReportOptions opts;
        opts.log_csv = out_dir / "measurements.csv";
        opts.output_dir = tmp / "report";
        opts.nominal_mm = 1.75;
        opts.tolerance_mm = 0.05;
        opts.write_svg = true;

        std::ostringstream text;
        CHECK(filagauge::run_report(opts, text) == ok);
        CHECK(text.str().find("main") != std::string::npos);
        CHECK(text.str().find("100.00") != std::string::npos);  // everything in tolerance
        CHECK(std::filesystem::exists(tmp / "report" / "histogram.csv"));
        CHECK(std::filesystem::exists(tmp / "report" / "histogram_main.svg"));
    }
}

TEST_CASE("calibrate error paths") {
    testutil::TempDir tmp;
    const auto config_path = tmp / "rig.json";
    write_file(config_path, filagauge::rig_config_to_json_text(testutil::standard_rig(1.75)));

    SUBCASE("single sample set is rejected") {
        filagauge::SynthScene scene = testutil::scene_175();
        const auto dir = tmp / "only";
        filagauge::render_sequence(scene, 2, dir, "pgm");
        nlohmann::json samples = nlohmann::json::array();
        samples.push_back({{"dir", dir.string()}, {"diameter_mm", 1.75}, {"distance_mm", 50.0}});
        const auto samples_path = tmp / "samples.json";
        write_file(samples_path, samples.dump());
        CHECK(filagauge::run_calibrate({config_path, samples_path, tmp / "c.json", 0.002}) ==
              config_error);
    }

    SUBCASE("identical distances degenerate") {
        filagauge::SynthScene scene = testutil::scene_175();
        nlohmann::json samples = nlohmann::json::array();
        for (int i = 0; i < 2; ++i) {
            const auto dir = tmp / ("same_" + std::to_string(i));
            filagauge::render_sequence(scene, 2, dir, "pgm");
            samples.push_back(
                {{"dir", dir.string()}, {"diameter_mm", 1.75}, {"distance_mm", 50.0}});
        }
        const auto samples_path = tmp / "samples.json";
        write_file(samples_path, samples.dump());
        CHECK(filagauge::run_calibrate({config_path, samples_path, tmp / "c.json", 0.002}) ==
              config_error);
    }
}

TEST_CASE("measure error paths") {
    testutil::TempDir tmp;
    const auto config_path = tmp / "rig.json";
    write_file(config_path, filagauge::rig_config_to_json_text(testutil::standard_rig(1.75)));

    SUBCASE("missing calibration file exits with a config error") {
        const auto frames_dir = tmp / "frames";
        filagauge::render_sequence(testutil::scene_175(), 1, frames_dir, "pgm");
        CHECK(filagauge::run_measure(
                  {config_path, tmp / "nope.json", frames_dir, tmp / "out", false, 1}) ==
              config_error);
    }

    SUBCASE("empty input directory exits with an io error") {
        const auto calib_path = tmp / "calibration.json";
        filagauge::save_calibration(
            calib_path, testutil::analytic_calibration(testutil::scene_175(), {98.0, 100.0, 102.0}));
        std::filesystem::create_directories(tmp / "empty");
        CHECK(filagauge::run_measure(
                  {config_path, calib_path, tmp / "empty", tmp / "out", false, 1}) ==
              filagauge::exit_code::io_error);
    }
}

TEST_CASE("synth runner writes the directory contract") {
    testutil::TempDir tmp;
    const auto scene_path = tmp / "scene.json";
    write_file(scene_path, filagauge::scene_to_json_text(testutil::scene_175()));

    filagauge::SynthOptions opts;
    opts.scene = scene_path;
    opts.output_dir = tmp / "frames";
    opts.count = 2;
    opts.seed = 5;
    CHECK(filagauge::run_synth(opts) == ok);
    CHECK(std::filesystem::exists(tmp / "frames" / "frame_00000.pgm"));
    CHECK(std::filesystem::exists(tmp / "frames" / "frame_00001.pgm"));
    CHECK(std::filesystem::exists(tmp / "frames" / "ground_truth.json"));

    SUBCASE("fixed seed reproduces the directory byte for byte") {
        filagauge::SynthOptions again = opts;
        again.output_dir = tmp / "frames2";
        CHECK(filagauge::run_synth(again) == ok);
        CHECK(slurp(tmp / "frames" / "frame_00001.pgm") ==
              slurp(tmp / "frames2" / "frame_00001.pgm"));
        CHECK(slurp(tmp / "frames" / "ground_truth.json") ==
              slurp(tmp / "frames2" / "ground_truth.json"));
    }

    SUBCASE("missing scene file is a config error") {
        filagauge::SynthOptions bad = opts;
        bad.scene = tmp / "missing.json";
        CHECK(filagauge::run_synth(bad) == config_error);
    }
}

TEST_CASE("report rejects an empty log") {
    testutil::TempDir tmp;
    write_file(tmp / "empty.csv", "");
    filagauge::ReportOptions opts;
    opts.log_csv = tmp / "empty.csv";
    std::ostringstream sink;
    CHECK(filagauge::run_report(opts, sink) == config_error);

    write_file(tmp / "header_only.csv",
               "frame,length_mm,d_main_mm,d_upper_mm,d_lower_mm,d_mean_mm,ovality_pct,flags,"
               "anomaly_score\n");
    opts.log_csv = tmp / "header_only.csv";
    CHECK(filagauge::run_report(opts, sink) == config_error);
}

TEST_CASE("spool runner prints the reference lengths") {
    std::ostringstream out;
    CHECK(filagauge::run_spool(50.0, 10, 3, 2.0, 10.0, out) == ok);
    CHECK(out.str().find("9801.769") != std::string::npos);
    CHECK(out.str().find("3392.920") != std::string::npos);
    CHECK(out.str().find("314.159") != std::string::npos);

    std::ostringstream bad;
    CHECK(filagauge::run_spool(-1.0, 10, 3, 2.0, std::nullopt, bad) == config_error);
}
