#pragma once

#include <filagauge/measurement.hpp>
#include <filagauge/synth.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace filagauge {

/// Process exit codes shared by the CLI surface.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 1;
inline constexpr int io_error = 2;
inline constexpr int defects_found = 3;     // measure quality gate
inline constexpr int residual_too_high = 4; // calibrate quality gate
} // namespace exit_code

struct MeasureOptions {
    std::filesystem::path config;
    std::filesystem::path calibration;
    std::filesystem::path input_dir;
    std::filesystem::path output_dir;
    bool dump_patches = false;
    int workers = 1;
};

/// Batch measurement over a frame directory. Writes measurements.csv,
/// defects.json, manifest.json and optional patches/ under output_dir.
/// Returns exit_code::defects_found when any defect interval exists.
int run_measure(const MeasureOptions& options);

struct CalibrateSample {
    std::filesystem::path dir;
    double diameter_mm = 0.0;
    double distance_mm = 0.0;  // externally measured; 0 when unknown
};

struct CalibrateOptions {
    std::filesystem::path config;
    std::filesystem::path samples;  // JSON list of CalibrateSample
    std::filesystem::path output;   // calibration JSON
    double max_residual_mm_per_px = 0.002;
};

int run_calibrate(const CalibrateOptions& options);

std::vector<CalibrateSample> calibrate_samples_from_json_text(const std::string& text);

struct SynthOptions {
    std::filesystem::path scene;
    std::filesystem::path output_dir;
    long count = 1;
    std::optional<std::uint64_t> seed;  // overrides the scene seed
    std::string format = "pgm";
};

int run_synth(const SynthOptions& options);

struct ReportOptions {
    std::filesystem::path log_csv;
    std::optional<std::filesystem::path> output_dir;  // histogram CSV / SVG target
    double nominal_mm = 1.75;
    double tolerance_mm = 0.05;
    bool write_svg = false;
};

int run_report(const ReportOptions& options, std::ostream& out);

int run_spool(double radius_mm, int turns_per_layer, int layers, double filament_mm,
              std::optional<double> feed_rate_mm_s, std::ostream& out);

} // namespace filagauge
