#pragma once

#include <filagauge/error.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>

namespace filagauge {

/// Camera model used by the synthetic scene and the pinhole law.
struct PinholeModel {
    double focal_mm = 2.8;           // F
    double px_per_mm_sensor = 2000.0;

    /// Image-plane pixels per mm of object at distance L.
    double px_per_object_mm(double distance_mm) const {
        return focal_mm * px_per_mm_sensor / distance_mm;
    }
};

/// Projection size p = F * W / L (all mm). Throws Error{NonPositiveDistance}.
double project(double object_mm, double focal_mm, double distance_mm);

/// Pixel separation between two centerlines (means of frame-coordinate rows).
/// Throws Error{EmptyCenterline}.
double separation(const Eigen::VectorXd& main_centerline, const Eigen::VectorXd& mirror_centerline);

/// One calibration observation: mirror separation (px), camera distance (mm),
/// scale factor (mm per px).
struct CalibrationSample {
    double x_px = 0.0;
    double y_mm = 0.0;
    double z_mm_per_px = 0.0;
};

/// Parametric line through (x, y, z) space anchored at the sample centroid:
/// (x-x1)/a = (y-y1)/b = (z-z1)/c, evaluated along x.
struct CalibrationModel {
    double x1 = 0.0, y1 = 0.0, z1 = 0.0;
    double a = 1.0, b = 0.0, c = 0.0;
    double x_min = 0.0, x_max = 0.0;  // valid_x_range
    double residual_rms = 0.0;        // z residual, mm/px
};

/// Scale factor (and distance estimate) at separation x. `extrapolated` is set
/// when x falls outside the fitted range.
struct ScaleResult {
    double y_mm = 0.0;
    double s_mm_per_px = 0.0;
    bool extrapolated = false;
};

/// Least-squares line through the samples: centroid anchor, direction
/// (1, dy/dx, dz/dx) normalized to unit length. Throws Error{TooFewSamples}
/// (< 2 samples) and Error{DegenerateSamples} (all x equal).
CalibrationModel fit_calibration(std::span<const CalibrationSample> samples);

ScaleResult scale_for(const CalibrationModel& model, double x_px);

/// D = d * s. Throws Error{NonPositiveScale}.
double px_to_mm(double d_px, double s_mm_per_px);

/// Per-projection calibration set keyed by the main/upper mirror separation.
struct ProjectionCalibration {
    CalibrationModel main;
    CalibrationModel upper;
    CalibrationModel lower;
};

ProjectionCalibration calibration_from_json_text(const std::string& text);
ProjectionCalibration load_calibration(const std::filesystem::path& path);
std::string calibration_to_json_text(const ProjectionCalibration& calib);
void save_calibration(const std::filesystem::path& path, const ProjectionCalibration& calib);

} // namespace filagauge
