#pragma once

#include <filagauge/acquisition.hpp>
#include <filagauge/calibration.hpp>
#include <filagauge/error.hpp>
#include <filagauge/texture.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace filagauge {

/// Calibrated diameters of one slice across the three projections.
struct SliceMeasurement {
    int column = 0;
    std::optional<double> d_main_mm;
    std::optional<double> d_upper_mm;
    std::optional<double> d_lower_mm;
    std::optional<double> ovality_pct;  // needs at least two measured projections
};

enum class FrameFlag : std::uint8_t {
    OverTolerance = 1u << 0,
    UnderTolerance = 1u << 1,
    OvalityExceeded = 1u << 2,
    SparseData = 1u << 3,
};

struct FrameFlags {
    std::uint8_t bits = 0;

    bool has(FrameFlag f) const { return bits & static_cast<std::uint8_t>(f); }
    void set(FrameFlag f) { bits |= static_cast<std::uint8_t>(f); }
    bool any() const { return bits != 0; }
    bool operator==(const FrameFlags&) const = default;
};

/// `|`-joined flag tokens, empty string when clean.
std::string to_string(FrameFlags flags);

struct ProjectionSummary {
    double mean_mm = 0.0;
    double min_mm = 0.0;
    double max_mm = 0.0;
    int count = 0;
};

struct FrameMeasurement {
    long index = 0;
    std::vector<SliceMeasurement> slices;
    std::optional<ProjectionSummary> main;
    std::optional<ProjectionSummary> upper;
    std::optional<ProjectionSummary> lower;
    std::optional<double> pooled_mean_mm;   // mean over all 3*N present values
    std::optional<double> mean_ovality_pct;
    std::optional<double> separation_px;
    std::optional<PseudoSurfacePatch> patch;
    std::optional<double> anomaly;          // filled by the sequential scoring stage
    FrameFlags flags;
};

/// Percentage ovality O = (d_max - d_min) / d_nominal * 100.
/// Throws Error{InvalidOrder} when d_max < d_min.
double ovality(double d_max_mm, double d_min_mm, double d_nominal_mm);

/// Ovality limit implied by a diameter tolerance: (2 * tol / nominal) * 100.
double default_max_ovality_pct(double nominal_mm, double tolerance_mm);

/// Runs the full per-frame pipeline: ROI extraction, masking, centerlines,
/// rectification, separation, calibrated diameters, per-slice ovality, texture
/// patch, tolerance flags. Projections that fail segmentation set SparseData
/// instead of aborting.
FrameMeasurement measure_frame(const Frame& frame, const RigConfig& rig,
                               const ProjectionCalibration& calib);

/// Applies tolerance rules to an existing measurement (summaries must be set).
FrameFlags flag_tolerance(const FrameMeasurement& fm, double nominal_mm, double tolerance_mm,
                          double max_ovality_pct);

struct DefectInterval {
    double start_mm = 0.0;
    double end_mm = 0.0;
    std::string reason;  // one flag token
};

/// Row retained per frame in the along-length history.
struct LogEntry {
    long index = 0;
    double length_mm = 0.0;
    std::optional<double> d_main_mm, d_upper_mm, d_lower_mm, d_mean_mm;
    std::optional<double> ovality_pct;
    std::optional<double> anomaly;
    FrameFlags flags;
};

/// Along-length measurement history with defect-interval bookkeeping.
/// Frames must arrive with consecutive indices.
class MeasurementLog {
public:
    MeasurementLog(double feed_rate_mm_s, double period_s)
        : feed_rate_mm_s_(feed_rate_mm_s), period_s_(period_s) {}

    /// Throws Error{NonMonotonicIndex} unless fm.index == last index + 1 (or first).
    void append(const FrameMeasurement& fm);

    const std::vector<LogEntry>& entries() const { return entries_; }

    /// Consecutive flagged frames merged per reason; [first, last] flagged lengths.
    std::vector<DefectInterval> defect_intervals() const;

    double length_of(long index) const { return index * feed_rate_mm_s_ * period_s_; }

    std::string to_csv() const;
    std::string defects_to_json_text() const;

private:
    double feed_rate_mm_s_;
    double period_s_;
    std::vector<LogEntry> entries_;
};

} // namespace filagauge
