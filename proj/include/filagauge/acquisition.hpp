#pragma once

#include <filagauge/error.hpp>
#include <filagauge/image.hpp>

#include <filesystem>
#include <vector>

namespace filagauge {

/// One grayscale camera frame, the unit of processing.
struct Frame {
    ImageU8 pixels;     // row-major 8-bit intensities
    long index = 0;     // position in the capture sequence
    double period_s = 1.0;

    int width() const { return static_cast<int>(pixels.cols()); }
    int height() const { return static_cast<int>(pixels.rows()); }
};

/// Fixed measurement-rig configuration: the three projection ROIs plus
/// segmentation and tolerance parameters. Loaded from JSON (see rig_config_from_json).
struct RigConfig {
    Rect roi_main;
    Rect roi_upper;
    Rect roi_lower;
    double gradient_threshold = 40.0;  // intensity per pixel
    double nominal_diameter_mm = 1.75;
    double tolerance_mm = 0.05;
    double feed_rate_mm_s = 10.0;
    double period_s = 1.0;

    /// Width (column count) shared by all ROIs in a valid config.
    int slice_count() const { return roi_main.w; }
};

/// Throws Error{InvalidArgument} unless the structural invariants hold:
/// positive sizes, equal ROI widths, pairwise-disjoint ROIs, positive thresholds.
void validate(const RigConfig& rig);

/// Additionally checks the ROIs against concrete frame dimensions.
void validate(const RigConfig& rig, int frame_w, int frame_h);

RigConfig rig_config_from_json_text(const std::string& text);
RigConfig load_rig_config(const std::filesystem::path& path);
std::string rig_config_to_json_text(const RigConfig& rig);

// --- Raster I/O (PNG and binary PGM/P5, 8-bit) -------------------------------

/// Decodes a PNG or PGM file to 8-bit grayscale. Color inputs are reduced
/// channel-wise by arithmetic mean (rounded half-up); alpha is ignored.
/// Throws Error{FileUnreadable} for missing/corrupt files and
/// Error{UnsupportedFormat} for anything that is not 8-bit PNG/PGM.
ImageU8 read_raster(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const ImageU8& image);
void write_png(const std::filesystem::path& path, const ImageU8& image);

/// True if the file name carries a raster extension this module decodes.
bool has_raster_extension(const std::filesystem::path& path);

// --- Operations ---------------------------------------------------------------

/// Loads one frame from disk and attaches its sequence metadata.
Frame load_frame(const std::filesystem::path& path, long index, double period_s);

/// Lists the decodable frames of a directory, sorted by the numeric suffix of
/// the file stem (ascending), ties broken lexicographically. Non-raster files
/// are skipped. Throws Error{EmptySequence} when nothing remains.
std::vector<std::filesystem::path> scan_sequence(const std::filesystem::path& directory);

/// Copies the ROI out of the frame. Columns of the result are the single-pixel
/// slices the segmentation stage consumes. Throws Error{RoiOutOfBounds}.
ImageU8 extract_roi(const Frame& frame, const Rect& roi);

} // namespace filagauge
