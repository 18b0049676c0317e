#pragma once

#include <filagauge/acquisition.hpp>
#include <filagauge/calibration.hpp>
#include <filagauge/error.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace filagauge {

/// Cross-section geometry active from `from_frame` onward (full diameters, mm).
struct ProfileSegment {
    long from_frame = 0;
    double major_mm = 1.75;
    double minor_mm = 1.75;
    double orientation_rad = 0.0;  // major axis angle from the main view's measured axis
};

/// Localized surface feature (pit or bump) in length/angle coordinates.
struct SurfaceSpot {
    double center_mm = 0.0;       // along-length position
    double center_phi_rad = 0.0;  // angle around the axis; 0 faces the camera
    double sigma_mm = 1.0;
    double sigma_phi_rad = 0.3;
    double delta_intensity = -60.0;
};

/// Deterministic description of the rendered scene: pinhole camera, one filament,
/// two 45-degree mirror views at longer optical paths.
struct SynthScene {
    PinholeModel pinhole;
    double camera_distance_mm = 100.0;     // L, camera to filament (main view)
    double upper_offset_mm = 2.65;         // vertical displacement of the upper virtual image
    double lower_offset_mm = 2.65;
    double upper_path_extra_mm = 16.0;     // extra optical path via the upper mirror
    double lower_path_extra_mm = 16.0;
    int frame_width = 640;
    int frame_height = 480;
    double main_center_row = 240.0;        // main band center (the optical axis row)
    double background = 200.0;
    double surface_intensity = 90.0;       // band fill at the cross-section center
    double shade_strength = 0.25;          // Lambertian-style falloff toward band edges
    double texture_amplitude = 0.0;        // sinusoidal surface modulation
    double texture_wavelength_mm = 3.0;
    double noise_sigma = 0.0;              // additive clipped Gaussian, intensity levels
    std::uint64_t seed = 0;
    double nominal_diameter_mm = 1.75;     // used for ground-truth ovality
    double advance_mm_per_frame = 10.0;    // filament travel between frames
    std::vector<ProfileSegment> profile{ProfileSegment{}};
    std::vector<SurfaceSpot> spots;
};

void validate(const SynthScene& scene);

/// What the renderer knows to be true about one frame.
struct GroundTruth {
    long index = 0;
    double true_d_mm = 0.0;        // (major + minor) / 2
    double true_ovality_pct = 0.0; // (major - minor) / nominal * 100
    double width_main_px = 0.0;
    double width_upper_px = 0.0;
    double width_lower_px = 0.0;
    double center_main_px = 0.0;
    double center_upper_px = 0.0;
    double center_lower_px = 0.0;
    double separation_px = 0.0;    // |main - upper| band centers
    double distance_mm = 0.0;      // camera distance L
};

/// Renders one frame: three horizontal bands (upper mirror, main, lower mirror)
/// with exact area-coverage anti-aliasing, optional shading/texture/noise.
/// Pure in (scene, index). Throws Error{SceneOutOfFrame} when a band leaves the frame.
std::pair<Frame, GroundTruth> render_frame(const SynthScene& scene, long index);

struct SequenceResult {
    std::vector<std::filesystem::path> frame_paths;
    std::vector<GroundTruth> truths;
};

/// Renders `count` frames into `directory` (frame_<index>.<format>, format "pgm"
/// or "png") and writes ground_truth.json alongside. Throws Error{IoFailure}.
SequenceResult render_sequence(const SynthScene& scene, long count,
                               const std::filesystem::path& directory,
                               const std::string& format = "pgm");

SynthScene scene_from_json_text(const std::string& text);
SynthScene load_scene(const std::filesystem::path& path);
std::string scene_to_json_text(const SynthScene& scene);

std::string ground_truth_to_json_text(const std::vector<GroundTruth>& truths);
std::vector<GroundTruth> ground_truth_from_json_text(const std::string& text);

} // namespace filagauge
