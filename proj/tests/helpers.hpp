#pragma once

#include <filagauge/acquisition.hpp>
#include <filagauge/calibration.hpp>
#include <filagauge/synth.hpp>

#include <Eigen/Core>

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <random>
#include <vector>

namespace testutil {

// Absolute-tolerance comparison for CHECK(x == approx_abs(v, tol)).
struct ApproxAbs {
    double value;
    double tol;
};

inline ApproxAbs approx_abs(double value, double tol) { return {value, tol}; }

inline bool operator==(double lhs, const ApproxAbs& rhs) {
    return std::abs(lhs - rhs.value) <= rhs.tol;
}

inline std::ostream& operator<<(std::ostream& os, const ApproxAbs& a) {
    return os << a.value << " +/- " << a.tol;
}

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("filagauge_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Independent anti-aliased band oracle: exact area coverage of [top, bottom]
// against pixels spanning [r-0.5, r+0.5), quantized to 8 bits. This is the
// reference the edge detector is checked against; it does not go through the
// renderer.
inline Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> aa_band_slice(int length, double background,
                                                                    double fill, double top,
                                                                    double bottom) {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> slice(length);
    for (int r = 0; r < length; ++r) {
        const double lo = std::max(static_cast<double>(r) - 0.5, top);
        const double hi = std::min(static_cast<double>(r) + 0.5, bottom);
        const double coverage = std::clamp(hi - lo, 0.0, 1.0);
        const double v = background + coverage * (fill - background);
        slice[r] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
    return slice;
}

// Standard synthetic rig used across tests: three bands inside the frame with
// ROIs that keep working while the camera distance sweeps 90..110 mm and the
// diameter stays under ~2 mm (2000 px/mm sensor) or ~3.2 mm (1200 px/mm sensor).
inline filagauge::Rect roi_upper() { return {288, 30, 64, 140}; }
inline filagauge::Rect roi_main() { return {288, 172, 64, 136}; }
inline filagauge::Rect roi_lower() { return {288, 310, 64, 140}; }

inline filagauge::RigConfig standard_rig(double nominal_mm, double tolerance_mm = 0.05) {
    filagauge::RigConfig rig;
    rig.roi_main = roi_main();
    rig.roi_upper = roi_upper();
    rig.roi_lower = roi_lower();
    rig.gradient_threshold = 40.0;
    rig.nominal_diameter_mm = nominal_mm;
    rig.tolerance_mm = tolerance_mm;
    rig.feed_rate_mm_s = 10.0;
    rig.period_s = 1.0;
    return rig;
}

// 1.75 mm class scene (defaults already describe it).
inline filagauge::SynthScene scene_175() {
    filagauge::SynthScene scene;
    return scene;
}

// 3.0 mm class scene: wider filament at a coarser sensor so the same ROIs fit.
inline filagauge::SynthScene scene_30() {
    filagauge::SynthScene scene;
    scene.pinhole.px_per_mm_sensor = 1200.0;
    scene.upper_offset_mm = 4.4;
    scene.lower_offset_mm = 4.4;
    scene.nominal_diameter_mm = 3.0;
    scene.profile = {{0, 3.0, 3.0, 0.0}};
    return scene;
}

// Calibration computed from scene geometry (no pixels involved): exact z(L) and
// x(L) triples at the given distances.
inline filagauge::ProjectionCalibration analytic_calibration(
    const filagauge::SynthScene& scene, const std::vector<double>& distances) {
    std::vector<filagauge::CalibrationSample> main, upper, lower;
    for (double L : distances) {
        const double x = scene.pinhole.px_per_object_mm(L + scene.upper_path_extra_mm) *
                         scene.upper_offset_mm;
        main.push_back({x, L, 1.0 / scene.pinhole.px_per_object_mm(L)});
        upper.push_back({x, L, 1.0 / scene.pinhole.px_per_object_mm(L + scene.upper_path_extra_mm)});
        lower.push_back({x, L, 1.0 / scene.pinhole.px_per_object_mm(L + scene.lower_path_extra_mm)});
    }
    filagauge::ProjectionCalibration calib;
    calib.main = filagauge::fit_calibration(main);
    calib.upper = filagauge::fit_calibration(upper);
    calib.lower = filagauge::fit_calibration(lower);
    return calib;
}

} // namespace testutil
