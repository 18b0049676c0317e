#include <filagauge/synth.hpp>
#include <filagauge/log.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace filagauge {

namespace {

using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

// Deterministic generator independent of the standard library's distribution
// implementations: splitmix64 stream plus Box-Muller normals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    double uniform01() {  // (0, 1)
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed ^ (0xA0761D6478BD642Full + index * 0xE7037ED1A0B428DBull));
    return r.next_u64();
}

const ProfileSegment& active_segment(const SynthScene& scene, long index) {
    const ProfileSegment* active = &scene.profile.front();
    for (const auto& seg : scene.profile) {
        if (seg.from_frame <= index) {
            active = &seg;
        } else {
            break;
        }
    }
    return *active;
}

// Full silhouette extent of an ellipse (full diameters) measured along an axis
// at `angle` from the major axis.
double ellipse_extent(double major_mm, double minor_mm, double angle_rad) {
    const double ca = std::cos(angle_rad);
    const double sa = std::sin(angle_rad);
    return std::sqrt(major_mm * major_mm * ca * ca + minor_mm * minor_mm * sa * sa);
}

double wrap_angle(double phi) {
    while (phi > kPi) phi -= 2.0 * kPi;
    while (phi < -kPi) phi += 2.0 * kPi;
    return phi;
}

struct BandGeometry {
    double center_row = 0.0;
    double width_px = 0.0;
    double phi_center = 0.0;  // view direction around the filament axis

    double top() const { return center_row - 0.5 * width_px; }
    double bottom() const { return center_row + 0.5 * width_px; }
};

class FrameRenderer {
public:
    FrameRenderer(const SynthScene& scene, long index) : scene_(scene), index_(index) {}

    double surface_intensity(double length_mm, double rr, double phi_center) const {
        const double r = std::clamp(rr, -1.0, 1.0);
        const double bulge = std::sqrt(1.0 - r * r);
        const double shade = 1.0 - scene_.shade_strength * (1.0 - bulge);
        const double phi = phi_center + std::asin(r);

        double value = scene_.surface_intensity * shade;
        if (scene_.texture_amplitude != 0.0) {
            value += scene_.texture_amplitude *
                     std::sin(2.0 * kPi * length_mm / scene_.texture_wavelength_mm) *
                     std::cos(phi);
        }
        for (const auto& spot : scene_.spots) {
            const double dl = (length_mm - spot.center_mm) / spot.sigma_mm;
            const double dp = wrap_angle(phi - spot.center_phi_rad) / spot.sigma_phi_rad;
            value += spot.delta_intensity * std::exp(-0.5 * (dl * dl + dp * dp));
        }
        return std::clamp(value, 0.0, 255.0);
    }

    // Exact area coverage against the band, fill integrated with a midpoint rule.
    void draw_band(ImageD& canvas, const BandGeometry& band) const {
        const double top = band.top();
        const double bottom = band.bottom();
        const int r_first = std::max(0, static_cast<int>(std::floor(top - 1.0)));
        const int r_last =
            std::min(static_cast<int>(canvas.rows()) - 1, static_cast<int>(std::ceil(bottom + 1.0)));
        const double px_per_mm_main = scene_.pinhole.px_per_object_mm(scene_.camera_distance_mm);

        for (int c = 0; c < static_cast<int>(canvas.cols()); ++c) {
            const double length_mm =
                index_ * scene_.advance_mm_per_frame + static_cast<double>(c) / px_per_mm_main;
            for (int r = r_first; r <= r_last; ++r) {
                const double lo = std::max(static_cast<double>(r) - 0.5, top);
                const double hi = std::min(static_cast<double>(r) + 0.5, bottom);
                if (hi <= lo) {
                    continue;
                }
                double fill = 0.0;
                constexpr int kSubSamples = 4;
                for (int k = 0; k < kSubSamples; ++k) {
                    const double row = lo + (k + 0.5) * (hi - lo) / kSubSamples;
                    const double rr = (row - band.center_row) / (0.5 * band.width_px);
                    fill += surface_intensity(length_mm, rr, band.phi_center);
                }
                fill /= kSubSamples;
                const double coverage = hi - lo;
                canvas(r, c) += coverage * (fill - scene_.background);
            }
        }
    }

private:
    const SynthScene& scene_;
    long index_;
};

json truth_to_json(const GroundTruth& t) {
    return json{{"index", t.index},
                {"true_d_mm", t.true_d_mm},
                {"true_ovality_pct", t.true_ovality_pct},
                {"widths_px",
                 {{"main", t.width_main_px}, {"upper", t.width_upper_px}, {"lower", t.width_lower_px}}},
                {"centers_px",
                 {{"main", t.center_main_px},
                  {"upper", t.center_upper_px},
                  {"lower", t.center_lower_px}}},
                {"separation_px", t.separation_px},
                {"distance_mm", t.distance_mm}};
}

GroundTruth truth_from_json(const json& j) {
    GroundTruth t;
    t.index = j.at("index").get<long>();
    t.true_d_mm = j.at("true_d_mm").get<double>();
    t.true_ovality_pct = j.at("true_ovality_pct").get<double>();
    t.width_main_px = j.at("widths_px").at("main").get<double>();
    t.width_upper_px = j.at("widths_px").at("upper").get<double>();
    t.width_lower_px = j.at("widths_px").at("lower").get<double>();
    t.center_main_px = j.at("centers_px").at("main").get<double>();
    t.center_upper_px = j.at("centers_px").at("upper").get<double>();
    t.center_lower_px = j.at("centers_px").at("lower").get<double>();
    t.separation_px = j.at("separation_px").get<double>();
    t.distance_mm = j.value("distance_mm", 0.0);
    return t;
}

} // namespace

void validate(const SynthScene& scene) {
    if (!(scene.pinhole.focal_mm > 0.0) || !(scene.pinhole.px_per_mm_sensor > 0.0)) {
        throw Error(Errc::InvalidArgument, "pinhole parameters must be > 0");
    }
    if (!(scene.camera_distance_mm > scene.pinhole.focal_mm)) {
        throw Error(Errc::InvalidArgument, "camera distance must exceed the focal length");
    }
    if (scene.frame_width < 8 || scene.frame_height < 8) {
        throw Error(Errc::InvalidArgument, "frame must be at least 8x8");
    }
    if (scene.noise_sigma < 0.0) {
        throw Error(Errc::InvalidArgument, "noise sigma must be >= 0");
    }
    if (scene.profile.empty()) {
        throw Error(Errc::InvalidArgument, "profile needs at least one segment");
    }
    if (scene.profile.front().from_frame > 0) {
        throw Error(Errc::InvalidArgument, "first profile segment must start at frame 0");
    }
    long prev = std::numeric_limits<long>::min();
    for (const auto& seg : scene.profile) {
        // major == minor == 0 expresses "no filament in view"
        const bool empty = seg.major_mm == 0.0 && seg.minor_mm == 0.0;
        if (!empty && (!(seg.minor_mm > 0.0) || seg.minor_mm > seg.major_mm)) {
            throw Error(Errc::InvalidArgument, "profile axes must satisfy major >= minor > 0");
        }
        if (seg.from_frame < prev) {
            throw Error(Errc::InvalidArgument, "profile segments must be sorted by from_frame");
        }
        prev = seg.from_frame;
    }
    if (!(scene.nominal_diameter_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "nominal diameter must be > 0");
    }
}

std::pair<Frame, GroundTruth> render_frame(const SynthScene& scene, long index) {
    validate(scene);

    const ProfileSegment& seg = active_segment(scene, index);
    const double l_main = scene.camera_distance_mm;
    const double l_upper = l_main + scene.upper_path_extra_mm;
    const double l_lower = l_main + scene.lower_path_extra_mm;

    // Main view measures the image-vertical cross-section axis, the two mirror
    // views the perpendicular one.
    const double w_main_mm = ellipse_extent(seg.major_mm, seg.minor_mm, seg.orientation_rad);
    const double w_mirror_mm =
        ellipse_extent(seg.major_mm, seg.minor_mm, seg.orientation_rad + kPi / 2.0);

    BandGeometry main{scene.main_center_row,
                      scene.pinhole.px_per_object_mm(l_main) * w_main_mm, 0.0};
    BandGeometry upper{scene.main_center_row -
                           scene.pinhole.px_per_object_mm(l_upper) * scene.upper_offset_mm,
                       scene.pinhole.px_per_object_mm(l_upper) * w_mirror_mm, kPi / 2.0};
    BandGeometry lower{scene.main_center_row +
                           scene.pinhole.px_per_object_mm(l_lower) * scene.lower_offset_mm,
                       scene.pinhole.px_per_object_mm(l_lower) * w_mirror_mm, -kPi / 2.0};

    const bool empty_profile = w_main_mm <= 0.0;
    for (const auto& band : {main, upper, lower}) {
        if (!empty_profile &&
            (band.top() < 1.0 || band.bottom() > static_cast<double>(scene.frame_height) - 2.0)) {
            throw Error(Errc::SceneOutOfFrame, "band rows [" + std::to_string(band.top()) + ", " +
                                                   std::to_string(band.bottom()) +
                                                   "] exceed the frame");
        }
    }

    ImageD canvas = ImageD::Constant(scene.frame_height, scene.frame_width, scene.background);
    FrameRenderer renderer(scene, index);
    if (!empty_profile) {
        renderer.draw_band(canvas, main);
        renderer.draw_band(canvas, upper);
        renderer.draw_band(canvas, lower);
    }

    if (scene.noise_sigma > 0.0) {
        Rng rng(mix_seed(scene.seed, static_cast<std::uint64_t>(index)));
        for (Eigen::Index r = 0; r < canvas.rows(); ++r) {
            for (Eigen::Index c = 0; c < canvas.cols(); ++c) {
                canvas(r, c) += scene.noise_sigma * rng.normal();
            }
        }
    }

    Frame frame;
    frame.index = index;
    frame.period_s = 1.0;
    frame.pixels.resize(canvas.rows(), canvas.cols());
    for (Eigen::Index r = 0; r < canvas.rows(); ++r) {
        for (Eigen::Index c = 0; c < canvas.cols(); ++c) {
            frame.pixels(r, c) =
                static_cast<std::uint8_t>(std::lround(std::clamp(canvas(r, c), 0.0, 255.0)));
        }
    }

    GroundTruth truth;
    truth.index = index;
    truth.true_d_mm = 0.5 * (seg.major_mm + seg.minor_mm);
    truth.true_ovality_pct = (seg.major_mm - seg.minor_mm) / scene.nominal_diameter_mm * 100.0;
    truth.width_main_px = main.width_px;
    truth.width_upper_px = upper.width_px;
    truth.width_lower_px = lower.width_px;
    truth.center_main_px = main.center_row;
    truth.center_upper_px = upper.center_row;
    truth.center_lower_px = lower.center_row;
    truth.separation_px = std::abs(main.center_row - upper.center_row);
    truth.distance_mm = l_main;
    return {std::move(frame), truth};
}

SequenceResult render_sequence(const SynthScene& scene, long count,
                               const std::filesystem::path& directory,
                               const std::string& format) {
    if (count < 1) {
        throw Error(Errc::InvalidArgument, "frame count must be >= 1");
    }
    if (format != "pgm" && format != "png") {
        throw Error(Errc::InvalidArgument, "format must be pgm or png");
    }

    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) {
        throw Error(Errc::IoFailure, "cannot create " + directory.string());
    }

    SequenceResult result;
    result.frame_paths.reserve(count);
    result.truths.reserve(count);
    for (long i = 0; i < count; ++i) {
        auto [frame, truth] = render_frame(scene, i);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05ld.%s", i, format.c_str());
        const auto path = directory / name;
        if (format == "pgm") {
            write_pgm(path, frame.pixels);
        } else {
            write_png(path, frame.pixels);
        }
        result.frame_paths.push_back(path);
        result.truths.push_back(truth);
    }

    std::ofstream out(directory / "ground_truth.json");
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write ground_truth.json");
    }
    out << ground_truth_to_json_text(result.truths);
    return result;
}

SynthScene scene_from_json_text(const std::string& text) {
    try {
        const json j = json::parse(text);
        SynthScene scene;
        scene.pinhole.focal_mm = j.value("focal_mm", scene.pinhole.focal_mm);
        scene.pinhole.px_per_mm_sensor =
            j.value("px_per_mm_sensor", scene.pinhole.px_per_mm_sensor);
        scene.camera_distance_mm = j.value("camera_distance_mm", scene.camera_distance_mm);
        scene.upper_offset_mm = j.value("upper_offset_mm", scene.upper_offset_mm);
        scene.lower_offset_mm = j.value("lower_offset_mm", scene.lower_offset_mm);
        scene.upper_path_extra_mm = j.value("upper_path_extra_mm", scene.upper_path_extra_mm);
        scene.lower_path_extra_mm = j.value("lower_path_extra_mm", scene.lower_path_extra_mm);
        scene.frame_width = j.value("frame_width", scene.frame_width);
        scene.frame_height = j.value("frame_height", scene.frame_height);
        scene.main_center_row = j.value("main_center_row", scene.main_center_row);
        scene.background = j.value("background", scene.background);
        scene.surface_intensity = j.value("surface_intensity", scene.surface_intensity);
        scene.shade_strength = j.value("shade_strength", scene.shade_strength);
        scene.texture_amplitude = j.value("texture_amplitude", scene.texture_amplitude);
        scene.texture_wavelength_mm = j.value("texture_wavelength_mm", scene.texture_wavelength_mm);
        scene.noise_sigma = j.value("noise_sigma", scene.noise_sigma);
        scene.seed = j.value("seed", scene.seed);
        scene.nominal_diameter_mm = j.value("nominal_diameter_mm", scene.nominal_diameter_mm);
        scene.advance_mm_per_frame = j.value("advance_mm_per_frame", scene.advance_mm_per_frame);
        if (j.contains("profile")) {
            scene.profile.clear();
            for (const auto& seg : j.at("profile")) {
                ProfileSegment p;
                p.from_frame = seg.value("from_frame", 0L);
                p.major_mm = seg.at("major_mm").get<double>();
                p.minor_mm = seg.at("minor_mm").get<double>();
                p.orientation_rad = seg.value("orientation_rad", 0.0);
                scene.profile.push_back(p);
            }
        }
        if (j.contains("spots")) {
            for (const auto& s : j.at("spots")) {
                SurfaceSpot spot;
                spot.center_mm = s.at("center_mm").get<double>();
                spot.center_phi_rad = s.at("center_phi_rad").get<double>();
                spot.sigma_mm = s.value("sigma_mm", spot.sigma_mm);
                spot.sigma_phi_rad = s.value("sigma_phi_rad", spot.sigma_phi_rad);
                spot.delta_intensity = s.value("delta_intensity", spot.delta_intensity);
                scene.spots.push_back(spot);
            }
        }
        validate(scene);
        return scene;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("scene JSON: ") + e.what());
    }
}

SynthScene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::FileUnreadable, "cannot open scene: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return scene_from_json_text(buffer.str());
}

std::string scene_to_json_text(const SynthScene& scene) {
    json profile = json::array();
    for (const auto& seg : scene.profile) {
        profile.push_back({{"from_frame", seg.from_frame},
                           {"major_mm", seg.major_mm},
                           {"minor_mm", seg.minor_mm},
                           {"orientation_rad", seg.orientation_rad}});
    }
    json spots = json::array();
    for (const auto& s : scene.spots) {
        spots.push_back({{"center_mm", s.center_mm},
                         {"center_phi_rad", s.center_phi_rad},
                         {"sigma_mm", s.sigma_mm},
                         {"sigma_phi_rad", s.sigma_phi_rad},
                         {"delta_intensity", s.delta_intensity}});
    }
    json j{{"focal_mm", scene.pinhole.focal_mm},
           {"px_per_mm_sensor", scene.pinhole.px_per_mm_sensor},
           {"camera_distance_mm", scene.camera_distance_mm},
           {"upper_offset_mm", scene.upper_offset_mm},
           {"lower_offset_mm", scene.lower_offset_mm},
           {"upper_path_extra_mm", scene.upper_path_extra_mm},
           {"lower_path_extra_mm", scene.lower_path_extra_mm},
           {"frame_width", scene.frame_width},
           {"frame_height", scene.frame_height},
           {"main_center_row", scene.main_center_row},
           {"background", scene.background},
           {"surface_intensity", scene.surface_intensity},
           {"shade_strength", scene.shade_strength},
           {"texture_amplitude", scene.texture_amplitude},
           {"texture_wavelength_mm", scene.texture_wavelength_mm},
           {"noise_sigma", scene.noise_sigma},
           {"seed", scene.seed},
           {"nominal_diameter_mm", scene.nominal_diameter_mm},
           {"advance_mm_per_frame", scene.advance_mm_per_frame},
           {"profile", profile},
           {"spots", spots}};
    return j.dump(2) + "\n";
}

std::string ground_truth_to_json_text(const std::vector<GroundTruth>& truths) {
    json frames = json::array();
    for (const auto& t : truths) {
        frames.push_back(truth_to_json(t));
    }
    return json{{"frames", frames}}.dump(2) + "\n";
}

std::vector<GroundTruth> ground_truth_from_json_text(const std::string& text) {
    try {
        const json j = json::parse(text);
        std::vector<GroundTruth> truths;
        for (const auto& f : j.at("frames")) {
            truths.push_back(truth_from_json(f));
        }
        return truths;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("ground truth JSON: ") + e.what());
    }
}

} // namespace filagauge
