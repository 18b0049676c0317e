#include <filagauge/calibration.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace filagauge {

namespace {

using json = nlohmann::json;

json model_to_json(const CalibrationModel& m) {
    return json{{"x1", m.x1},
                {"y1", m.y1},
                {"z1", m.z1},
                {"a", m.a},
                {"b", m.b},
                {"c", m.c},
                {"valid_x_range", json::array({m.x_min, m.x_max})},
                {"residual_rms", m.residual_rms}};
}

CalibrationModel model_from_json(const json& j) {
    CalibrationModel m;
    m.x1 = j.at("x1").get<double>();
    m.y1 = j.at("y1").get<double>();
    m.z1 = j.at("z1").get<double>();
    m.a = j.at("a").get<double>();
    m.b = j.at("b").get<double>();
    m.c = j.at("c").get<double>();
    const auto& range = j.at("valid_x_range");
    m.x_min = range.at(0).get<double>();
    m.x_max = range.at(1).get<double>();
    m.residual_rms = j.at("residual_rms").get<double>();
    if (m.a == 0.0) {
        throw Error(Errc::InvalidArgument, "calibration direction has a == 0");
    }
    return m;
}

} // namespace

double project(double object_mm, double focal_mm, double distance_mm) {
    if (!(distance_mm > 0.0)) {
        throw Error(Errc::NonPositiveDistance, "distance must be > 0");
    }
    if (!(focal_mm > 0.0)) {
        throw Error(Errc::NonPositiveDistance, "focal length must be > 0");
    }
    if (object_mm < 0.0) {
        throw Error(Errc::InvalidArgument, "object size must be >= 0");
    }
    // Grouped so that L == F yields exactly W.
    return object_mm * (focal_mm / distance_mm);
}

double separation(const Eigen::VectorXd& main_centerline,
                  const Eigen::VectorXd& mirror_centerline) {
    if (main_centerline.size() == 0 || mirror_centerline.size() == 0) {
        throw Error(Errc::EmptyCenterline, "separation needs two nonempty centerlines");
    }
    return std::abs(main_centerline.mean() - mirror_centerline.mean());
}

CalibrationModel fit_calibration(std::span<const CalibrationSample> samples) {
    const std::size_t n = samples.size();
    if (n < 2) {
        throw Error(Errc::TooFewSamples, "calibration needs at least 2 samples");
    }

    CalibrationModel m;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (const auto& s : samples) {
        sx += s.x_px;
        sy += s.y_mm;
        sz += s.z_mm_per_px;
    }
    m.x1 = sx / n;
    m.y1 = sy / n;
    m.z1 = sz / n;

    double sxx = 0.0, sxy = 0.0, sxz = 0.0;
    m.x_min = samples[0].x_px;
    m.x_max = samples[0].x_px;
    for (const auto& s : samples) {
        const double dx = s.x_px - m.x1;
        sxx += dx * dx;
        sxy += dx * (s.y_mm - m.y1);
        sxz += dx * (s.z_mm_per_px - m.z1);
        m.x_min = std::min(m.x_min, s.x_px);
        m.x_max = std::max(m.x_max, s.x_px);
    }
    if (sxx == 0.0) {
        throw Error(Errc::DegenerateSamples, "all separations identical, cannot fit a line");
    }

    const double slope_y = sxy / sxx;
    const double slope_z = sxz / sxx;
    const double norm = std::sqrt(1.0 + slope_y * slope_y + slope_z * slope_z);
    m.a = 1.0 / norm;
    m.b = slope_y / norm;
    m.c = slope_z / norm;

    double ss = 0.0;
    for (const auto& s : samples) {
        const double r = s.z_mm_per_px - (m.z1 + slope_z * (s.x_px - m.x1));
        ss += r * r;
    }
    m.residual_rms = std::sqrt(ss / n);
    return m;
}

ScaleResult scale_for(const CalibrationModel& model, double x_px) {
    if (model.a == 0.0) {
        throw Error(Errc::DegenerateSamples, "calibration direction has a == 0");
    }
    const double t = (x_px - model.x1) / model.a;
    ScaleResult r;
    r.y_mm = model.y1 + model.b * t;
    r.s_mm_per_px = model.z1 + model.c * t;
    r.extrapolated = x_px < model.x_min || x_px > model.x_max;
    return r;
}

double px_to_mm(double d_px, double s_mm_per_px) {
    if (!(s_mm_per_px > 0.0)) {
        throw Error(Errc::NonPositiveScale, "scale factor must be > 0");
    }
    if (d_px < 0.0) {
        throw Error(Errc::InvalidArgument, "pixel width must be >= 0");
    }
    return d_px * s_mm_per_px;
}

ProjectionCalibration calibration_from_json_text(const std::string& text) {
    try {
        const json j = json::parse(text);
        ProjectionCalibration calib;
        calib.main = model_from_json(j.at("main"));
        calib.upper = model_from_json(j.at("upper"));
        calib.lower = model_from_json(j.at("lower"));
        return calib;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("calibration JSON: ") + e.what());
    }
}

ProjectionCalibration load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::FileUnreadable, "cannot open calibration: " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return calibration_from_json_text(buffer.str());
}

std::string calibration_to_json_text(const ProjectionCalibration& calib) {
    json j{{"main", model_to_json(calib.main)},
           {"upper", model_to_json(calib.upper)},
           {"lower", model_to_json(calib.lower)}};
    return j.dump(2) + "\n";
}

void save_calibration(const std::filesystem::path& path, const ProjectionCalibration& calib) {
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write calibration: " + path.string());
    }
    out << calibration_to_json_text(calib);
}

} // namespace filagauge
