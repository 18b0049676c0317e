#include <filagauge/pipeline.hpp>
#include <filagauge/log.hpp>
#include <filagauge/segmentation.hpp>
#include <filagauge/spool.hpp>
#include <filagauge/version.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace filagauge {

namespace {

using json = nlohmann::json;

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write " + path.string());
    }
    out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::FileUnreadable, "cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_manifest(const MeasureOptions& options) {
    json j{{"config", std::filesystem::absolute(options.config).string()},
           {"calibration", std::filesystem::absolute(options.calibration).string()},
           {"input_dir", std::filesystem::absolute(options.input_dir).string()},
           {"output_dir", std::filesystem::absolute(options.output_dir).string()},
           {"tool_version", kVersion},
           {"timestamp", utc_timestamp()}};
    write_text_file(options.output_dir / "manifest.json", j.dump(2) + "\n");
}

ImageU8 patch_to_image(const PseudoSurfacePatch& patch) {
    ImageU8 image(patch.cells.rows(), patch.cells.cols());
    for (Eigen::Index r = 0; r < patch.cells.rows(); ++r) {
        for (Eigen::Index c = 0; c < patch.cells.cols(); ++c) {
            image(r, c) = static_cast<std::uint8_t>(
                std::lround(std::clamp(patch.cells(r, c), 0.0, 255.0)));
        }
    }
    return image;
}

// One worker-pool result slot: a measurement, or the reason the frame dropped.
struct FrameSlot {
    std::optional<FrameMeasurement> fm;
    std::exception_ptr error;
};

void measure_chunk(const std::vector<std::filesystem::path>& paths, std::size_t begin,
                   std::size_t end, const RigConfig& rig, const ProjectionCalibration& calib,
                   int workers, std::vector<FrameSlot>& slots) {
    std::atomic<std::size_t> cursor{begin};
    auto work = [&]() {
        for (std::size_t i = cursor.fetch_add(1); i < end; i = cursor.fetch_add(1)) {
            FrameSlot& slot = slots[i - begin];
            try {
                const Frame frame = load_frame(paths[i], static_cast<long>(i), rig.period_s);
                slot.fm = measure_frame(frame, rig, calib);
            } catch (...) {
                slot.error = std::current_exception();
            }
        }
    };

    if (workers <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back(work);
    }
    for (auto& t : pool) {
        t.join();
    }
}

struct ProjectionAverages {
    double separation_px = 0.0;
    double width_main_px = 0.0;
    double width_upper_px = 0.0;
    double width_lower_px = 0.0;
};

// Mean mirror separation and per-projection band widths over a sample directory.
ProjectionAverages average_sample_dir(const std::filesystem::path& dir, const RigConfig& rig) {
    const auto paths = scan_sequence(dir);

    double sep_sum = 0.0;
    double width_sum[3] = {0.0, 0.0, 0.0};
    long width_count[3] = {0, 0, 0};
    long good_frames = 0;

    for (std::size_t i = 0; i < paths.size(); ++i) {
        try {
            const Frame frame = load_frame(paths[i], static_cast<long>(i), rig.period_s);
            validate(rig, frame.width(), frame.height());
            const Rect rois[3] = {rig.roi_main, rig.roi_upper, rig.roi_lower};
            EdgeMask masks[3];
            for (int p = 0; p < 3; ++p) {
                masks[p] = build_mask(extract_roi(frame, rois[p]), rig.gradient_threshold);
            }
            const Eigen::VectorXd main_cl =
                centerline(masks[0]).array() + static_cast<double>(rig.roi_main.y);
            const Eigen::VectorXd upper_cl =
                centerline(masks[1]).array() + static_cast<double>(rig.roi_upper.y);
            sep_sum += separation(main_cl, upper_cl);
            for (int p = 0; p < 3; ++p) {
                for (const auto& band : masks[p].columns) {
                    if (band.has_value()) {
                        width_sum[p] += band->width_px();
                        ++width_count[p];
                    }
                }
            }
            ++good_frames;
        } catch (const Error& e) {
            log_warn("calibration frame skipped (" + paths[i].filename().string() +
                     "): " + e.what());
        }
    }

    if (good_frames == 0 || width_count[0] == 0 || width_count[1] == 0 || width_count[2] == 0) {
        throw Error(Errc::EmptySequence, "no usable calibration frames in " + dir.string());
    }
    return {sep_sum / good_frames, width_sum[0] / width_count[0], width_sum[1] / width_count[1],
            width_sum[2] / width_count[2]};
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw Error(Errc::InvalidArgument, "CSV misses column " + name);
        }
        return static_cast<int>(it - header.begin());
    }
};

CsvTable parse_csv(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) {
            fields.push_back(field);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

struct ColumnStats {
    int count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    double in_tolerance_pct = 0.0;
    std::vector<double> values;
};

ColumnStats column_stats(const CsvTable& table, int col, double nominal, double tol) {
    ColumnStats s;
    for (const auto& row : table.rows) {
        if (col >= static_cast<int>(row.size()) || row[col].empty()) {
            continue;
        }
        try {
            s.values.push_back(std::stod(row[col]));
        } catch (const std::exception&) {
            throw Error(Errc::InvalidArgument, "non-numeric CSV field: " + row[col]);
        }
    }
    s.count = static_cast<int>(s.values.size());
    if (s.count == 0) {
        return s;
    }
    double sum = 0.0;
    s.min = s.values.front();
    s.max = s.values.front();
    int inside = 0;
    for (double v : s.values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        if (std::abs(v - nominal) <= tol) {
            ++inside;
        }
    }
    s.mean = sum / s.count;
    double ss = 0.0;
    for (double v : s.values) {
        ss += (v - s.mean) * (v - s.mean);
    }
    s.stddev = std::sqrt(ss / s.count);
    s.in_tolerance_pct = 100.0 * inside / s.count;
    return s;
}

constexpr int kHistogramBins = 30;

std::vector<long> histogram(const std::vector<double>& values, double lo, double hi) {
    std::vector<long> bins(kHistogramBins, 0);
    const double span = hi - lo;
    for (double v : values) {
        int b = span > 0.0 ? static_cast<int>((v - lo) / span * kHistogramBins) : 0;
        b = std::clamp(b, 0, kHistogramBins - 1);
        ++bins[b];
    }
    return bins;
}

std::string histogram_svg(const std::string& title, const std::vector<long>& bins, double lo,
                          double hi) {
    constexpr int kW = 640, kH = 360, kMargin = 40;
    const long peak = std::max<long>(1, *std::max_element(bins.begin(), bins.end()));
    const double bar_w = static_cast<double>(kW - 2 * kMargin) / bins.size();

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << title << "</text>\n";
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const double h = static_cast<double>(bins[i]) / peak * (kH - 2 * kMargin);
        svg << "<rect x=\"" << kMargin + i * bar_w << "\" y=\"" << kH - kMargin - h << "\" width=\""
            << bar_w * 0.9 << "\" height=\"" << h << "\" fill=\"steelblue\"/>\n";
    }
    char lo_s[32], hi_s[32];
    std::snprintf(lo_s, sizeof(lo_s), "%.4f", lo);
    std::snprintf(hi_s, sizeof(hi_s), "%.4f", hi);
    svg << "<text x=\"" << kMargin << "\" y=\"" << kH - 12 << "\" font-size=\"12\">" << lo_s
        << "</text>\n"
        << "<text x=\"" << kW - kMargin << "\" y=\"" << kH - 12
        << "\" text-anchor=\"end\" font-size=\"12\">" << hi_s << "</text>\n</svg>\n";
    return svg.str();
}

} // namespace

int run_measure(const MeasureOptions& options) {
    RigConfig rig;
    ProjectionCalibration calib;
    try {
        rig = load_rig_config(options.config);
        calib = load_calibration(options.calibration);
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::config_error;
    }

    std::vector<std::filesystem::path> paths;
    try {
        paths = scan_sequence(options.input_dir);
        std::filesystem::create_directories(options.output_dir);
        if (options.dump_patches) {
            std::filesystem::create_directories(options.output_dir / "patches");
        }
        write_manifest(options);
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::io_error;
    } catch (const std::filesystem::filesystem_error& e) {
        log_error(e.what());
        return exit_code::io_error;
    }

    // Fail fast on a config/frame geometry mismatch before spinning up workers.
    try {
        const Frame first = load_frame(paths.front(), 0, rig.period_s);
        validate(rig, first.width(), first.height());
    } catch (const Error& e) {
        log_error(e.what());
        return e.code() == Errc::FileUnreadable || e.code() == Errc::UnsupportedFormat
                   ? exit_code::io_error
                   : exit_code::config_error;
    }

    const int workers = std::max(1, options.workers);
    const std::size_t chunk = std::max<std::size_t>(64, static_cast<std::size_t>(workers) * 16);

    MeasurementLog log(rig.feed_rate_mm_s, rig.period_s);
    TextureBaseline baseline;
    long next_index = 0;

    try {
        std::vector<FrameSlot> slots;
        for (std::size_t begin = 0; begin < paths.size(); begin += chunk) {
            const std::size_t end = std::min(paths.size(), begin + chunk);
            slots.assign(end - begin, {});
            measure_chunk(paths, begin, end, rig, calib, workers, slots);

            for (std::size_t i = 0; i < slots.size(); ++i) {
                FrameSlot& slot = slots[i];
                if (slot.error) {
                    try {
                        std::rethrow_exception(slot.error);
                    } catch (const Error& e) {
                        if (e.code() == Errc::FileUnreadable ||
                            e.code() == Errc::UnsupportedFormat) {
                            log_warn("frame skipped (" +
                                     paths[begin + i].filename().string() + "): " + e.what());
                            continue;
                        }
                        throw;
                    }
                }
                FrameMeasurement& fm = *slot.fm;
                fm.index = next_index++;  // decodable-frame order defines the log position
                if (fm.patch.has_value()) {
                    fm.patch->frame_index = fm.index;
                    if (baseline.ready()) {
                        fm.anomaly = anomaly_score(*fm.patch, baseline);
                    } else {
                        baseline.observe(*fm.patch);
                    }
                    if (options.dump_patches) {
                        char name[32];
                        std::snprintf(name, sizeof(name), "patch_%ld.pgm", fm.index);
                        write_pgm(options.output_dir / "patches" / name,
                                  patch_to_image(*fm.patch));
                    }
                }
                log.append(fm);
            }
        }

        if (log.entries().empty()) {
            throw Error(Errc::EmptySequence, "no frame in " + options.input_dir.string() +
                                                 " could be decoded");
        }
        write_text_file(options.output_dir / "measurements.csv", log.to_csv());
        write_text_file(options.output_dir / "defects.json", log.defects_to_json_text());
    } catch (const Error& e) {
        log_error(e.what());
        return e.code() == Errc::IoFailure || e.code() == Errc::EmptySequence
                   ? exit_code::io_error
                   : exit_code::config_error;
    }

    log_info("measured " + std::to_string(log.entries().size()) + " frames");
    return log.defect_intervals().empty() ? exit_code::ok : exit_code::defects_found;
}

std::vector<CalibrateSample> calibrate_samples_from_json_text(const std::string& text) {
    try {
        const json j = json::parse(text);
        std::vector<CalibrateSample> samples;
        for (const auto& s : j) {
            CalibrateSample sample;
            sample.dir = s.at("dir").get<std::string>();
            sample.diameter_mm = s.at("diameter_mm").get<double>();
            sample.distance_mm = s.value("distance_mm", 0.0);
            if (!(sample.diameter_mm > 0.0)) {
                throw Error(Errc::InvalidArgument, "sample diameter must be > 0");
            }
            samples.push_back(std::move(sample));
        }
        return samples;
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidArgument, std::string("samples JSON: ") + e.what());
    }
}

int run_calibrate(const CalibrateOptions& options) {
    RigConfig rig;
    std::vector<CalibrateSample> samples;
    try {
        rig = load_rig_config(options.config);
        samples = calibrate_samples_from_json_text(read_text_file(options.samples));
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::config_error;
    }
    if (samples.size() < 2) {
        log_error("calibration needs at least 2 sample sets");
        return exit_code::config_error;
    }

    std::vector<CalibrationSample> fit_main, fit_upper, fit_lower;
    try {
        for (const auto& sample : samples) {
            const ProjectionAverages avg = average_sample_dir(sample.dir, rig);
            fit_main.push_back(
                {avg.separation_px, sample.distance_mm, sample.diameter_mm / avg.width_main_px});
            fit_upper.push_back(
                {avg.separation_px, sample.distance_mm, sample.diameter_mm / avg.width_upper_px});
            fit_lower.push_back(
                {avg.separation_px, sample.distance_mm, sample.diameter_mm / avg.width_lower_px});
            log_info(sample.dir.string() + ": separation " + std::to_string(avg.separation_px) +
                     " px, main width " + std::to_string(avg.width_main_px) + " px");
        }
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::io_error;
    }

    ProjectionCalibration calib;
    try {
        calib.main = fit_calibration(fit_main);
        calib.upper = fit_calibration(fit_upper);
        calib.lower = fit_calibration(fit_lower);
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::config_error;
    }

    try {
        save_calibration(options.output, calib);
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::io_error;
    }

    const double worst = std::max(
        {calib.main.residual_rms, calib.upper.residual_rms, calib.lower.residual_rms});
    log_info("calibration residual RMS (mm/px): main " + std::to_string(calib.main.residual_rms) +
             ", upper " + std::to_string(calib.upper.residual_rms) + ", lower " +
             std::to_string(calib.lower.residual_rms));
    if (worst > options.max_residual_mm_per_px) {
        log_error("residual RMS " + std::to_string(worst) + " mm/px exceeds " +
                  std::to_string(options.max_residual_mm_per_px));
        return exit_code::residual_too_high;
    }
    return exit_code::ok;
}

int run_synth(const SynthOptions& options) {
    SynthScene scene;
    try {
        scene = load_scene(options.scene);
        if (options.seed.has_value()) {
            scene.seed = *options.seed;
        }
        if (options.count < 1) {
            throw Error(Errc::InvalidArgument, "count must be >= 1");
        }
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::config_error;
    }

    try {
        render_sequence(scene, options.count, options.output_dir, options.format);
    } catch (const Error& e) {
        log_error(e.what());
        return e.code() == Errc::IoFailure ? exit_code::io_error : exit_code::config_error;
    }
    log_info("rendered " + std::to_string(options.count) + " frames to " +
             options.output_dir.string());
    return exit_code::ok;
}

int run_report(const ReportOptions& options, std::ostream& out) {
    CsvTable table;
    try {
        table = parse_csv(read_text_file(options.log_csv));
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::config_error;
    }
    if (table.rows.empty()) {
        log_error("log CSV has no data rows: " + options.log_csv.string());
        return exit_code::config_error;
    }

    const struct {
        const char* name;
        const char* column;
    } projections[] = {{"main", "d_main_mm"},
                       {"upper", "d_upper_mm"},
                       {"lower", "d_lower_mm"},
                       {"pooled", "d_mean_mm"}};

    char line[256];
    std::snprintf(line, sizeof(line), "nominal %.3f mm, tolerance +/- %.3f mm, %zu frames",
                  options.nominal_mm, options.tolerance_mm, table.rows.size());
    out << line << "\n";
    out << "projection     n      mean       std       min       max   in-tol%\n";

    std::vector<std::pair<std::string, ColumnStats>> stats;
    for (const auto& proj : projections) {
        ColumnStats s = column_stats(table, table.column(proj.column), options.nominal_mm,
                                     options.tolerance_mm);
        std::snprintf(line, sizeof(line), "%-10s %5d  %8.4f  %8.4f  %8.4f  %8.4f   %6.2f",
                      proj.name, s.count, s.mean, s.stddev, s.min, s.max, s.in_tolerance_pct);
        out << line << "\n";
        stats.emplace_back(proj.name, std::move(s));
    }

    const ColumnStats ov =
        column_stats(table, table.column("ovality_pct"), options.nominal_mm, options.tolerance_mm);
    if (ov.count > 0) {
        std::snprintf(line, sizeof(line), "ovality%%   %5d  %8.4f  %8.4f  %8.4f  %8.4f",
                      ov.count, ov.mean, ov.stddev, ov.min, ov.max);
        out << line << "\n";
    }

    if (options.output_dir.has_value()) {
        try {
            std::filesystem::create_directories(*options.output_dir);
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& [name, s] : stats) {
                if (s.count > 0) {
                    lo = std::min(lo, s.min);
                    hi = std::max(hi, s.max);
                }
            }
            std::ostringstream csv;
            csv << "projection,bin_lo,bin_hi,count\n";
            for (const auto& [name, s] : stats) {
                if (s.count == 0) {
                    continue;
                }
                const auto bins = histogram(s.values, lo, hi);
                for (std::size_t b = 0; b < bins.size(); ++b) {
                    char row[128];
                    std::snprintf(row, sizeof(row), "%s,%.6f,%.6f,%ld\n", name.c_str(),
                                  lo + (hi - lo) * b / kHistogramBins,
                                  lo + (hi - lo) * (b + 1) / kHistogramBins, bins[b]);
                    csv << row;
                }
                if (options.write_svg) {
                    write_text_file(*options.output_dir / ("histogram_" + name + ".svg"),
                                    histogram_svg("diameter (mm): " + name, bins, lo, hi));
                }
            }
            write_text_file(*options.output_dir / "histogram.csv", csv.str());
        } catch (const Error& e) {
            log_error(e.what());
            return exit_code::io_error;
        }
    }
    return exit_code::ok;
}

int run_spool(double radius_mm, int turns_per_layer, int layers, double filament_mm,
              std::optional<double> feed_rate_mm_s, std::ostream& out) {
    SpoolSpec spec{radius_mm, turns_per_layer, layers, filament_mm};
    try {
        validate(spec);
        char line[160];
        std::snprintf(line, sizeof(line), "spool R=%.3f mm, n=%d, m=%d, d=%.3f mm", radius_mm,
                      turns_per_layer, layers, filament_mm);
        out << line << "\n";
        for (int k = 1; k <= layers; ++k) {
            std::snprintf(line, sizeof(line), "layer %3d: length %12.3f mm", k,
                          layer_length_mm(spec, k));
            out << line << "\n";
        }
        std::snprintf(line, sizeof(line), "total length: %.3f mm (%.3f m)", total_length_mm(spec),
                      total_length_mm(spec) / 1000.0);
        out << line << "\n";

        if (feed_rate_mm_s.has_value()) {
            std::snprintf(line, sizeof(line), "schedule at feed %.3f mm/s:", *feed_rate_mm_s);
            out << line << "\n";
            for (const auto& s : speed_schedule(spec, *feed_rate_mm_s)) {
                std::snprintf(line, sizeof(line),
                              "layer %3d: %10.6f rev/s (%8.3f rpm), duration %10.3f s, "
                              "switch at %12.3f s",
                              s.layer, s.omega_rev_s, s.omega_rev_s * 60.0, s.duration_s,
                              s.switch_time_s);
                out << line << "\n";
            }
        }
    } catch (const Error& e) {
        log_error(e.what());
        return exit_code::config_error;
    }
    return exit_code::ok;
}

} // namespace filagauge
