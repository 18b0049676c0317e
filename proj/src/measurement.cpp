#include <filagauge/measurement.hpp>
#include <filagauge/log.hpp>
#include <filagauge/segmentation.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace filagauge {

namespace {

constexpr std::array<std::pair<FrameFlag, const char*>, 4> kFlagTokens{{
    {FrameFlag::OverTolerance, "OverTolerance"},
    {FrameFlag::UnderTolerance, "UnderTolerance"},
    {FrameFlag::OvalityExceeded, "OvalityExceeded"},
    {FrameFlag::SparseData, "SparseData"},
}};

std::string format_double(const char* fmt, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::string opt_field(const std::optional<double>& v, const char* fmt) {
    return v.has_value() ? format_double(fmt, *v) : std::string();
}

struct ProjectionResult {
    bool ok = false;
    SlicedStrip sliced;
    Eigen::VectorXd frame_centerline;  // midline in frame coordinates
};

ProjectionResult process_projection(const Frame& frame, const Rect& roi, double threshold) {
    ProjectionResult result;
    try {
        const ImageU8 strip = extract_roi(frame, roi);
        const EdgeMask mask = build_mask(strip, threshold);
        const Eigen::VectorXd midline = centerline(mask);
        result.sliced = rectify(strip, mask, midline);
        result.frame_centerline = midline.array() + static_cast<double>(roi.y);
        result.ok = true;
    } catch (const Error& e) {
        switch (e.code()) {
        case Errc::MaskTooSparse:
        case Errc::NoFilament:
        case Errc::ShiftOutOfRange:
            log_debug(std::string("projection dropped: ") + e.what());
            break;
        default:
            throw;  // configuration/bounds problems are not per-frame conditions
        }
    }
    return result;
}

std::optional<ProjectionSummary> summarize(const std::vector<SliceMeasurement>& slices,
                                           std::optional<double> SliceMeasurement::* field) {
    ProjectionSummary s;
    s.min_mm = std::numeric_limits<double>::infinity();
    s.max_mm = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& slice : slices) {
        const auto& v = slice.*field;
        if (!v.has_value()) {
            continue;
        }
        sum += *v;
        s.min_mm = std::min(s.min_mm, *v);
        s.max_mm = std::max(s.max_mm, *v);
        ++s.count;
    }
    if (s.count == 0) {
        return std::nullopt;
    }
    s.mean_mm = sum / s.count;
    return s;
}

} // namespace

std::string to_string(FrameFlags flags) {
    std::string out;
    for (const auto& [flag, token] : kFlagTokens) {
        if (flags.has(flag)) {
            if (!out.empty()) {
                out += '|';
            }
            out += token;
        }
    }
    return out;
}

double ovality(double d_max_mm, double d_min_mm, double d_nominal_mm) {
    if (d_max_mm < d_min_mm) {
        throw Error(Errc::InvalidOrder, "d_max < d_min");
    }
    if (!(d_min_mm > 0.0) || !(d_nominal_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "diameters must be > 0");
    }
    return (d_max_mm - d_min_mm) / d_nominal_mm * 100.0;
}

double default_max_ovality_pct(double nominal_mm, double tolerance_mm) {
    return 2.0 * tolerance_mm / nominal_mm * 100.0;
}

FrameMeasurement measure_frame(const Frame& frame, const RigConfig& rig,
                               const ProjectionCalibration& calib) {
    validate(rig, frame.width(), frame.height());

    FrameMeasurement fm;
    fm.index = frame.index;

    ProjectionResult main = process_projection(frame, rig.roi_main, rig.gradient_threshold);
    ProjectionResult upper = process_projection(frame, rig.roi_upper, rig.gradient_threshold);
    ProjectionResult lower = process_projection(frame, rig.roi_lower, rig.gradient_threshold);

    if (!main.ok || !upper.ok || !lower.ok) {
        fm.flags.set(FrameFlag::SparseData);
    }

    std::optional<ScaleResult> s_main, s_upper, s_lower;
    if (main.ok && upper.ok) {
        fm.separation_px = separation(main.frame_centerline, upper.frame_centerline);
        s_main = scale_for(calib.main, *fm.separation_px);
        s_upper = scale_for(calib.upper, *fm.separation_px);
        s_lower = scale_for(calib.lower, *fm.separation_px);
        if (s_main->extrapolated) {
            log_debug("separation " + std::to_string(*fm.separation_px) +
                      " px outside the calibrated range");
        }
    }

    const int n = rig.slice_count();
    fm.slices.resize(n);
    for (int c = 0; c < n; ++c) {
        SliceMeasurement& slice = fm.slices[c];
        slice.column = c;
        auto diameter = [c](const ProjectionResult& p,
                            const std::optional<ScaleResult>& s) -> std::optional<double> {
            if (!p.ok || !s.has_value() || !(s->s_mm_per_px > 0.0)) {
                return std::nullopt;
            }
            const auto& band = p.sliced.mask[c];
            if (!band.has_value()) {
                return std::nullopt;
            }
            return px_to_mm(band->width_px(), s->s_mm_per_px);
        };
        slice.d_main_mm = diameter(main, s_main);
        slice.d_upper_mm = diameter(upper, s_upper);
        slice.d_lower_mm = diameter(lower, s_lower);

        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        int present = 0;
        for (const auto& d : {slice.d_main_mm, slice.d_upper_mm, slice.d_lower_mm}) {
            if (d.has_value()) {
                lo = std::min(lo, *d);
                hi = std::max(hi, *d);
                ++present;
            }
        }
        if (present >= 2) {
            slice.ovality_pct = ovality(hi, lo, rig.nominal_diameter_mm);
        }
    }

    fm.main = summarize(fm.slices, &SliceMeasurement::d_main_mm);
    fm.upper = summarize(fm.slices, &SliceMeasurement::d_upper_mm);
    fm.lower = summarize(fm.slices, &SliceMeasurement::d_lower_mm);

    double pooled_sum = 0.0;
    int pooled_count = 0;
    double ov_sum = 0.0;
    int ov_count = 0;
    for (const auto& slice : fm.slices) {
        for (const auto& d : {slice.d_main_mm, slice.d_upper_mm, slice.d_lower_mm}) {
            if (d.has_value()) {
                pooled_sum += *d;
                ++pooled_count;
            }
        }
        if (slice.ovality_pct.has_value()) {
            ov_sum += *slice.ovality_pct;
            ++ov_count;
        }
    }
    if (pooled_count > 0) {
        fm.pooled_mean_mm = pooled_sum / pooled_count;
    }
    if (ov_count > 0) {
        fm.mean_ovality_pct = ov_sum / ov_count;
    }

    if (main.ok && upper.ok && lower.ok) {
        try {
            fm.patch = assemble_patch(upper.sliced, main.sliced, lower.sliced);
            fm.patch->frame_index = frame.index;
        } catch (const Error& e) {
            // Disjoint column sets across projections degrade to a sparse frame.
            if (e.code() != Errc::AbsentColumn) {
                throw;
            }
            fm.flags.set(FrameFlag::SparseData);
        }
    }

    const FrameFlags tol = flag_tolerance(
        fm, rig.nominal_diameter_mm, rig.tolerance_mm,
        default_max_ovality_pct(rig.nominal_diameter_mm, rig.tolerance_mm));
    fm.flags.bits |= tol.bits;
    return fm;
}

FrameFlags flag_tolerance(const FrameMeasurement& fm, double nominal_mm, double tolerance_mm,
                          double max_ovality_pct) {
    if (!(tolerance_mm > 0.0)) {
        throw Error(Errc::InvalidArgument, "tolerance must be > 0");
    }
    FrameFlags flags;
    for (const auto& summary : {fm.main, fm.upper, fm.lower}) {
        if (!summary.has_value()) {
            continue;
        }
        if (summary->mean_mm > nominal_mm + tolerance_mm) {
            flags.set(FrameFlag::OverTolerance);
        }
        if (summary->mean_mm < nominal_mm - tolerance_mm) {
            flags.set(FrameFlag::UnderTolerance);
        }
    }
    if (fm.mean_ovality_pct.has_value() && *fm.mean_ovality_pct > max_ovality_pct) {
        flags.set(FrameFlag::OvalityExceeded);
    }
    return flags;
}

void MeasurementLog::append(const FrameMeasurement& fm) {
    if (!entries_.empty() && fm.index != entries_.back().index + 1) {
        throw Error(Errc::NonMonotonicIndex,
                    "expected index " + std::to_string(entries_.back().index + 1) + ", got " +
                        std::to_string(fm.index));
    }

    LogEntry entry;
    entry.index = fm.index;
    entry.length_mm = length_of(fm.index);
    if (fm.main) entry.d_main_mm = fm.main->mean_mm;
    if (fm.upper) entry.d_upper_mm = fm.upper->mean_mm;
    if (fm.lower) entry.d_lower_mm = fm.lower->mean_mm;
    entry.d_mean_mm = fm.pooled_mean_mm;
    entry.ovality_pct = fm.mean_ovality_pct;
    entry.anomaly = fm.anomaly;
    entry.flags = fm.flags;
    entries_.push_back(std::move(entry));
}

std::vector<DefectInterval> MeasurementLog::defect_intervals() const {
    std::vector<DefectInterval> intervals;
    for (const auto& [flag, token] : kFlagTokens) {
        std::optional<std::size_t> run_start;
        for (std::size_t i = 0; i <= entries_.size(); ++i) {
            const bool flagged = i < entries_.size() && entries_[i].flags.has(flag);
            if (flagged && !run_start.has_value()) {
                run_start = i;
            } else if (!flagged && run_start.has_value()) {
                intervals.push_back(
                    {entries_[*run_start].length_mm, entries_[i - 1].length_mm, token});
                run_start.reset();
            }
        }
    }
    std::stable_sort(intervals.begin(), intervals.end(),
                     [](const DefectInterval& a, const DefectInterval& b) {
                         return a.start_mm < b.start_mm;
                     });
    return intervals;
}

std::string MeasurementLog::to_csv() const {
    std::ostringstream out;
    out << "frame,length_mm,d_main_mm,d_upper_mm,d_lower_mm,d_mean_mm,ovality_pct,flags,"
           "anomaly_score\n";
    for (const auto& e : entries_) {
        out << e.index << ',' << format_double("%.3f", e.length_mm) << ','
            << opt_field(e.d_main_mm, "%.6f") << ',' << opt_field(e.d_upper_mm, "%.6f") << ','
            << opt_field(e.d_lower_mm, "%.6f") << ',' << opt_field(e.d_mean_mm, "%.6f") << ','
            << opt_field(e.ovality_pct, "%.4f") << ',' << to_string(e.flags) << ','
            << opt_field(e.anomaly, "%.6f") << '\n';
    }
    return out.str();
}

std::string MeasurementLog::defects_to_json_text() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : defect_intervals()) {
        j.push_back({{"start_mm", d.start_mm}, {"end_mm", d.end_mm}, {"reason", d.reason}});
    }
    return j.dump(2) + "\n";
}

} // namespace filagauge
