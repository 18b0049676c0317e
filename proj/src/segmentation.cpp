#include <filagauge/segmentation.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace filagauge {

namespace {

// One maximal run of same-sign gradient samples containing at least one sample
// at or above the detection threshold. `position` is the |g|-weighted centroid,
// the sub-pixel edge estimate (g[i] = I[i+1] - I[i] lives at row i + 0.5).
struct EdgeEvent {
    double position = 0.0;
    int sign = 0;
};

std::vector<EdgeEvent> edge_events(const ColU8& slice, double threshold) {
    const Eigen::Index n = slice.size();
    std::vector<EdgeEvent> events;

    Eigen::Index i = 0;
    while (i + 1 < n) {
        const double g0 = static_cast<double>(slice[i + 1]) - static_cast<double>(slice[i]);
        const int sign = (g0 > 0.0) - (g0 < 0.0);
        if (sign == 0) {
            ++i;
            continue;
        }
        double weight = 0.0;
        double moment = 0.0;
        bool strong = false;
        Eigen::Index j = i;
        for (; j + 1 < n; ++j) {
            const double g = static_cast<double>(slice[j + 1]) - static_cast<double>(slice[j]);
            const int s = (g > 0.0) - (g < 0.0);
            if (s != sign) {
                break;
            }
            const double mag = std::abs(g);
            weight += mag;
            moment += mag * (static_cast<double>(j) + 0.5);
            strong = strong || mag >= threshold;
        }
        if (strong) {
            events.push_back({moment / weight, sign});
        }
        i = j;
    }
    return events;
}

std::vector<EdgePair> band_candidates(const ColU8& slice, double threshold) {
    if (slice.size() < 3) {
        throw Error(Errc::InvalidArgument, "slice must have at least 3 rows");
    }
    if (!(threshold > 0.0)) {
        throw Error(Errc::InvalidArgument, "gradient threshold must be > 0");
    }

    const auto events = edge_events(slice, threshold);
    std::vector<EdgePair> candidates;
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
        if (events[k].sign == -events[k + 1].sign) {
            candidates.push_back({events[k].position, events[k + 1].position});
        }
    }
    return candidates;
}

double sample_column(const ImageU8& strip, Eigen::Index col, double row) {
    const Eigen::Index h = strip.rows();
    const double clamped = std::clamp(row, 0.0, static_cast<double>(h - 1));
    const Eigen::Index r0 = static_cast<Eigen::Index>(std::floor(clamped));
    const Eigen::Index r1 = std::min(r0 + 1, h - 1);
    const double frac = clamped - static_cast<double>(r0);
    return (1.0 - frac) * strip(r0, col) + frac * strip(r1, col);
}

} // namespace

int EdgeMask::present_count() const {
    return static_cast<int>(
        std::count_if(columns.begin(), columns.end(), [](const auto& c) { return c.has_value(); }));
}

EdgePair detect_edges(const ColU8& slice, double threshold) {
    const auto candidates = band_candidates(slice, threshold);
    if (candidates.empty()) {
        throw Error(Errc::NoFilament, "no opposite-sign gradient crossing pair");
    }
    if (candidates.size() > 1) {
        throw Error(Errc::AmbiguousBand,
                    std::to_string(candidates.size()) + " candidate bands, no prior centerline");
    }
    return candidates.front();
}

EdgeMask build_mask(const ImageU8& strip, double threshold) {
    if (strip.rows() < 3 || strip.cols() < 1) {
        throw Error(Errc::InvalidArgument, "strip must be at least 3 rows by 1 column");
    }

    EdgeMask mask;
    mask.columns.resize(strip.cols());
    std::optional<double> last_midpoint;

    for (Eigen::Index c = 0; c < strip.cols(); ++c) {
        const auto candidates = band_candidates(strip.col(c), threshold);
        if (candidates.size() == 1) {
            mask.columns[c] = candidates.front();
        } else if (candidates.size() > 1 && last_midpoint.has_value()) {
            const auto best = std::min_element(
                candidates.begin(), candidates.end(), [&](const EdgePair& a, const EdgePair& b) {
                    return std::abs(a.midpoint() - *last_midpoint) <
                           std::abs(b.midpoint() - *last_midpoint);
                });
            mask.columns[c] = *best;
        }
        if (mask.columns[c].has_value()) {
            last_midpoint = mask.columns[c]->midpoint();
        }
    }

    if (mask.present_count() * 2 < mask.width()) {
        throw Error(Errc::MaskTooSparse, std::to_string(mask.present_count()) + " of " +
                                             std::to_string(mask.width()) +
                                             " columns yielded edges");
    }
    return mask;
}

Eigen::VectorXd centerline(const EdgeMask& mask) {
    const int n = mask.width();
    if (mask.present_count() == 0) {
        throw Error(Errc::MaskTooSparse, "no columns with edges");
    }

    Eigen::VectorXd mid(n);
    // Midpoints where present, linear interpolation across gaps, nearest value at the ends.
    int prev = -1;
    for (int c = 0; c < n; ++c) {
        if (!mask.columns[c].has_value()) {
            continue;
        }
        mid[c] = mask.columns[c]->midpoint();
        if (prev < 0) {
            for (int k = 0; k < c; ++k) {
                mid[k] = mid[c];
            }
        } else {
            const double step = (mid[c] - mid[prev]) / (c - prev);
            for (int k = prev + 1; k < c; ++k) {
                mid[k] = mid[prev] + step * (k - prev);
            }
        }
        prev = c;
    }
    for (int k = prev + 1; k < n; ++k) {
        mid[k] = mid[prev];
    }

    // Centered moving average, window 5, truncated at the borders.
    Eigen::VectorXd smooth(n);
    for (int c = 0; c < n; ++c) {
        const int lo = std::max(0, c - 2);
        const int hi = std::min(n - 1, c + 2);
        smooth[c] = mid.segment(lo, hi - lo + 1).mean();
    }
    return smooth;
}

SlicedStrip rectify(const ImageU8& strip, const EdgeMask& mask, const Eigen::VectorXd& midline) {
    const Eigen::Index h = strip.rows();
    const Eigen::Index w = strip.cols();
    if (midline.size() != w || mask.width() != w) {
        throw Error(Errc::InvalidArgument, "midline/mask width does not match the strip");
    }

    const double target = static_cast<double>(h) / 2.0;

    SlicedStrip out;
    out.rectified.resize(h, w);
    out.mask = mask.columns;
    out.rectified_mask.resize(w);
    out.centerline = midline;
    out.target_row = target;

    for (Eigen::Index c = 0; c < w; ++c) {
        const double shift = midline[c] - target;
        if (std::abs(shift) >= static_cast<double>(h)) {
            throw Error(Errc::ShiftOutOfRange, "column " + std::to_string(c) + " shift " +
                                                   std::to_string(shift) + " exceeds strip height");
        }
        if (mask.columns[c].has_value()) {
            const EdgePair shifted{mask.columns[c]->top_edge - shift,
                                   mask.columns[c]->bottom_edge - shift};
            if (shifted.top_edge < -0.5 || shifted.bottom_edge > static_cast<double>(h) - 0.5) {
                throw Error(Errc::ShiftOutOfRange,
                            "column " + std::to_string(c) + " band leaves the strip");
            }
            out.rectified_mask[c] = shifted;
        }
        for (Eigen::Index r = 0; r < h; ++r) {
            const double v = sample_column(strip, c, static_cast<double>(r) + shift);
            out.rectified(r, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
        }
    }
    return out;
}

SlicedStrip slice_strip(const ImageU8& strip, double threshold) {
    const EdgeMask mask = build_mask(strip, threshold);
    return rectify(strip, mask, centerline(mask));
}

} // namespace filagauge
