#pragma once

#include <filagauge/error.hpp>
#include <filagauge/image.hpp>

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace filagauge {

/// Sub-pixel filament edges within one single-pixel slice (column).
/// Coordinates are row positions; pixel r spans [r-0.5, r+0.5).
struct EdgePair {
    double top_edge = 0.0;
    double bottom_edge = 0.0;

    double width_px() const { return bottom_edge - top_edge; }
    double midpoint() const { return 0.5 * (top_edge + bottom_edge); }
};

/// Per-column edge map over a strip. Columns where no band was found are absent.
struct EdgeMask {
    std::vector<std::optional<EdgePair>> columns;

    int width() const { return static_cast<int>(columns.size()); }
    int present_count() const;
};

/// A strip with its detected band straightened onto a constant row.
struct SlicedStrip {
    ImageU8 rectified;                                  // same shape as the input strip
    std::vector<std::optional<EdgePair>> mask;          // edges in input coordinates
    std::vector<std::optional<EdgePair>> rectified_mask; // edges in rectified coordinates
    Eigen::VectorXd centerline;                         // smoothed midline that was applied
    double target_row = 0.0;
};

/// Finds the filament band in one slice by gradient threshold.
/// The discrete gradient g[i] = I[i+1] - I[i] sits at row i+0.5; an edge is the
/// |g|-weighted centroid of the contiguous same-sign gradient run containing the
/// threshold crossing. Throws Error{NoFilament} when no crossing pair exists and
/// Error{AmbiguousBand} when several candidate bands exist.
EdgePair detect_edges(const ColU8& slice, double threshold);

/// Applies detect_edges to every column. NoFilament columns are recorded absent;
/// AmbiguousBand columns pick the candidate whose midpoint is nearest the last
/// resolved column (absent if there is none yet). Throws Error{MaskTooSparse}
/// when fewer than half of the columns yield edges.
EdgeMask build_mask(const ImageU8& strip, double threshold);

/// Sub-pixel midline per column: band midpoints, absent columns filled by linear
/// interpolation of their neighbors, then a centered moving average (window 5).
Eigen::VectorXd centerline(const EdgeMask& mask);

/// Shifts every column by midline[c] - target_row (target_row = height / 2) with
/// linear sub-pixel resampling so the midline becomes flat.
/// Throws Error{ShiftOutOfRange} if a shift moves the band outside the strip.
SlicedStrip rectify(const ImageU8& strip, const EdgeMask& mask, const Eigen::VectorXd& midline);

/// Convenience: build_mask + centerline + rectify.
SlicedStrip slice_strip(const ImageU8& strip, double threshold);

} // namespace filagauge
