#pragma once

#include <filagauge/error.hpp>
#include <filagauge/segmentation.hpp>

#include <Eigen/Core>

namespace filagauge {

/// Samples per band when a slice profile is resampled to fixed height.
inline constexpr int kBandSamples = 32;

/// Reflected-light intensity map of one frame's filament section:
/// upper, main and lower band profiles stacked vertically, one column per slice.
struct PseudoSurfacePatch {
    Eigen::MatrixXd cells;  // (3 * kBandSamples) x N, values in [0, 255]
    long frame_index = 0;

    int columns() const { return static_cast<int>(cells.cols()); }
    int rows() const { return static_cast<int>(cells.rows()); }
};

/// Band intensities of one rectified column resampled to kBandSamples values.
/// Sampling spans the band's interior pixel centers [top+0.5, bottom-0.5] with
/// linear interpolation. Throws Error{AbsentColumn} when the column has no band.
Eigen::VectorXd slice_profile(const SlicedStrip& rectified, int column);

/// Stacks the three projections' slice profiles per column (upper, main, lower).
/// Columns absent in any projection are filled by linear interpolation between
/// their nearest complete neighbors. Throws Error{MismatchedWidths}.
PseudoSurfacePatch assemble_patch(const SlicedStrip& upper, const SlicedStrip& main,
                                  const SlicedStrip& lower);

/// Exponential moving per-row statistics over past patches.
class TextureBaseline {
public:
    explicit TextureBaseline(int min_patches = 10, double decay = 0.95)
        : min_patches_(min_patches), decay_(decay) {}

    /// Folds a patch into the statistics without scoring it.
    void observe(const PseudoSurfacePatch& patch);

    int count() const { return count_; }
    bool ready() const { return count_ >= min_patches_; }

    const Eigen::VectorXd& row_mean() const { return mean_; }
    Eigen::VectorXd row_std() const;

private:
    friend double anomaly_score(const PseudoSurfacePatch&, TextureBaseline&);

    void fold(const PseudoSurfacePatch& patch);

    int min_patches_;
    double decay_;
    int count_ = 0;
    Eigen::VectorXd mean_;
    Eigen::VectorXd var_;
};

/// Fraction of patch cells deviating from the baseline row mean by more than
/// three baseline row standard deviations. The baseline is updated with the
/// patch after scoring. Throws Error{InsufficientBaseline} until the baseline
/// has seen its minimum number of patches.
double anomaly_score(const PseudoSurfacePatch& patch, TextureBaseline& baseline);

} // namespace filagauge
