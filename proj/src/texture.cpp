#include <filagauge/texture.hpp>

#include <algorithm>
#include <cmath>

namespace filagauge {

namespace {

double sample_column_linear(const ImageU8& image, int col, double row) {
    const Eigen::Index h = image.rows();
    const double clamped = std::clamp(row, 0.0, static_cast<double>(h - 1));
    const Eigen::Index r0 = static_cast<Eigen::Index>(std::floor(clamped));
    const Eigen::Index r1 = std::min(r0 + 1, h - 1);
    const double frac = clamped - static_cast<double>(r0);
    return (1.0 - frac) * image(r0, col) + frac * image(r1, col);
}

} // namespace

Eigen::VectorXd slice_profile(const SlicedStrip& rectified, int column) {
    if (column < 0 || column >= static_cast<int>(rectified.rectified_mask.size())) {
        throw Error(Errc::InvalidArgument, "column index out of range");
    }
    const auto& band = rectified.rectified_mask[column];
    if (!band.has_value()) {
        throw Error(Errc::AbsentColumn, "column " + std::to_string(column) + " has no band");
    }

    // Sample across the band's interior pixel centers, endpoints inclusive.
    double lo = band->top_edge + 0.5;
    double hi = band->bottom_edge - 0.5;
    if (hi < lo) {
        lo = hi = band->midpoint();
    }

    Eigen::VectorXd profile(kBandSamples);
    const double step = (hi - lo) / (kBandSamples - 1);
    for (int k = 0; k < kBandSamples; ++k) {
        profile[k] = sample_column_linear(rectified.rectified, column, lo + k * step);
    }
    return profile;
}

PseudoSurfacePatch assemble_patch(const SlicedStrip& upper, const SlicedStrip& main,
                                  const SlicedStrip& lower) {
    const int n = static_cast<int>(main.rectified_mask.size());
    if (static_cast<int>(upper.rectified_mask.size()) != n ||
        static_cast<int>(lower.rectified_mask.size()) != n) {
        throw Error(Errc::MismatchedWidths, "projections disagree on column count");
    }

    PseudoSurfacePatch patch;
    patch.cells.resize(3 * kBandSamples, n);
    std::vector<bool> complete(n, false);

    const SlicedStrip* strips[] = {&upper, &main, &lower};
    for (int c = 0; c < n; ++c) {
        const bool ok = upper.rectified_mask[c].has_value() &&
                        main.rectified_mask[c].has_value() &&
                        lower.rectified_mask[c].has_value();
        complete[c] = ok;
        if (!ok) {
            continue;
        }
        for (int s = 0; s < 3; ++s) {
            patch.cells.block(s * kBandSamples, c, kBandSamples, 1) =
                slice_profile(*strips[s], c);
        }
    }

    // Horizontal neighbor interpolation for incomplete columns.
    int prev = -1;
    bool any = false;
    for (int c = 0; c < n; ++c) {
        if (!complete[c]) {
            continue;
        }
        any = true;
        if (prev < 0) {
            for (int k = 0; k < c; ++k) {
                patch.cells.col(k) = patch.cells.col(c);
            }
        } else if (prev + 1 < c) {
            for (int k = prev + 1; k < c; ++k) {
                const double t = static_cast<double>(k - prev) / (c - prev);
                patch.cells.col(k) = (1.0 - t) * patch.cells.col(prev) + t * patch.cells.col(c);
            }
        }
        prev = c;
    }
    if (!any) {
        throw Error(Errc::AbsentColumn, "no column is complete in all three projections");
    }
    for (int k = prev + 1; k < n; ++k) {
        patch.cells.col(k) = patch.cells.col(prev);
    }
    return patch;
}

void TextureBaseline::fold(const PseudoSurfacePatch& patch) {
    const Eigen::Index rows = patch.cells.rows();
    Eigen::VectorXd row_mean(rows);
    Eigen::VectorXd row_var(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = patch.cells.row(r).mean();
        row_mean[r] = mean;
        row_var[r] = (patch.cells.row(r).array() - mean).square().mean();
    }

    if (count_ == 0) {
        mean_ = row_mean;
        var_ = row_var;
    } else {
        if (mean_.size() != rows) {
            throw Error(Errc::InvalidArgument, "patch row count changed under the baseline");
        }
        mean_ = decay_ * mean_ + (1.0 - decay_) * row_mean;
        var_ = decay_ * var_ + (1.0 - decay_) * row_var;
    }
    ++count_;
}

void TextureBaseline::observe(const PseudoSurfacePatch& patch) { fold(patch); }

Eigen::VectorXd TextureBaseline::row_std() const { return var_.cwiseMax(0.0).cwiseSqrt(); }

double anomaly_score(const PseudoSurfacePatch& patch, TextureBaseline& baseline) {
    if (!baseline.ready()) {
        throw Error(Errc::InsufficientBaseline,
                    "baseline has " + std::to_string(baseline.count()) + " patches, needs " +
                        std::to_string(baseline.min_patches_));
    }
    if (patch.cells.rows() != baseline.mean_.size()) {
        throw Error(Errc::InvalidArgument, "patch row count does not match the baseline");
    }

    const Eigen::VectorXd sigma = baseline.row_std();
    long deviant = 0;
    for (Eigen::Index r = 0; r < patch.cells.rows(); ++r) {
        deviant += ((patch.cells.row(r).array() - baseline.mean_[r]).abs() > 3.0 * sigma[r]).count();
    }
    const double score = static_cast<double>(deviant) / static_cast<double>(patch.cells.size());
    baseline.fold(patch);
    return score;
}

} // namespace filagauge
