#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace filagauge {

/// Dense row-major raster, scalar per pixel. Row = image row, col = image column.
template <typename Scalar>
using Image = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageU8 = Image<std::uint8_t>;
using ImageD = Image<double>;

/// Reference to one image column (strided view into a row-major matrix).
using ColU8 =
    Eigen::Ref<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>, 0, Eigen::InnerStride<>>;

/// Axis-aligned rectangle in pixel coordinates, origin top-left.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool contains_within(int frame_w, int frame_h) const {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= frame_w && y + h <= frame_h;
    }

    bool intersects(const Rect& o) const {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
    }

    bool operator==(const Rect&) const = default;
};

} // namespace filagauge
