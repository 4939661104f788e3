#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "perspface/geometry.hpp"

namespace perspface {

/// Barycentric weights below this are still treated as inside, so pixel
/// centers exactly on a shared edge are covered by both triangles.
inline constexpr double kInsideTolerance = 1e-10;

/// Triangles with |signed area| at or below this (px^2) are skipped.
inline constexpr double kMinTriangleArea = 1e-12;

/// Precomputed 2D triangle for repeated point queries.
class RasterTriangle {
public:
    RasterTriangle(const Vec2& a, const Vec2& b, const Vec2& c)
        : a_(a), ab_(b - a), ac_(c - a), twice_area_(ab_.x() * ac_.y() - ab_.y() * ac_.x()) {
        lo_ = a.cwiseMin(b).cwiseMin(c);
        hi_ = a.cwiseMax(b).cwiseMax(c);
    }

    bool degenerate() const { return std::abs(0.5 * twice_area_) <= kMinTriangleArea; }
    const Vec2& lower() const { return lo_; }
    const Vec2& upper() const { return hi_; }

    /// Weights (w_a, w_b, w_c) with w_a = 1 - w_b - w_c.
    std::array<double, 3> weights(const Vec2& p) const {
        const Vec2 ap = p - a_;
        const double wb = (ap.x() * ac_.y() - ap.y() * ac_.x()) / twice_area_;
        const double wc = (ab_.x() * ap.y() - ab_.y() * ap.x()) / twice_area_;
        return {1.0 - wb - wc, wb, wc};
    }

    std::optional<std::array<double, 3>> weights_if_inside(const Vec2& p) const {
        const auto w = weights(p);
        if (w[0] >= -kInsideTolerance && w[1] >= -kInsideTolerance && w[2] >= -kInsideTolerance) {
            return w;
        }
        return std::nullopt;
    }

private:
    Vec2 a_, ab_, ac_;
    double twice_area_;
    Vec2 lo_, hi_;
};

/// Inclusive integer range of pixel centers (integer coordinates) inside
/// [lo, hi], clamped to [0, size - 1]. Empty when first > last.
inline std::array<int, 2> pixel_span(double lo, double hi, int size) {
    lo = std::max(lo, -1.0);
    hi = std::min(hi, static_cast<double>(size));
    const int first = std::max(0, static_cast<int>(std::ceil(lo - 1e-9)));
    const int last = std::min(size - 1, static_cast<int>(std::floor(hi + 1e-9)));
    return {first, last};
}

}  // namespace perspface
