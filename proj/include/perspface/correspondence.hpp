#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "perspface/geometry.hpp"

namespace perspface {

/// Sampled image pixels (full-image frame, pixel centers at integers).
using PixelSet = Vec2List;

/// H x W binary raster; row-major.
class SegmentationMask {
public:
    SegmentationMask() = default;
    SegmentationMask(int height, int width);

    int height() const { return height_; }
    int width() const { return width_; }
    bool at(int row, int col) const { return values_[index(row, col)] != 0; }
    void set(int row, int col, bool value) { values_[index(row, col)] = value ? 1 : 0; }
    std::span<const std::uint8_t> values() const { return values_; }
    std::size_t count() const;

    bool operator==(const SegmentationMask& other) const = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> values_;
};

struct CorrespondenceEntry {
    int vertex = 0;
    double weight = 0.0;

    bool operator==(const CorrespondenceEntry&) const = default;
};

/// Sparse row-stochastic m x n matrix in compressed-row form. Row i is a
/// distribution over the n canonical vertices for pixel i.
class CorrespondenceMatrix {
public:
    CorrespondenceMatrix() = default;
    explicit CorrespondenceMatrix(std::size_t vertex_count) : cols_(vertex_count) {}

    std::size_t rows() const { return row_start_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return entries_.size(); }

    void append_row(std::span<const CorrespondenceEntry> row);
    std::span<const CorrespondenceEntry> row(std::size_t i) const;

    Eigen::MatrixXd to_dense() const;

    /// Throws NotAProbabilityRow(i) if a row has a negative weight or does
    /// not sum to 1 within `tolerance`, and InvariantViolation for an index
    /// >= cols() or a row longer than `max_entries`.
    void validate(double tolerance = 1e-6, std::size_t max_entries = static_cast<std::size_t>(-1)) const;

    bool operator==(const CorrespondenceMatrix& other) const = default;

private:
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_start_{0};
    std::vector<CorrespondenceEntry> entries_;
};

/// Text form: header `CORR m n`, then one line per row
/// `row_index k idx:weight ...` with shortest round-trip weights.
std::string format_correspondence(const CorrespondenceMatrix& m);
CorrespondenceMatrix parse_correspondence(std::string_view text);
void save_correspondence(const CorrespondenceMatrix& m, const std::filesystem::path& path);
CorrespondenceMatrix load_correspondence(const std::filesystem::path& path);

/// Weights (w_a, w_b, w_c) of p with respect to triangle (a, b, c);
/// w_a is computed as 1 - w_b - w_c. Throws DegenerateTriangle when
/// |area| <= 1e-12 px^2.
std::array<double, 3> barycentric_coordinates(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

enum class BarycentricMode {
    ScreenSpace,
    /// Weights divided by vertex depth and renormalized.
    PerspectiveCorrect,
};

/// One row per pixel: barycentric weights of the front-most projected
/// triangle containing it (clamped to [0,1], renormalized, zeros dropped).
/// Throws PixelOutsideFace(i) when no triangle contains pixel i.
CorrespondenceMatrix build_gt_correspondence(const TriangleMesh& mesh, const RigidPose& pose,
                                             const CameraIntrinsics& intr, std::span<const Vec2> pixels,
                                             BarycentricMode mode = BarycentricMode::ScreenSpace);

/// Row-wise convex combination of `vertices` (M * X^T).
Vec3List corresponding_points(const CorrespondenceMatrix& m, std::span<const Vec3> vertices);

/// m pixel centers drawn from the set pixels: a uniform subset without
/// replacement when the mask has at least m pixels, otherwise uniform draws
/// with replacement. Throws EmptyMask.
PixelSet sample_pixels(const SegmentationMask& mask, std::size_t m, std::uint64_t seed);

/// Sinusoidal encoding: channels [0, d/2) encode x, [d/2, d) encode y, each
/// as (sin(p / 10000^(4i/d)), cos(...)) pairs. Throws InvalidDimension
/// unless d is a positive multiple of 4.
Eigen::MatrixXd positional_encoding_2d(std::span<const Vec2> pixels, int d);

/// Pixels covered by any projected triangle.
SegmentationMask rasterize_segmentation(const TriangleMesh& mesh, const RigidPose& pose,
                                        const CameraIntrinsics& intr, int height, int width);

}  // namespace perspface
