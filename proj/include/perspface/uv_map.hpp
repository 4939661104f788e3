#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "perspface/geometry.hpp"

namespace perspface {

/// H x W x 3 raster of canonical-space positions plus a binary validity
/// mask. Pixels with weight 0 hold (0, 0, 0).
class UVPositionMap {
public:
    UVPositionMap() = default;
    UVPositionMap(int height, int width);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_); }

    Vec3 at(int row, int col) const;
    void set(int row, int col, const Vec3& value);
    std::uint8_t weight(int row, int col) const { return weights_[index(row, col)]; }
    void set_weight(int row, int col, std::uint8_t w) { weights_[index(row, col)] = w; }

    /// Row-major, channels interleaved.
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::span<std::uint8_t> weights() { return weights_; }
    std::span<const std::uint8_t> weights() const { return weights_; }

    std::size_t weight_sum() const;

    bool operator==(const UVPositionMap& other) const = default;

private:
    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
    std::vector<std::uint8_t> weights_;
};

struct UVRenderStats {
    /// Pixels written by two triangles with values more than 1e-7 apart.
    std::size_t overlap_pixels = 0;
    /// Vertices whose quantized pixel was already claimed by another vertex.
    std::size_t vertex_collisions = 0;
    std::size_t skipped_triangles = 0;
};

/// Pixel (row, col) addressed by a uv coordinate: floor(v*H), floor(u*W),
/// clamped to the raster.
std::array<int, 2> quantize_uv(const Vec2& uv, int height, int width);

/// Rasterizes the mesh in UV space (pixel centers at integer coordinates of
/// uv scaled by (W, H)) and then writes every vertex at its quantized pixel.
UVPositionMap render_uv_position_map(const TriangleMesh& mesh, int height, int width,
                                     UVRenderStats* stats = nullptr);

/// Reads each uv coordinate's quantized pixel. Throws InvalidPixel(index)
/// when that pixel has weight 0.
Vec3List extract_vertices(const UVPositionMap& map, std::span<const Vec2> uv_coords);

/// `<stem>_mask.pfm` next to `data_path`.
std::filesystem::path mask_sidecar_path(const std::filesystem::path& data_path);

/// Writes data as a 3-channel PFM and the weights as a 1-channel PFM of
/// 0.0/1.0. Values are stored as 32-bit floats.
void write_pfm(const UVPositionMap& map, const std::filesystem::path& data_path,
               const std::filesystem::path& mask_path);
void write_pfm(const UVPositionMap& map, const std::filesystem::path& data_path);

/// Throws ParseError on a malformed file and DimensionMismatch when the mask
/// size differs from the data size.
UVPositionMap read_pfm(const std::filesystem::path& data_path, const std::filesystem::path& mask_path);
UVPositionMap read_pfm(const std::filesystem::path& data_path);

}  // namespace perspface
