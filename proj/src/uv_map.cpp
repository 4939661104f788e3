#include "perspface/uv_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perspface/error.hpp"
#include "perspface/pfm.hpp"
#include "perspface/raster.hpp"

namespace perspface {

UVPositionMap::UVPositionMap(int height, int width)
    : height_(height),
      width_(width),
      data_(static_cast<std::size_t>(std::max(height, 0)) * static_cast<std::size_t>(std::max(width, 0)) * 3, 0.0),
      weights_(static_cast<std::size_t>(std::max(height, 0)) * static_cast<std::size_t>(std::max(width, 0)), 0) {
    if (height <= 0 || width <= 0) {
        throw Error(ErrorCode::InvalidDimension, "UV map dimensions must be positive");
    }
}

Vec3 UVPositionMap::at(int row, int col) const {
    const std::size_t k = index(row, col) * 3;
    return {data_[k], data_[k + 1], data_[k + 2]};
}

void UVPositionMap::set(int row, int col, const Vec3& value) {
    const std::size_t k = index(row, col) * 3;
    data_[k] = value.x();
    data_[k + 1] = value.y();
    data_[k + 2] = value.z();
}

std::size_t UVPositionMap::weight_sum() const {
    return std::accumulate(weights_.begin(), weights_.end(), std::size_t{0});
}

std::array<int, 2> quantize_uv(const Vec2& uv, int height, int width) {
    const auto clamp_index = [](double scaled, int size) {
        const double f = std::floor(scaled);
        if (!(f >= 0.0)) {
            return 0;
        }
        return f >= size - 1 ? size - 1 : static_cast<int>(f);
    };
    return {clamp_index(uv.y() * height, height), clamp_index(uv.x() * width, width)};
}

UVPositionMap render_uv_position_map(const TriangleMesh& mesh, int height, int width, UVRenderStats* stats) {
    if (height < 2 || width < 2) {
        throw Error(ErrorCode::InvalidDimension, "UV map needs H, W >= 2");
    }
    mesh.validate();
    for (std::size_t i = 0; i < mesh.uv_coords.size(); ++i) {
        const auto& uv = mesh.uv_coords[i];
        if (uv.x() < 0.0 || uv.x() >= 1.0 || uv.y() < 0.0 || uv.y() >= 1.0) {
            throw Error(ErrorCode::PreconditionViolation, "uv coordinate outside [0,1)^2", i);
        }
    }

    UVPositionMap map(height, width);
    UVRenderStats local;
    std::vector<std::uint8_t> written(map.pixel_count(), 0);
    const Vec2 scale(width, height);

    for (const auto& tri : mesh.triangles) {
        const Vec2 a = mesh.uv_coords[static_cast<std::size_t>(tri[0])].cwiseProduct(scale);
        const Vec2 b = mesh.uv_coords[static_cast<std::size_t>(tri[1])].cwiseProduct(scale);
        const Vec2 c = mesh.uv_coords[static_cast<std::size_t>(tri[2])].cwiseProduct(scale);
        const RasterTriangle raster(a, b, c);
        if (raster.degenerate()) {
            ++local.skipped_triangles;
            continue;
        }
        const Vec3& pa = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Vec3& pb = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Vec3& pc = mesh.vertices[static_cast<std::size_t>(tri[2])];

        const auto [col0, col1] = pixel_span(raster.lower().x(), raster.upper().x(), width);
        const auto [row0, row1] = pixel_span(raster.lower().y(), raster.upper().y(), height);
        for (int row = row0; row <= row1; ++row) {
            for (int col = col0; col <= col1; ++col) {
                const auto w = raster.weights_if_inside(Vec2(col, row));
                if (!w) {
                    continue;
                }
                const Vec3 value = (*w)[0] * pa + (*w)[1] * pb + (*w)[2] * pc;
                const std::size_t k = static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                                      static_cast<std::size_t>(col);
                if (written[k] && (map.at(row, col) - value).cwiseAbs().maxCoeff() > 1e-7) {
                    ++local.overlap_pixels;
                }
                written[k] = 1;
                map.set(row, col, value);
                map.set_weight(row, col, 1);
            }
        }
    }

    std::vector<std::uint8_t> claimed(map.pixel_count(), 0);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto [row, col] = quantize_uv(mesh.uv_coords[i], height, width);
        const std::size_t k =
            static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
        if (claimed[k] && map.at(row, col) != mesh.vertices[i]) {
            ++local.vertex_collisions;
        }
        claimed[k] = 1;
        map.set(row, col, mesh.vertices[i]);
        map.set_weight(row, col, 1);
    }

    if (stats != nullptr) {
        *stats = local;
    }
    return map;
}

Vec3List extract_vertices(const UVPositionMap& map, std::span<const Vec2> uv_coords) {
    Vec3List out;
    out.reserve(uv_coords.size());
    for (std::size_t i = 0; i < uv_coords.size(); ++i) {
        const auto& uv = uv_coords[i];
        if (!(uv.x() >= 0.0 && uv.x() < 1.0 && uv.y() >= 0.0 && uv.y() < 1.0)) {
            throw Error(ErrorCode::PreconditionViolation, "uv coordinate outside [0,1)^2", i);
        }
        const auto [row, col] = quantize_uv(uv, map.height(), map.width());
        if (map.weight(row, col) == 0) {
            throw Error(ErrorCode::InvalidPixel, "uv coordinate maps to an uncovered pixel", i);
        }
        out.push_back(map.at(row, col));
    }
    return out;
}

std::filesystem::path mask_sidecar_path(const std::filesystem::path& data_path) {
    auto p = data_path;
    p.replace_filename(data_path.stem().string() + "_mask.pfm");
    return p;
}

void write_pfm(const UVPositionMap& map, const std::filesystem::path& data_path,
               const std::filesystem::path& mask_path) {
    PfmImage data{map.width(), map.height(), 3, {}};
    data.data.reserve(map.data().size());
    for (double v : map.data()) {
        data.data.push_back(static_cast<float>(v));
    }
    PfmImage mask{map.width(), map.height(), 1, {}};
    mask.data.reserve(map.weights().size());
    for (auto w : map.weights()) {
        mask.data.push_back(w ? 1.0f : 0.0f);
    }
    write_pfm_image(data, data_path);
    write_pfm_image(mask, mask_path);
}

void write_pfm(const UVPositionMap& map, const std::filesystem::path& data_path) {
    write_pfm(map, data_path, mask_sidecar_path(data_path));
}

UVPositionMap read_pfm(const std::filesystem::path& data_path, const std::filesystem::path& mask_path) {
    const PfmImage data = read_pfm_image(data_path);
    const PfmImage mask = read_pfm_image(mask_path);
    if (data.channels != 3) {
        throw Error(ErrorCode::ParseError, "position map must be a 3-channel PFM");
    }
    if (mask.channels != 1) {
        throw Error(ErrorCode::ParseError, "weight mask must be a 1-channel PFM");
    }
    if (mask.width != data.width || mask.height != data.height) {
        throw Error(ErrorCode::DimensionMismatch, "mask and data dimensions differ");
    }
    UVPositionMap map(data.height, data.width);
    auto out = map.data();
    for (std::size_t k = 0; k < data.data.size(); ++k) {
        out[k] = static_cast<double>(data.data[k]);
    }
    auto w = map.weights();
    for (std::size_t k = 0; k < mask.data.size(); ++k) {
        if (mask.data[k] != 0.0f && mask.data[k] != 1.0f) {
            throw Error(ErrorCode::ParseError, "weight mask values must be 0 or 1", k);
        }
        w[k] = mask.data[k] == 1.0f ? 1 : 0;
    }
    return map;
}

UVPositionMap read_pfm(const std::filesystem::path& data_path) {
    return read_pfm(data_path, mask_sidecar_path(data_path));
}

}  // namespace perspface
