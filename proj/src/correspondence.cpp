#include "perspface/correspondence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "perspface/error.hpp"
#include "perspface/io_util.hpp"
#include "perspface/raster.hpp"

namespace perspface {

SegmentationMask::SegmentationMask(int height, int width)
    : height_(height),
      width_(width),
      values_(static_cast<std::size_t>(std::max(height, 0)) * static_cast<std::size_t>(std::max(width, 0)), 0) {
    if (height <= 0 || width <= 0) {
        throw Error(ErrorCode::InvalidDimension, "mask dimensions must be positive");
    }
}

std::size_t SegmentationMask::count() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

void CorrespondenceMatrix::append_row(std::span<const CorrespondenceEntry> row) {
    entries_.insert(entries_.end(), row.begin(), row.end());
    row_start_.push_back(entries_.size());
}

std::span<const CorrespondenceEntry> CorrespondenceMatrix::row(std::size_t i) const {
    return std::span<const CorrespondenceEntry>(entries_).subspan(row_start_[i], row_start_[i + 1] - row_start_[i]);
}

Eigen::MatrixXd CorrespondenceMatrix::to_dense() const {
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols_));
    for (std::size_t i = 0; i < rows(); ++i) {
        for (const auto& e : row(i)) {
            dense(static_cast<Eigen::Index>(i), e.vertex) += e.weight;
        }
    }
    return dense;
}

void CorrespondenceMatrix::validate(double tolerance, std::size_t max_entries) const {
    for (std::size_t i = 0; i < rows(); ++i) {
        const auto r = row(i);
        if (r.size() > max_entries) {
            throw Error(ErrorCode::InvariantViolation, "row has too many entries", i);
        }
        double sum = 0.0;
        for (const auto& e : r) {
            if (e.vertex < 0 || static_cast<std::size_t>(e.vertex) >= cols_) {
                throw Error(ErrorCode::InvariantViolation, "vertex index out of range", i);
            }
            if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
                throw Error(ErrorCode::NotAProbabilityRow, "negative or non-finite weight", i);
            }
            sum += e.weight;
        }
        if (std::abs(sum - 1.0) > tolerance) {
            throw Error(ErrorCode::NotAProbabilityRow, "row sums to " + format_significant(sum, 12), i);
        }
    }
}

std::string format_correspondence(const CorrespondenceMatrix& m) {
    std::ostringstream out;
    out << "CORR " << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        out << i << ' ' << r.size();
        for (const auto& e : r) {
            out << ' ' << e.vertex << ':' << format_shortest(e.weight);
        }
        out << '\n';
    }
    return out.str();
}

namespace {

template <typename T>
T parse_number(std::string_view token, std::size_t line_no) {
    T value{};
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" +
                                               std::string(token) + "'",
                    line_no);
    }
    return value;
}

}  // namespace

CorrespondenceMatrix parse_correspondence(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::ParseError, "missing CORR header", line_no);
    }
    std::istringstream header(line);
    std::string tag, m_tok, n_tok, extra;
    if (!(header >> tag >> m_tok >> n_tok) || tag != "CORR" || (header >> extra)) {
        throw Error(ErrorCode::ParseError, "expected 'CORR m n'", line_no);
    }
    const auto m = parse_number<std::size_t>(m_tok, line_no);
    const auto n = parse_number<std::size_t>(n_tok, line_no);

    CorrespondenceMatrix out(n);
    std::vector<CorrespondenceEntry> row;
    for (std::size_t i = 0; i < m; ++i) {
        ++line_no;
        if (!std::getline(in, line)) {
            throw Error(ErrorCode::ParseError, "expected " + std::to_string(m) + " rows", line_no);
        }
        std::istringstream ls(line);
        std::string idx_tok, k_tok;
        if (!(ls >> idx_tok >> k_tok) || parse_number<std::size_t>(idx_tok, line_no) != i) {
            throw Error(ErrorCode::ParseError, "bad row header", line_no);
        }
        const auto k = parse_number<std::size_t>(k_tok, line_no);
        row.clear();
        std::string pair;
        while (ls >> pair) {
            const auto colon = pair.find(':');
            if (colon == std::string::npos) {
                throw Error(ErrorCode::ParseError, "expected idx:weight", line_no);
            }
            const std::string_view view(pair);
            row.push_back({parse_number<int>(view.substr(0, colon), line_no),
                           parse_number<double>(view.substr(colon + 1), line_no)});
        }
        if (row.size() != k) {
            throw Error(ErrorCode::ParseError, "row entry count mismatch", line_no);
        }
        for (const auto& e : row) {
            if (e.vertex < 0 || static_cast<std::size_t>(e.vertex) >= n) {
                throw Error(ErrorCode::ParseError, "vertex index out of range", line_no);
            }
        }
        out.append_row(row);
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            throw Error(ErrorCode::ParseError, "trailing content", line_no);
        }
    }
    return out;
}

void save_correspondence(const CorrespondenceMatrix& m, const std::filesystem::path& path) {
    write_file_atomic(path, format_correspondence(m));
}

CorrespondenceMatrix load_correspondence(const std::filesystem::path& path) {
    return parse_correspondence(read_file(path));
}

std::array<double, 3> barycentric_coordinates(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const RasterTriangle tri(a, b, c);
    if (tri.degenerate()) {
        throw Error(ErrorCode::DegenerateTriangle, "triangle area is below 1e-12 px^2");
    }
    return tri.weights(p);
}

CorrespondenceMatrix build_gt_correspondence(const TriangleMesh& mesh, const RigidPose& pose,
                                             const CameraIntrinsics& intr, std::span<const Vec2> pixels,
                                             BarycentricMode mode) {
    const auto projection = project_perspective(mesh.vertices, pose, intr);
    std::vector<RasterTriangle> rasters;
    std::vector<std::size_t> live;
    rasters.reserve(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        rasters.emplace_back(projection.pixels[static_cast<std::size_t>(tri[0])],
                             projection.pixels[static_cast<std::size_t>(tri[1])],
                             projection.pixels[static_cast<std::size_t>(tri[2])]);
        if (!rasters.back().degenerate()) {
            live.push_back(t);
        }
    }

    CorrespondenceMatrix out(mesh.vertex_count());
    std::vector<CorrespondenceEntry> row;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const Vec2& p = pixels[i];
        double best_depth = std::numeric_limits<double>::infinity();
        std::size_t best = live.size();
        std::array<double, 3> best_w{};
        for (std::size_t li = 0; li < live.size(); ++li) {
            const auto& r = rasters[live[li]];
            if (p.x() < r.lower().x() - 1e-9 || p.x() > r.upper().x() + 1e-9 || p.y() < r.lower().y() - 1e-9 ||
                p.y() > r.upper().y() + 1e-9) {
                continue;
            }
            const auto w = r.weights_if_inside(p);
            if (!w) {
                continue;
            }
            const auto& tri = mesh.triangles[live[li]];
            double depth = 0.0;
            for (int k = 0; k < 3; ++k) {
                depth += (*w)[static_cast<std::size_t>(k)] *
                         projection.depths[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
            }
            if (depth < best_depth) {
                best_depth = depth;
                best = li;
                best_w = *w;
            }
        }
        if (best == live.size()) {
            throw Error(ErrorCode::PixelOutsideFace, "no projected triangle contains the pixel", i);
        }

        const auto& tri = mesh.triangles[live[best]];
        for (std::size_t k = 0; k < 3; ++k) {
            best_w[k] = std::clamp(best_w[k], 0.0, 1.0);
            if (mode == BarycentricMode::PerspectiveCorrect) {
                best_w[k] /= projection.depths[static_cast<std::size_t>(tri[k])];
            }
        }
        const double sum = best_w[0] + best_w[1] + best_w[2];
        row.clear();
        for (std::size_t k = 0; k < 3; ++k) {
            const double w = best_w[k] / sum;
            if (w > 0.0) {
                row.push_back({tri[k], w});
            }
        }
        out.append_row(row);
    }
    return out;
}

Vec3List corresponding_points(const CorrespondenceMatrix& m, std::span<const Vec3> vertices) {
    if (m.cols() != vertices.size()) {
        throw Error(ErrorCode::DimensionMismatch, "correspondence columns (" + std::to_string(m.cols()) +
                                                      ") differ from vertex count (" +
                                                      std::to_string(vertices.size()) + ")");
    }
    Vec3List out;
    out.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Vec3 acc = Vec3::Zero();
        for (const auto& e : m.row(i)) {
            acc += e.weight * vertices[static_cast<std::size_t>(e.vertex)];
        }
        out.push_back(acc);
    }
    return out;
}

PixelSet sample_pixels(const SegmentationMask& mask, std::size_t m, std::uint64_t seed) {
    std::vector<Vec2> candidates;
    for (int row = 0; row < mask.height(); ++row) {
        for (int col = 0; col < mask.width(); ++col) {
            if (mask.at(row, col)) {
                candidates.emplace_back(col, row);
            }
        }
    }
    if (candidates.empty()) {
        throw Error(ErrorCode::EmptyMask, "segmentation mask has no set pixels");
    }
    std::mt19937_64 rng(seed);
    PixelSet out;
    out.reserve(m);
    if (candidates.size() >= m) {
        // Partial Fisher-Yates: the first m slots become the sample.
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
            std::swap(candidates[i], candidates[pick(rng)]);
            out.push_back(candidates[i]);
        }
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        for (std::size_t i = 0; i < m; ++i) {
            out.push_back(candidates[pick(rng)]);
        }
    }
    return out;
}

Eigen::MatrixXd positional_encoding_2d(std::span<const Vec2> pixels, int d) {
    if (d <= 0 || d % 4 != 0) {
        throw Error(ErrorCode::InvalidDimension, "encoding width must be a positive multiple of 4");
    }
    const int half = d / 2;
    const int pairs = d / 4;
    std::vector<double> inv_freq(static_cast<std::size_t>(pairs));
    for (int i = 0; i < pairs; ++i) {
        inv_freq[static_cast<std::size_t>(i)] = 1.0 / std::pow(10000.0, 4.0 * i / static_cast<double>(d));
    }
    Eigen::MatrixXd enc(static_cast<Eigen::Index>(pixels.size()), d);
    for (std::size_t r = 0; r < pixels.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        for (int axis = 0; axis < 2; ++axis) {
            const double p = pixels[r][axis];
            for (int i = 0; i < pairs; ++i) {
                const double angle = p * inv_freq[static_cast<std::size_t>(i)];
                enc(row, axis * half + 2 * i) = std::sin(angle);
                enc(row, axis * half + 2 * i + 1) = std::cos(angle);
            }
        }
    }
    return enc;
}

SegmentationMask rasterize_segmentation(const TriangleMesh& mesh, const RigidPose& pose,
                                        const CameraIntrinsics& intr, int height, int width) {
    SegmentationMask mask(height, width);
    if (mesh.triangles.empty()) {
        return mask;
    }
    const auto projection = project_perspective(mesh.vertices, pose, intr);
    for (const auto& tri : mesh.triangles) {
        const RasterTriangle raster(projection.pixels[static_cast<std::size_t>(tri[0])],
                                    projection.pixels[static_cast<std::size_t>(tri[1])],
                                    projection.pixels[static_cast<std::size_t>(tri[2])]);
        if (raster.degenerate()) {
            continue;
        }
        const auto [col0, col1] = pixel_span(raster.lower().x(), raster.upper().x(), width);
        const auto [row0, row1] = pixel_span(raster.lower().y(), raster.upper().y(), height);
        for (int row = row0; row <= row1; ++row) {
            for (int col = col0; col <= col1; ++col) {
                if (!mask.at(row, col) && raster.weights_if_inside(Vec2(col, row))) {
                    mask.set(row, col, true);
                }
            }
        }
    }
    return mask;
}

}  // namespace perspface
