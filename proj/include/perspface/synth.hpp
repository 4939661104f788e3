#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "perspface/correspondence.hpp"
#include "perspface/geometry.hpp"

namespace perspface {

struct Range {
    double min = 0.0;
    double max = 0.0;
};

/// Uniform sampling ranges: angles in degrees, translations in meters.
struct PoseRanges {
    Range yaw{-60.0, 60.0};
    Range pitch{-45.0, 45.0};
    Range roll{-30.0, 30.0};
    Range tx{-0.15, 0.15};
    Range ty{-0.15, 0.15};
    Range tz{0.3, 0.9};

    /// Throws InvariantViolation when min > max or tz.min <= 0.
    void validate() const;
};

/// Deterministic 64-bit mix of (global seed, sample id, stream).
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t sample_id, std::uint64_t stream = 0);

/// Independent uniform draws per component; rotation via euler_to_rotation.
RigidPose sample_pose(const PoseRanges& ranges, std::uint64_t seed);

struct FaceGridLayout {
    int rows = 0;
    int cols = 0;
    /// Quads split into four triangles around an extra centre vertex.
    int centre_vertices = 0;

    int vertex_count() const { return rows * cols + centre_vertices; }
    int triangle_count() const { return 2 * (rows - 1) * (cols - 1) + 2 * centre_vertices; }
};

/// rows = floor(sqrt(n)), cols = floor(n / rows), remaining vertices become
/// quad centres. 1220 -> 35 x 34 grid + 30 centres = 2304 triangles.
/// Throws InvalidCount for n < 4.
FaceGridLayout face_grid_layout(int n_vertices);

/// Open face-like surface (about 14 x 18 x 8 cm) with seeded smooth bumps,
/// facing -z (towards a camera looking down +z). Coordinates are float32
/// values so OBJ and PFM round trips are exact.
TriangleMesh make_synthetic_face(std::uint64_t seed, int n_vertices = 1220);

struct NoiseModel {
    double pixel_sigma = 0.0;   // px, Gaussian jitter on pixels
    double corr_sigma = 0.0;    // Dirichlet concentration 1 / corr_sigma^2 around each row
    double outlier_rate = 0.0;  // fraction of rows replaced by a random vertex and pixel
    double vertex_sigma = 0.0;  // m, Gaussian jitter on the reconstructed shape
    std::uint64_t seed = 0;

    void validate() const;
    bool is_zero() const;
};

struct SyntheticSample {
    std::size_t id = 0;
    TriangleMesh mesh;
    RigidPose pose;
    CameraIntrinsics intr;
    int width = 0;
    int height = 0;
    PixelSet pixels;
    CorrespondenceMatrix correspondence;
    SegmentationMask mask;
    BarycentricMode barycentric = BarycentricMode::PerspectiveCorrect;

    /// Pixels lie on set mask pixels, the correspondence is a valid
    /// ground-truth matrix and matches a rebuild from mesh/pose/intrinsics
    /// within `weight_tolerance`. Throws InvariantViolation.
    void validate(double weight_tolerance = 1e-8) const;
};

/// Oracle predictor output: what a network head would hand to PnP.
struct NoisyPrediction {
    PixelSet pixels;
    CorrespondenceMatrix correspondence;
    Vec3List vertices;
    std::vector<std::size_t> outlier_rows;
};

/// Outlier replacement, then pixel jitter, row jitter (renormalised) and
/// vertex jitter. Each source draws from its own seeded stream, and a zero
/// model returns the inputs unchanged.
NoisyPrediction corrupt(const SyntheticSample& sample, const NoiseModel& noise);

struct GeneratorConfig {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::uint64_t mesh_seed = 0;
    int n_vertices = 1220;
    std::size_t pixels_per_sample = 1024;
    int width = 1280;
    int height = 720;
    CameraIntrinsics intr{};
    PoseRanges ranges{};
    /// Redraw poses until every vertex projects inside the image.
    bool require_full_view = true;
    /// Perspective-correct weights make M X project exactly onto each pixel.
    BarycentricMode barycentric = BarycentricMode::PerspectiveCorrect;

    void validate() const;
};

nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

std::string to_string(BarycentricMode mode);
/// Throws ParseError for names other than "screen_space" / "perspective_correct".
BarycentricMode barycentric_mode_from_string(std::string_view name);

nlohmann::json pose_to_json(const RigidPose& pose);
RigidPose pose_from_json(const nlohmann::json& j);
nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

/// Builds sample `id` of the dataset described by `config` on `mesh`.
SyntheticSample make_sample(const GeneratorConfig& config, const TriangleMesh& mesh, std::size_t id);

/// `PIXELS m` header then one `x y` line per pixel.
std::string format_pixels(const PixelSet& pixels);
PixelSet parse_pixels(std::string_view text);

/// Pixel mask as a one-channel PFM of 0.0 / 1.0.
void write_mask_pfm(const SegmentationMask& mask, const std::filesystem::path& path);
SegmentationMask read_mask_pfm(const std::filesystem::path& path);

/// Writes mesh.obj, per-sample pixel/correspondence/mask files and
/// manifest.json into `out_dir`; returns the manifest.
nlohmann::json generate_dataset(const GeneratorConfig& config, const std::filesystem::path& out_dir);

struct Dataset {
    GeneratorConfig config;
    std::vector<SyntheticSample> samples;
};

/// Loads and cross-checks every sample listed in a manifest.
Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace perspface
