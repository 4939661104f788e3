#include "perspface/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <sstream>

#include "perspface/error.hpp"
#include "perspface/io_util.hpp"
#include "perspface/mesh_io.hpp"
#include "perspface/pfm.hpp"

namespace perspface {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, const Range& r) {
    if (r.min == r.max) {
        return r.min;
    }
    return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

void check_range(const Range& r, const char* name) {
    if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
        throw Error(ErrorCode::InvariantViolation, std::string("bad ") + name + " range");
    }
}

struct SurfaceBump {
    double amplitude, freq_s, freq_t, phase_s, phase_t;
};

// Canonical surface point for grid parameters (s, t) in [-1, 1]^2; t grows
// from forehead to chin, matching image-down.
Vec3 face_surface(double s, double t, const std::vector<SurfaceBump>& bumps) {
    const double x = 0.07 * s * (1.0 - 0.12 * t);
    const double y = 0.09 * t;
    double z = -0.08 * std::sqrt(std::max(0.0, 1.0 - 0.5 * (s * s + t * t)));
    z -= 0.02 * std::exp(-(s * s / 0.02 + (t - 0.05) * (t - 0.05) / 0.08));
    for (const auto& b : bumps) {
        z += b.amplitude * std::sin(std::numbers::pi * (b.freq_s * s + b.phase_s)) *
             std::cos(std::numbers::pi * (b.freq_t * t + b.phase_t));
    }
    return {x, y, z};
}

// Nearest float32-representable value, so PFM round trips are exact. Done on
// the mantissa because GCC 11 at -O3 folds a vectorised double->float->double
// cast pair away.
double to_float(double v) {
    int exponent = 0;
    const double mantissa = std::frexp(v, &exponent);
    return std::ldexp(std::nearbyint(std::ldexp(mantissa, 24)), exponent - 24);
}

Vec3 to_float(const Vec3& v) {
    return {to_float(v.x()), to_float(v.y()), to_float(v.z())};
}

Vec2 to_float(const Vec2& v) {
    return {to_float(v.x()), to_float(v.y())};
}

std::string sample_stem(std::size_t id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", id);
    return buf;
}

nlohmann::json range_json(const Range& r) {
    return nlohmann::json::array({r.min, r.max});
}

Range range_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw Error(ErrorCode::ParseError, "range must be [min, max]");
    }
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

void PoseRanges::validate() const {
    check_range(yaw, "yaw");
    check_range(pitch, "pitch");
    check_range(roll, "roll");
    check_range(tx, "tx");
    check_range(ty, "ty");
    check_range(tz, "tz");
    if (!(tz.min > 0.0)) {
        throw Error(ErrorCode::InvariantViolation, "tz range must be positive");
    }
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t sample_id, std::uint64_t stream) {
    return splitmix64(splitmix64(splitmix64(global_seed) ^ sample_id) ^ (stream * 0xd1b54a32d192ed03ULL));
}

RigidPose sample_pose(const PoseRanges& ranges, std::uint64_t seed) {
    ranges.validate();
    std::mt19937_64 rng(seed);
    EulerAngles angles;
    angles.yaw = uniform(rng, ranges.yaw);
    angles.pitch = uniform(rng, ranges.pitch);
    angles.roll = uniform(rng, ranges.roll);
    RigidPose pose;
    pose.rotation = euler_to_rotation(angles);
    pose.translation = Vec3(uniform(rng, ranges.tx), uniform(rng, ranges.ty), uniform(rng, ranges.tz));
    return pose;
}

FaceGridLayout face_grid_layout(int n_vertices) {
    if (n_vertices < 4) {
        throw Error(ErrorCode::InvalidCount, "a face mesh needs at least 4 vertices (nearest valid: 4)");
    }
    FaceGridLayout layout;
    const int shorter = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_vertices))));
    const int longer = n_vertices / shorter;
    layout.rows = longer;
    layout.cols = shorter;
    layout.centre_vertices = n_vertices - shorter * longer;
    return layout;
}

TriangleMesh make_synthetic_face(std::uint64_t seed, int n_vertices) {
    const auto layout = face_grid_layout(n_vertices);
    std::mt19937_64 rng(seed);
    std::vector<SurfaceBump> bumps;
    for (int k = 0; k < 4; ++k) {
        SurfaceBump b{};
        b.amplitude = std::uniform_real_distribution<double>(0.001, 0.004)(rng);
        b.freq_s = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
        b.freq_t = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
        b.phase_s = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
        b.phase_t = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
        bumps.push_back(b);
    }

    constexpr double kMargin = 0.02;
    const auto param = [](int i, int count) { return -1.0 + 2.0 * i / static_cast<double>(count - 1); };
    const auto to_uv = [](double p) { return kMargin + (1.0 - 2.0 * kMargin) * 0.5 * (p + 1.0); };

    TriangleMesh mesh;
    for (int r = 0; r < layout.rows; ++r) {
        for (int c = 0; c < layout.cols; ++c) {
            const double s = param(c, layout.cols);
            const double t = param(r, layout.rows);
            mesh.vertices.push_back(to_float(face_surface(s, t, bumps)));
            mesh.uv_coords.push_back(to_float(Vec2(to_uv(s), to_uv(t))));
        }
    }

    const int quads = (layout.rows - 1) * (layout.cols - 1);
    std::vector<int> centre_of_quad(static_cast<std::size_t>(quads), -1);
    for (int p = 0; p < layout.centre_vertices; ++p) {
        const int q = static_cast<int>((2LL * p + 1) * quads / (2LL * layout.centre_vertices));
        centre_of_quad[static_cast<std::size_t>(q)] = p;
    }

    const auto grid_index = [&](int r, int c) { return r * layout.cols + c; };
    for (int r = 0; r + 1 < layout.rows; ++r) {
        for (int c = 0; c + 1 < layout.cols; ++c) {
            const int v00 = grid_index(r, c);
            const int v01 = grid_index(r, c + 1);
            const int v10 = grid_index(r + 1, c);
            const int v11 = grid_index(r + 1, c + 1);
            const int q = r * (layout.cols - 1) + c;
            if (centre_of_quad[static_cast<std::size_t>(q)] < 0) {
                mesh.triangles.push_back({v00, v10, v11});
                mesh.triangles.push_back({v00, v11, v01});
                continue;
            }
            const double s = 0.5 * (param(c, layout.cols) + param(c + 1, layout.cols));
            const double t = 0.5 * (param(r, layout.rows) + param(r + 1, layout.rows));
            const int vc = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(to_float(face_surface(s, t, bumps)));
            mesh.uv_coords.push_back(to_float(Vec2(to_uv(s), to_uv(t))));
            mesh.triangles.push_back({v00, v01, vc});
            mesh.triangles.push_back({v01, v11, vc});
            mesh.triangles.push_back({v11, v10, vc});
            mesh.triangles.push_back({v10, v00, vc});
        }
    }
    mesh.validate();
    return mesh;
}

void NoiseModel::validate() const {
    for (double v : {pixel_sigma, corr_sigma, outlier_rate, vertex_sigma}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorCode::InvariantViolation, "noise parameters must be finite and non-negative");
        }
    }
    if (outlier_rate > 1.0) {
        throw Error(ErrorCode::InvariantViolation, "outlier_rate must be <= 1");
    }
}

bool NoiseModel::is_zero() const {
    return pixel_sigma == 0.0 && corr_sigma == 0.0 && outlier_rate == 0.0 && vertex_sigma == 0.0;
}

void SyntheticSample::validate(double weight_tolerance) const {
    if (mask.height() != height || mask.width() != width) {
        throw Error(ErrorCode::InvariantViolation, "mask size differs from image size", id);
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const auto& p = pixels[i];
        const int col = static_cast<int>(p.x());
        const int row = static_cast<int>(p.y());
        if (p.x() != col || p.y() != row || col < 0 || row < 0 || col >= width || row >= height ||
            !mask.at(row, col)) {
            throw Error(ErrorCode::InvariantViolation, "pixel is not a set mask pixel", i);
        }
    }
    if (correspondence.rows() != pixels.size() || correspondence.cols() != mesh.vertex_count()) {
        throw Error(ErrorCode::InvariantViolation, "correspondence shape mismatch", id);
    }
    correspondence.validate(1e-6, 3);
    CorrespondenceMatrix rebuilt;
    try {
        rebuilt = build_gt_correspondence(mesh, pose, intr, pixels, barycentric);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::PixelOutsideFace) {
            throw;
        }
        throw Error(ErrorCode::InvariantViolation, "pixel is not covered by the posed mesh", e.index());
    }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const auto a = correspondence.row(i);
        const auto b = rebuilt.row(i);
        bool same = a.size() == b.size();
        for (std::size_t k = 0; same && k < a.size(); ++k) {
            same = a[k].vertex == b[k].vertex && std::abs(a[k].weight - b[k].weight) <= weight_tolerance;
        }
        if (!same) {
            throw Error(ErrorCode::InvariantViolation, "correspondence row disagrees with the geometry", i);
        }
    }
}

NoisyPrediction corrupt(const SyntheticSample& sample, const NoiseModel& noise) {
    noise.validate();
    NoisyPrediction out;
    out.pixels = sample.pixels;
    out.correspondence = sample.correspondence;
    out.vertices = sample.mesh.vertices;
    if (noise.is_zero()) {
        return out;
    }
    const std::size_t m = out.pixels.size();
    const std::size_t n = sample.mesh.vertex_count();

    if (noise.outlier_rate > 0.0 && m > 0) {
        std::mt19937_64 rng(derive_seed(noise.seed, 0, 1));
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const auto count = static_cast<std::size_t>(std::llround(noise.outlier_rate * static_cast<double>(m)));
        out.outlier_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(count, m)));
        std::sort(out.outlier_rows.begin(), out.outlier_rows.end());
        std::uniform_int_distribution<int> vertex(0, static_cast<int>(n) - 1);
        std::uniform_real_distribution<double> px(0.0, static_cast<double>(sample.width));
        std::uniform_real_distribution<double> py(0.0, static_cast<double>(sample.height));
        std::vector<int> replacement(m, -1);
        for (auto row : out.outlier_rows) {
            replacement[row] = vertex(rng);
            const double x = px(rng);
            const double y = py(rng);
            out.pixels[row] = Vec2(x, y);
        }
        CorrespondenceMatrix rebuilt(n);
        for (std::size_t i = 0; i < m; ++i) {
            if (replacement[i] >= 0) {
                const CorrespondenceEntry e{replacement[i], 1.0};
                rebuilt.append_row(std::span<const CorrespondenceEntry>(&e, 1));
            } else {
                rebuilt.append_row(out.correspondence.row(i));
            }
        }
        out.correspondence = std::move(rebuilt);
    }

    if (noise.pixel_sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(noise.seed, 0, 3));
        std::normal_distribution<double> jitter(0.0, noise.pixel_sigma);
        for (auto& p : out.pixels) {
            p.x() += jitter(rng);
            p.y() += jitter(rng);
        }
    }

    if (noise.corr_sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(noise.seed, 0, 4));
        const double concentration = 1.0 / (noise.corr_sigma * noise.corr_sigma);
        CorrespondenceMatrix jittered(n);
        std::vector<CorrespondenceEntry> row;
        for (std::size_t i = 0; i < m; ++i) {
            const auto src = out.correspondence.row(i);
            row.assign(src.begin(), src.end());
            double sum = 0.0;
            for (auto& e : row) {
                e.weight = std::gamma_distribution<double>(concentration * e.weight, 1.0)(rng);
                sum += e.weight;
            }
            if (sum > 0.0 && std::isfinite(sum)) {
                for (auto& e : row) {
                    e.weight /= sum;
                }
            } else {
                row.assign(src.begin(), src.end());
            }
            jittered.append_row(row);
        }
        out.correspondence = std::move(jittered);
    }

    if (noise.vertex_sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(noise.seed, 0, 5));
        std::normal_distribution<double> jitter(0.0, noise.vertex_sigma);
        for (auto& v : out.vertices) {
            v += Vec3(jitter(rng), jitter(rng), jitter(rng));
        }
    }
    return out;
}

void GeneratorConfig::validate() const {
    ranges.validate();
    intr.validate();
    if (width <= 0 || height <= 0) {
        throw Error(ErrorCode::InvariantViolation, "image dimensions must be positive");
    }
    if (pixels_per_sample < 4) {
        throw Error(ErrorCode::InvariantViolation, "need at least 4 pixels per sample");
    }
    face_grid_layout(n_vertices);
}

nlohmann::json pose_to_json(const RigidPose& pose) {
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            rot.push_back(pose.rotation(r, c));
        }
    }
    return {{"rotation", rot},
            {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

RigidPose pose_from_json(const nlohmann::json& j) {
    const auto& rot = j.at("rotation");
    const auto& tr = j.at("translation");
    if (!rot.is_array() || rot.size() != 9 || !tr.is_array() || tr.size() != 3) {
        throw Error(ErrorCode::ParseError, "pose needs 9 rotation and 3 translation values");
    }
    RigidPose pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            pose.rotation(r, c) = rot.at(static_cast<std::size_t>(3 * r + c)).get<double>();
        }
    }
    pose.translation = Vec3(tr.at(0).get<double>(), tr.at(1).get<double>(), tr.at(2).get<double>());
    return pose;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr) {
    return {{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx}, {"cy", intr.cy}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
    return {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(), j.at("cy").get<double>()};
}

std::string to_string(BarycentricMode mode) {
    return mode == BarycentricMode::ScreenSpace ? "screen_space" : "perspective_correct";
}

BarycentricMode barycentric_mode_from_string(std::string_view name) {
    if (name == "screen_space") {
        return BarycentricMode::ScreenSpace;
    }
    if (name == "perspective_correct") {
        return BarycentricMode::PerspectiveCorrect;
    }
    throw Error(ErrorCode::ParseError, "unknown barycentric mode '" + std::string(name) + "'");
}

nlohmann::json to_json(const GeneratorConfig& config) {
    return {{"count", config.count},
            {"seed", config.seed},
            {"mesh_seed", config.mesh_seed},
            {"n_vertices", config.n_vertices},
            {"pixels_per_sample", config.pixels_per_sample},
            {"width", config.width},
            {"height", config.height},
            {"intrinsics", intrinsics_to_json(config.intr)},
            {"require_full_view", config.require_full_view},
            {"barycentric", to_string(config.barycentric)},
            {"pose_ranges",
             {{"yaw", range_json(config.ranges.yaw)},
              {"pitch", range_json(config.ranges.pitch)},
              {"roll", range_json(config.ranges.roll)},
              {"tx", range_json(config.ranges.tx)},
              {"ty", range_json(config.ranges.ty)},
              {"tz", range_json(config.ranges.tz)}}}};
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    try {
        c.count = j.value("count", c.count);
        c.seed = j.value("seed", c.seed);
        c.mesh_seed = j.value("mesh_seed", c.mesh_seed);
        c.n_vertices = j.value("n_vertices", c.n_vertices);
        c.pixels_per_sample = j.value("pixels_per_sample", c.pixels_per_sample);
        c.width = j.value("width", c.width);
        c.height = j.value("height", c.height);
        c.require_full_view = j.value("require_full_view", c.require_full_view);
        if (j.contains("barycentric")) {
            c.barycentric = barycentric_mode_from_string(j.at("barycentric").get<std::string>());
        }
        if (j.contains("intrinsics")) {
            c.intr = intrinsics_from_json(j.at("intrinsics"));
        }
        if (j.contains("pose_ranges")) {
            const auto& r = j.at("pose_ranges");
            if (r.contains("yaw")) c.ranges.yaw = range_from(r.at("yaw"));
            if (r.contains("pitch")) c.ranges.pitch = range_from(r.at("pitch"));
            if (r.contains("roll")) c.ranges.roll = range_from(r.at("roll"));
            if (r.contains("tx")) c.ranges.tx = range_from(r.at("tx"));
            if (r.contains("ty")) c.ranges.ty = range_from(r.at("ty"));
            if (r.contains("tz")) c.ranges.tz = range_from(r.at("tz"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("generator config: ") + e.what());
    }
    return c;
}

SyntheticSample make_sample(const GeneratorConfig& config, const TriangleMesh& mesh, std::size_t id) {
    SyntheticSample s;
    s.id = id;
    s.mesh = mesh;
    s.intr = config.intr;
    s.width = config.width;
    s.height = config.height;

    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxAttempts) {
            throw Error(ErrorCode::InvariantViolation, "could not place a visible face within the pose ranges", id);
        }
        s.pose = sample_pose(config.ranges, derive_seed(config.seed, id, 100 + static_cast<std::uint64_t>(attempt)));
        const auto projection = project_perspective(mesh.vertices, s.pose, s.intr);
        if (config.require_full_view) {
            const bool inside = std::all_of(projection.pixels.begin(), projection.pixels.end(), [&](const Vec2& p) {
                return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= config.width - 1.0 && p.y() <= config.height - 1.0;
            });
            if (!inside) {
                continue;
            }
        }
        s.mask = rasterize_segmentation(mesh, s.pose, s.intr, config.height, config.width);
        if (s.mask.count() >= 4) {
            break;
        }
    }
    s.pixels = sample_pixels(s.mask, config.pixels_per_sample, derive_seed(config.seed, id, 1));
    s.barycentric = config.barycentric;
    s.correspondence = build_gt_correspondence(mesh, s.pose, s.intr, s.pixels, config.barycentric);
    return s;
}

std::string format_pixels(const PixelSet& pixels) {
    std::string out = "PIXELS " + std::to_string(pixels.size()) + "\n";
    for (const auto& p : pixels) {
        out += format_shortest(p.x()) + " " + format_shortest(p.y()) + "\n";
    }
    return out;
}

PixelSet parse_pixels(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string tag;
    std::size_t m = 0;
    if (!(in >> tag >> m) || tag != "PIXELS") {
        throw Error(ErrorCode::ParseError, "expected 'PIXELS m' header");
    }
    PixelSet pixels;
    pixels.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        double x = 0.0, y = 0.0;
        if (!(in >> x >> y)) {
            throw Error(ErrorCode::ParseError, "truncated pixel list", i);
        }
        pixels.emplace_back(x, y);
    }
    std::string extra;
    if (in >> extra) {
        throw Error(ErrorCode::ParseError, "trailing content after pixel list");
    }
    return pixels;
}

void write_mask_pfm(const SegmentationMask& mask, const std::filesystem::path& path) {
    PfmImage img{mask.width(), mask.height(), 1, {}};
    img.data.reserve(mask.values().size());
    for (auto v : mask.values()) {
        img.data.push_back(v ? 1.0f : 0.0f);
    }
    write_pfm_image(img, path);
}

SegmentationMask read_mask_pfm(const std::filesystem::path& path) {
    const auto img = read_pfm_image(path);
    if (img.channels != 1) {
        throw Error(ErrorCode::ParseError, "mask must be a one-channel PFM");
    }
    SegmentationMask mask(img.height, img.width);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const float v = img.data[static_cast<std::size_t>(r) * static_cast<std::size_t>(img.width) +
                                     static_cast<std::size_t>(c)];
            if (v != 0.0f && v != 1.0f) {
                throw Error(ErrorCode::ParseError, "mask values must be 0 or 1");
            }
            mask.set(r, c, v == 1.0f);
        }
    }
    return mask;
}

nlohmann::json generate_dataset(const GeneratorConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "samples", ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());
    }
    const TriangleMesh mesh = make_synthetic_face(config.mesh_seed, config.n_vertices);
    save_mesh(mesh, out_dir / "mesh.obj");

    nlohmann::json manifest;
    manifest["config"] = to_json(config);
    manifest["samples"] = nlohmann::json::array();
    for (std::size_t id = 0; id < config.count; ++id) {
        const auto sample = make_sample(config, mesh, id);
        const std::string stem = sample_stem(id);
        const std::string pixels_rel = "samples/" + stem + ".pixels";
        const std::string corr_rel = "samples/" + stem + ".corr";
        const std::string mask_rel = "samples/" + stem + "_mask.pfm";
        write_file_atomic(out_dir / pixels_rel, format_pixels(sample.pixels));
        save_correspondence(sample.correspondence, out_dir / corr_rel);
        write_mask_pfm(sample.mask, out_dir / mask_rel);
        manifest["samples"].push_back({{"id", id},
                                       {"mesh", "mesh.obj"},
                                       {"pose", pose_to_json(sample.pose)},
                                       {"intrinsics", intrinsics_to_json(sample.intr)},
                                       {"width", sample.width},
                                       {"height", sample.height},
                                       {"pixels", pixels_rel},
                                       {"correspondence", corr_rel},
                                       {"mask", mask_rel}});
    }
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
    }
    const auto root = manifest_path.parent_path();
    Dataset ds;
    std::map<std::string, TriangleMesh> meshes;
    try {
        ds.config = generator_config_from_json(manifest.at("config"));
        for (const auto& entry : manifest.at("samples")) {
            const auto mesh_rel = entry.at("mesh").get<std::string>();
            if (!meshes.contains(mesh_rel)) {
                meshes.emplace(mesh_rel, load_mesh(root / mesh_rel));
            }
            SyntheticSample s;
            s.id = entry.at("id").get<std::size_t>();
            s.mesh = meshes.at(mesh_rel);
            s.pose = pose_from_json(entry.at("pose"));
            s.intr = intrinsics_from_json(entry.at("intrinsics"));
            s.width = entry.at("width").get<int>();
            s.height = entry.at("height").get<int>();
            s.pixels = parse_pixels(read_file(root / entry.at("pixels").get<std::string>()));
            s.correspondence = load_correspondence(root / entry.at("correspondence").get<std::string>());
            s.mask = read_mask_pfm(root / entry.at("mask").get<std::string>());
            s.barycentric = ds.config.barycentric;
            s.pose.validate();
            s.validate();
            ds.samples.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("manifest: ") + e.what());
    }
    return ds;
}

}  // namespace perspface
