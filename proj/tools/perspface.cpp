// perspface: synthetic-data experiments for perspective-aware face pose estimation.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "perspface/correspondence.hpp"
#include "perspface/error.hpp"
#include "perspface/io_util.hpp"
#include "perspface/mesh_io.hpp"
#include "perspface/metrics.hpp"
#include "perspface/pnp.hpp"
#include "perspface/synth.hpp"
#include "perspface/uv_map.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace perspface;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    GeneratorConfig generator;
    NoiseModel noise;
    RansacConfig ransac;
    std::uint64_t seed = 0;
    std::string out;
    std::string manifest;
    std::string predictions;
    std::string mesh;
    std::string map;
    std::string dims = "192x192";
    std::string param;
    std::vector<double> values;
};

// Raw flag values; only the ones given on the command line override the config.
struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t n = 0;
    double pixel_sigma = 0.0;
    double corr_sigma = 0.0;
    double outlier_rate = 0.0;
    int ransac_iters = 0;
    double ransac_thresh = 0.0;
    std::size_t m = 0;
    double tz_min = 0.0;
    double tz_max = 0.0;
    std::string dims;
    std::string manifest;
    std::string predictions;
    std::string mesh;
    std::string map;
    std::string param;
    std::string values;
};

json load_json_file(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) {
            throw ConfigError("bad sweep value '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

void apply_config_file(ExperimentConfig& cfg, const json& j) {
    try {
        if (j.contains("generator")) {
            cfg.generator = generator_config_from_json(j.at("generator"));
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out = j.value("out", cfg.out);
        cfg.manifest = j.value("manifest", cfg.manifest);
        cfg.predictions = j.value("predictions", cfg.predictions);
        cfg.mesh = j.value("mesh", cfg.mesh);
        cfg.map = j.value("map", cfg.map);
        cfg.dims = j.value("dims", cfg.dims);
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            cfg.noise.pixel_sigma = n.value("pixel_sigma", cfg.noise.pixel_sigma);
            cfg.noise.corr_sigma = n.value("corr_sigma", cfg.noise.corr_sigma);
            cfg.noise.outlier_rate = n.value("outlier_rate", cfg.noise.outlier_rate);
            cfg.noise.vertex_sigma = n.value("vertex_sigma", cfg.noise.vertex_sigma);
        }
        if (j.contains("ransac")) {
            const auto& r = j.at("ransac");
            cfg.ransac.max_iterations = r.value("max_iterations", cfg.ransac.max_iterations);
            cfg.ransac.inlier_threshold_px = r.value("inlier_threshold_px", cfg.ransac.inlier_threshold_px);
            cfg.ransac.confidence = r.value("confidence", cfg.ransac.confidence);
            cfg.ransac.refine = r.value("refine", cfg.ransac.refine);
            cfg.ransac.refine_iterations = r.value("refine_iterations", cfg.ransac.refine_iterations);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            cfg.param = s.value("param", cfg.param);
            if (s.contains("values")) {
                cfg.values = s.at("values").get<std::vector<double>>();
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    }
}

class FlagSet {
public:
    explicit FlagSet(CLI::App* sub) : sub_(sub) {}

    bool given(const std::string& name) const {
        const auto* opt = sub_->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    }

private:
    CLI::App* sub_;
};

ExperimentConfig resolve(const Flags& f, const FlagSet& given) {
    ExperimentConfig cfg;
    if (given.given("--config")) {
        apply_config_file(cfg, load_json_file(f.config));
    }
    if (given.given("--seed")) cfg.seed = f.seed;
    if (given.given("--out")) cfg.out = f.out;
    if (given.given("--n")) cfg.generator.count = f.n;
    if (given.given("--m")) cfg.generator.pixels_per_sample = f.m;
    if (given.given("--tz-min")) cfg.generator.ranges.tz.min = f.tz_min;
    if (given.given("--tz-max")) cfg.generator.ranges.tz.max = f.tz_max;
    if (given.given("--pixel-sigma")) cfg.noise.pixel_sigma = f.pixel_sigma;
    if (given.given("--corr-sigma")) cfg.noise.corr_sigma = f.corr_sigma;
    if (given.given("--outlier-rate")) cfg.noise.outlier_rate = f.outlier_rate;
    if (given.given("--ransac-iters")) cfg.ransac.max_iterations = f.ransac_iters;
    if (given.given("--ransac-thresh")) cfg.ransac.inlier_threshold_px = f.ransac_thresh;
    if (given.given("--dims")) cfg.dims = f.dims;
    if (given.given("--manifest")) cfg.manifest = f.manifest;
    if (given.given("--predictions")) cfg.predictions = f.predictions;
    if (given.given("--mesh")) cfg.mesh = f.mesh;
    if (given.given("--map")) cfg.map = f.map;
    if (given.given("--param")) cfg.param = f.param;
    if (given.given("--values")) cfg.values = parse_values(f.values);
    cfg.generator.seed = cfg.seed;
    return cfg;
}

void require(const std::string& value, const char* what) {
    if (value.empty()) {
        throw ConfigError(std::string("missing ") + what);
    }
}

std::pair<int, int> parse_dims(const std::string& text) {
    int h = 0, w = 0;
    char x = 0;
    std::istringstream in(text);
    std::string rest;
    if (!(in >> h >> x >> w) || (x != 'x' && x != 'X') || (in >> rest) || h < 2 || w < 2) {
        throw ConfigError("--dims must be HEIGHTxWIDTH with both at least 2, got '" + text + "'");
    }
    return {h, w};
}

json noise_to_json(const NoiseModel& n) {
    return {{"pixel_sigma", n.pixel_sigma},
            {"corr_sigma", n.corr_sigma},
            {"outlier_rate", n.outlier_rate},
            {"vertex_sigma", n.vertex_sigma}};
}

json ransac_to_json(const RansacConfig& r) {
    return {{"max_iterations", r.max_iterations},
            {"inlier_threshold_px", r.inlier_threshold_px},
            {"confidence", r.confidence},
            {"refine", r.refine},
            {"refine_iterations", r.refine_iterations}};
}

struct Prediction {
    std::size_t id = 0;
    std::optional<RigidPose> pose;
    std::size_t inliers = 0;
    int iterations = 0;
    std::string error;
};

// Oracle predictor plus RANSAC-EPnP for one sample.
Prediction predict(const SyntheticSample& sample, const ExperimentConfig& cfg) {
    Prediction p;
    p.id = sample.id;
    NoiseModel noise = cfg.noise;
    noise.seed = derive_seed(cfg.seed, sample.id, 11);
    RansacConfig ransac = cfg.ransac;
    ransac.seed = derive_seed(cfg.seed, sample.id, 12);
    const auto corrupted = corrupt(sample, noise);
    const PnPProblem problem{corrupted.pixels, corresponding_points(corrupted.correspondence, corrupted.vertices),
                             sample.intr};
    try {
        const auto result = solve_pnp_ransac(problem, ransac);
        p.pose = result.pose;
        p.inliers = result.inliers.size();
        p.iterations = result.iterations;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConsensus && e.code() != ErrorCode::BehindCamera &&
            e.code() != ErrorCode::DegenerateGeometry) {
            throw;
        }
        p.error = e.what();
    }
    return p;
}

json prediction_to_json(const Prediction& p) {
    json j{{"id", p.id}};
    if (p.pose) {
        j["pose"] = pose_to_json(*p.pose);
        j["inliers"] = p.inliers;
        j["iterations"] = p.iterations;
    } else {
        j["pose"] = nullptr;
        j["error"] = p.error;
    }
    return j;
}

std::vector<SampleRecord> make_records(const std::vector<SyntheticSample>& samples,
                                       const std::map<std::size_t, RigidPose>& poses) {
    std::vector<SampleRecord> records;
    for (const auto& s : samples) {
        const auto it = poses.find(s.id);
        if (it == poses.end()) {
            continue;
        }
        records.push_back({s.pose, it->second, add_metric(s.mesh.vertices, s.pose, it->second)});
    }
    return records;
}

void write_metrics(const fs::path& dir, const std::vector<SampleRecord>& records, std::size_t failures) {
    if (records.empty()) {
        throw ConfigError("no sample produced a pose; nothing to evaluate");
    }
    const auto metrics = aggregate_report(records);
    write_file_atomic(dir / "metrics.csv",
                      std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row(metrics) + "\n");
    json j = metrics_to_json(metrics);
    j["failures"] = failures;
    write_file_atomic(dir / "metrics.json", j.dump(2) + "\n");
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + dir.string());
    }
}

int cmd_generate(const ExperimentConfig& cfg) {
    require(cfg.out, "--out");
    cfg.generator.validate();
    const auto manifest = generate_dataset(cfg.generator, cfg.out);
    std::printf("wrote %zu samples to %s\n", manifest.at("samples").size(), cfg.out.c_str());
    return 0;
}

int cmd_solve(const ExperimentConfig& cfg) {
    require(cfg.manifest, "--manifest");
    require(cfg.out, "--out");
    cfg.noise.validate();
    cfg.ransac.validate();
    const auto dataset = load_dataset(cfg.manifest);
    json preds = json::array();
    std::map<std::size_t, RigidPose> poses;
    std::size_t failures = 0;
    for (const auto& sample : dataset.samples) {
        const auto p = predict(sample, cfg);
        preds.push_back(prediction_to_json(p));
        if (p.pose) {
            poses.emplace(p.id, *p.pose);
        } else {
            ++failures;
        }
    }
    make_dir(cfg.out);
    const json out{{"seed", cfg.seed},
                   {"noise", noise_to_json(cfg.noise)},
                   {"ransac", ransac_to_json(cfg.ransac)},
                   {"predictions", preds}};
    write_file_atomic(fs::path(cfg.out) / "predictions.json", out.dump(2) + "\n");
    write_metrics(cfg.out, make_records(dataset.samples, poses), failures);
    std::printf("solved %zu samples (%zu failed); report in %s\n", dataset.samples.size(), failures,
                cfg.out.c_str());
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
    require(cfg.manifest, "--manifest");
    require(cfg.predictions, "--predictions");
    require(cfg.out, "--out");
    const auto dataset = load_dataset(cfg.manifest);
    const json preds = load_json_file(cfg.predictions);
    std::map<std::size_t, RigidPose> poses;
    std::vector<std::size_t> pred_ids;
    std::size_t failures = 0;
    try {
        for (const auto& p : preds.at("predictions")) {
            const auto id = p.at("id").get<std::size_t>();
            pred_ids.push_back(id);
            if (p.at("pose").is_null()) {
                ++failures;
            } else {
                poses.emplace(id, pose_from_json(p.at("pose")));
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("predictions: ") + e.what());
    }
    std::vector<std::size_t> truth_ids;
    for (const auto& s : dataset.samples) {
        truth_ids.push_back(s.id);
    }
    std::sort(pred_ids.begin(), pred_ids.end());
    std::sort(truth_ids.begin(), truth_ids.end());
    if (pred_ids != truth_ids) {
        throw ConfigError("prediction ids do not match the manifest sample ids");
    }
    make_dir(cfg.out);
    write_metrics(cfg.out, make_records(dataset.samples, poses), failures);
    std::printf("evaluated %zu samples; metrics in %s\n", truth_ids.size(), cfg.out.c_str());
    return 0;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

int cmd_sweep(const ExperimentConfig& cfg) {
    require(cfg.out, "--out");
    static const std::vector<std::string> kParams = {"pixel_sigma", "outlier_rate", "m", "tz"};
    if (std::find(kParams.begin(), kParams.end(), cfg.param) == kParams.end()) {
        throw ConfigError("--param must be one of pixel_sigma, outlier_rate, m, tz");
    }
    if (cfg.values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    cfg.ransac.validate();
    const auto mesh = make_synthetic_face(cfg.generator.mesh_seed, cfg.generator.n_vertices);

    std::string csv = "param,value," + std::string(kMetricsCsvHeader) + ",median_rot_deg,median_add_mm,failures\n";
    for (const double value : cfg.values) {
        ExperimentConfig point = cfg;
        if (cfg.param == "pixel_sigma") {
            point.noise.pixel_sigma = value;
        } else if (cfg.param == "outlier_rate") {
            point.noise.outlier_rate = value;
        } else if (cfg.param == "m") {
            if (!(value >= 1.0) || value != static_cast<double>(static_cast<std::size_t>(value))) {
                throw ConfigError("m values must be positive integers");
            }
            point.generator.pixels_per_sample = static_cast<std::size_t>(value);
        } else {
            point.generator.ranges.tz = {value, value};
        }
        point.generator.validate();
        point.noise.validate();

        std::vector<SyntheticSample> samples;
        std::map<std::size_t, RigidPose> poses;
        std::size_t failures = 0;
        for (std::size_t id = 0; id < point.generator.count; ++id) {
            samples.push_back(make_sample(point.generator, mesh, id));
            const auto p = predict(samples.back(), point);
            if (p.pose) {
                poses.emplace(id, *p.pose);
            } else {
                ++failures;
            }
        }
        const auto records = make_records(samples, poses);
        csv += cfg.param + "," + format_shortest(value) + ",";
        if (records.empty()) {
            csv += ",,,,,,,,,,," + std::to_string(failures) + "\n";
            continue;
        }
        std::vector<double> rot;
        std::vector<double> add;
        for (const auto& r : records) {
            rot.push_back(rotation_angle_deg(r.predicted.rotation, r.truth.rotation));
            add.push_back(r.add_mm);
        }
        csv += metrics_csv_row(aggregate_report(records)) + "," + format_significant(median(rot), 9) + "," +
               format_significant(median(add), 9) + "," + std::to_string(failures) + "\n";
    }
    const fs::path out(cfg.out);
    if (out.has_parent_path()) {
        make_dir(out.parent_path());
    }
    write_file_atomic(out, csv);
    std::printf("wrote %zu sweep rows to %s\n", cfg.values.size(), cfg.out.c_str());
    return 0;
}

int cmd_render_uv(const ExperimentConfig& cfg) {
    require(cfg.mesh, "--mesh");
    require(cfg.out, "--out");
    const auto [h, w] = parse_dims(cfg.dims);
    const auto mesh = load_mesh(cfg.mesh);
    UVRenderStats stats;
    const auto map = render_uv_position_map(mesh, h, w, &stats);
    const fs::path out(cfg.out);
    if (out.has_parent_path()) {
        make_dir(out.parent_path());
    }
    write_pfm(map, out);
    if (stats.overlap_pixels > 0 || stats.vertex_collisions > 0) {
        std::fprintf(stderr, "warning: UV overlap on %zu pixels, %zu vertex collisions\n", stats.overlap_pixels,
                     stats.vertex_collisions);
    }
    std::printf("wrote %dx%d UV position map to %s\n", h, w, cfg.out.c_str());
    return 0;
}

int cmd_extract(const ExperimentConfig& cfg) {
    require(cfg.map, "--map");
    require(cfg.mesh, "--mesh");
    require(cfg.out, "--out");
    auto mesh = load_mesh(cfg.mesh);
    const auto map = read_pfm(cfg.map);
    mesh.vertices = extract_vertices(map, mesh.uv_coords);
    const fs::path out(cfg.out);
    if (out.has_parent_path()) {
        make_dir(out.parent_path());
    }
    save_mesh(mesh, out);
    std::printf("wrote %zu vertices to %s\n", mesh.vertex_count(), cfg.out.c_str());
    return 0;
}

struct Subcommand {
    CLI::App* app = nullptr;
    int (*run)(const ExperimentConfig&) = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic experiments for perspective-aware 6DoF face pose estimation"};
    app.require_subcommand(1);
    Flags f;

    const auto add_common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON config file; flags override its values");
        sub->add_option("--seed", f.seed, "Global seed");
        sub->add_option("--out", f.out, "Output path");
    };
    const auto add_generator = [&f](CLI::App* sub) {
        sub->add_option("--n", f.n, "Number of samples");
        sub->add_option("--m", f.m, "Pixels sampled per face");
        sub->add_option("--tz-min", f.tz_min, "Minimum camera distance in meters");
        sub->add_option("--tz-max", f.tz_max, "Maximum camera distance in meters");
    };
    const auto add_noise = [&f](CLI::App* sub) {
        sub->add_option("--pixel-sigma", f.pixel_sigma, "Gaussian pixel noise (px)");
        sub->add_option("--corr-sigma", f.corr_sigma, "Correspondence row noise");
        sub->add_option("--outlier-rate", f.outlier_rate, "Fraction of outlier correspondences");
        sub->add_option("--ransac-iters", f.ransac_iters, "RANSAC iteration cap");
        sub->add_option("--ransac-thresh", f.ransac_thresh, "RANSAC inlier threshold (px)");
    };

    std::vector<Subcommand> subs;
    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset and its manifest");
    add_common(gen);
    add_generator(gen);
    subs.push_back({gen, cmd_generate});

    auto* solve = app.add_subcommand("solve", "Predict poses for a dataset with the noisy oracle and RANSAC-EPnP");
    add_common(solve);
    add_noise(solve);
    solve->add_option("--manifest", f.manifest, "Dataset manifest.json");
    subs.push_back({solve, cmd_solve});

    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a dataset");
    add_common(evaluate);
    evaluate->add_option("--manifest", f.manifest, "Dataset manifest.json");
    evaluate->add_option("--predictions", f.predictions, "predictions.json from solve");
    subs.push_back({evaluate, cmd_evaluate});

    auto* sweep = app.add_subcommand("sweep", "Metrics versus one swept parameter, as CSV");
    add_common(sweep);
    add_generator(sweep);
    add_noise(sweep);
    sweep->add_option("--param", f.param, "pixel_sigma, outlier_rate, m or tz");
    sweep->add_option("--values", f.values, "Comma-separated values");
    subs.push_back({sweep, cmd_sweep});

    auto* render = app.add_subcommand("render-uv", "Render a mesh into a UV position map (PFM + mask)");
    add_common(render);
    render->add_option("--mesh", f.mesh, "Input OBJ mesh with UVs");
    render->add_option("--dims", f.dims, "HEIGHTxWIDTH, default 192x192");
    subs.push_back({render, cmd_render_uv});

    auto* extract = app.add_subcommand("extract", "Read vertices back out of a UV position map");
    add_common(extract);
    extract->add_option("--map", f.map, "UV position map PFM (mask sidecar alongside)");
    extract->add_option("--mesh", f.mesh, "OBJ mesh providing topology and UVs");
    subs.push_back({extract, cmd_extract});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        for (const auto& s : subs) {
            if (s.app->parsed()) {
                return s.run(resolve(f, FlagSet(s.app)));
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == ErrorCode::IoError ? kExitIo : kExitConfig;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitConfig;
}
