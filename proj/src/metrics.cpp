#include "perspface/metrics.hpp"

#include <cmath>

#include "perspface/error.hpp"
#include "perspface/io_util.hpp"

namespace perspface {

PoseMetrics metrics_from_components(double yaw, double pitch, double roll, double tx, double ty, double tz) {
    PoseMetrics m;
    m.mae_yaw = yaw;
    m.mae_pitch = pitch;
    m.mae_roll = roll;
    m.mae_r = (yaw + pitch + roll) / 3.0;
    m.mae_tx = tx;
    m.mae_ty = ty;
    m.mae_tz = tz;
    m.mae_t = (tx + ty + tz) / 3.0;
    return m;
}

double angle_difference_deg(double a, double b) {
    const double d = std::fmod(std::abs(a - b), 360.0);
    return std::min(d, 360.0 - d);
}

PoseMetrics pose_mae(std::span<const RigidPose> truth, std::span<const RigidPose> predicted) {
    if (truth.size() != predicted.size()) {
        throw Error(ErrorCode::DimensionMismatch, "ground-truth and predicted pose counts differ");
    }
    if (truth.empty()) {
        throw Error(ErrorCode::EmptyInput, "no poses to evaluate");
    }
    double yaw = 0.0, pitch = 0.0, roll = 0.0, tx = 0.0, ty = 0.0, tz = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto a = rotation_to_euler(truth[i].rotation);
        const auto b = rotation_to_euler(predicted[i].rotation);
        yaw += angle_difference_deg(a.yaw, b.yaw);
        pitch += angle_difference_deg(a.pitch, b.pitch);
        roll += angle_difference_deg(a.roll, b.roll);
        const Vec3 dt = 1000.0 * (truth[i].translation - predicted[i].translation).cwiseAbs();
        tx += dt.x();
        ty += dt.y();
        tz += dt.z();
    }
    const double n = static_cast<double>(truth.size());
    auto m = metrics_from_components(yaw / n, pitch / n, roll / n, tx / n, ty / n, tz / n);
    m.sample_count = truth.size();
    return m;
}

double add_metric(std::span<const Vec3> vertices, const RigidPose& truth, const RigidPose& predicted) {
    if (vertices.empty()) {
        throw Error(ErrorCode::EmptyMesh, "ADD needs at least one vertex");
    }
    double sum = 0.0;
    for (const auto& x : vertices) {
        sum += (truth.transform(x) - predicted.transform(x)).norm();
    }
    return 1000.0 * sum / static_cast<double>(vertices.size());
}

PoseMetrics aggregate_report(std::span<const SampleRecord> samples) {
    if (samples.empty()) {
        throw Error(ErrorCode::EmptyInput, "no samples to aggregate");
    }
    std::vector<RigidPose> truth, predicted;
    double add = 0.0;
    for (const auto& s : samples) {
        truth.push_back(s.truth);
        predicted.push_back(s.predicted);
        add += s.add_mm;
    }
    auto m = pose_mae(truth, predicted);
    m.add = add / static_cast<double>(samples.size());
    m.has_add = true;
    return m;
}

std::string metrics_csv_row(const PoseMetrics& m) {
    std::string row;
    for (double v : {m.mae_yaw, m.mae_pitch, m.mae_roll, m.mae_r, m.mae_tx, m.mae_ty, m.mae_tz, m.mae_t}) {
        row += format_significant(v, 9);
        row += ',';
    }
    row += m.has_add ? format_significant(m.add, 9) : std::string();
    return row;
}

nlohmann::json metrics_to_json(const PoseMetrics& m) {
    nlohmann::json j;
    j["yaw"] = m.mae_yaw;
    j["pitch"] = m.mae_pitch;
    j["roll"] = m.mae_roll;
    j["mae_r"] = m.mae_r;
    j["tx"] = m.mae_tx;
    j["ty"] = m.mae_ty;
    j["tz"] = m.mae_tz;
    j["mae_t"] = m.mae_t;
    j["add_mm"] = m.has_add ? nlohmann::json(m.add) : nlohmann::json(nullptr);
    j["sample_count"] = m.sample_count;
    return j;
}

}  // namespace perspface
