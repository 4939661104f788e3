#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "perspface/geometry.hpp"

namespace perspface {

/// Angles in degrees, translations and ADD in millimetres.
struct PoseMetrics {
    double mae_yaw = 0.0;
    double mae_pitch = 0.0;
    double mae_roll = 0.0;
    double mae_r = 0.0;
    double mae_tx = 0.0;
    double mae_ty = 0.0;
    double mae_tz = 0.0;
    double mae_t = 0.0;
    double add = 0.0;
    bool has_add = false;
    std::size_t sample_count = 0;
};

/// Fills mae_r and mae_t as the means of their components.
PoseMetrics metrics_from_components(double yaw, double pitch, double roll, double tx, double ty, double tz);

/// |a - b| on the circle, in [0, 180].
double angle_difference_deg(double a, double b);

/// Per-angle and per-axis mean absolute errors. ADD is left unset.
/// Throws EmptyInput / DimensionMismatch.
PoseMetrics pose_mae(std::span<const RigidPose> truth, std::span<const RigidPose> predicted);

/// Mean over vertices of |(R x + t) - (R' x + t')|, in millimetres.
/// Throws EmptyMesh.
double add_metric(std::span<const Vec3> vertices, const RigidPose& truth, const RigidPose& predicted);

struct SampleRecord {
    RigidPose truth;
    RigidPose predicted;
    double add_mm = 0.0;
};

/// Pose MAEs over all records plus their mean ADD. Throws EmptyInput.
PoseMetrics aggregate_report(std::span<const SampleRecord> samples);

inline constexpr const char* kMetricsCsvHeader = "yaw,pitch,roll,mae_r,tx,ty,tz,mae_t,add_mm";

std::string metrics_csv_row(const PoseMetrics& metrics);
nlohmann::json metrics_to_json(const PoseMetrics& metrics);

}  // namespace perspface
