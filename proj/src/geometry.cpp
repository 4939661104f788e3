#include "perspface/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "perspface/error.hpp"

namespace perspface {

namespace {

// Maps an angle in degrees into (-180, 180].
double wrap_deg(double deg) {
    double w = std::remainder(deg, 360.0);
    if (w <= -180.0) {
        w += 360.0;
    }
    return w;
}

}  // namespace

void TriangleMesh::validate() const {
    const auto n = vertices.size();
    if (uv_coords.size() != n) {
        throw Error(ErrorCode::InvariantViolation,
                    "uv_coords has " + std::to_string(uv_coords.size()) + " entries for " + std::to_string(n) +
                        " vertices");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!vertices[i].allFinite() || !uv_coords[i].allFinite()) {
            throw Error(ErrorCode::InvariantViolation, "non-finite vertex or uv", i);
        }
    }
    std::set<Triangle> seen;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tri = triangles[t];
        for (int idx : tri) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
                throw Error(ErrorCode::InvariantViolation, "triangle index out of range", t);
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw Error(ErrorCode::InvariantViolation, "triangle repeats a vertex", t);
        }
        if (!seen.insert(tri).second) {
            throw Error(ErrorCode::InvariantViolation, "duplicate triangle", t);
        }
    }
}

bool operator==(const TriangleMesh& a, const TriangleMesh& b) {
    return a.vertices == b.vertices && a.triangles == b.triangles && a.uv_coords == b.uv_coords;
}

Mat3 CameraIntrinsics::matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(cx) || !std::isfinite(cy)) {
        throw Error(ErrorCode::InvariantViolation, "focal lengths must be positive");
    }
}

void RigidPose::validate() const {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw Error(ErrorCode::InvariantViolation, "non-finite pose");
    }
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
        throw Error(ErrorCode::InvariantViolation, "rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvariantViolation, "rotation determinant is not +1");
    }
}

RigidPose compose(const RigidPose& second, const RigidPose& first) {
    return {second.rotation * first.rotation, second.rotation * first.translation + second.translation};
}

Vec2 project_point(const Vec3& point, const RigidPose& pose, const CameraIntrinsics& intr) {
    const Vec3 pc = pose.transform(point);
    return {(intr.fx * pc.x() + intr.cx * pc.z()) / pc.z(), (intr.fy * pc.y() + intr.cy * pc.z()) / pc.z()};
}

PerspectiveProjection project_perspective(std::span<const Vec3> points, const RigidPose& pose,
                                          const CameraIntrinsics& intr) {
    PerspectiveProjection out;
    out.pixels.reserve(points.size());
    out.depths.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 pc = pose.transform(points[i]);
        const double z = pc.z();
        if (!(z > kMinDepth)) {
            throw Error(ErrorCode::NonPositiveDepth, "point at or behind the camera plane", i);
        }
        out.pixels.emplace_back((intr.fx * pc.x() + intr.cx * z) / z, (intr.fy * pc.y() + intr.cy * z) / z);
        out.depths.push_back(z);
    }
    return out;
}

Vec2List project_orthographic(std::span<const Vec3> points, const OrthographicParams& params) {
    Vec2List out;
    out.reserve(points.size());
    for (const auto& p : points) {
        out.emplace_back(params.scale * p.head<2>() + params.translation_2d);
    }
    return out;
}

OrthographicParams fit_orthographic(std::span<const Vec3> points, std::span<const Vec2> target_pixels) {
    if (points.size() != target_pixels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "points and targets differ in length");
    }
    if (points.size() < 2) {
        throw Error(ErrorCode::DegenerateConfiguration, "need at least two points");
    }
    const double count = static_cast<double>(points.size());
    Vec2 mean_p = Vec2::Zero();
    Vec2 mean_v = Vec2::Zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
        mean_p += points[i].head<2>();
        mean_v += target_pixels[i];
    }
    mean_p /= count;
    mean_v /= count;

    double cross = 0.0;
    double spread = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec2 dp = points[i].head<2>() - mean_p;
        cross += dp.dot(target_pixels[i] - mean_v);
        spread += dp.squaredNorm();
    }
    if (spread <= 0.0) {
        throw Error(ErrorCode::DegenerateConfiguration, "all points share the same (x, y)");
    }
    const double scale = cross / spread;
    if (!(scale > 0.0)) {
        throw Error(ErrorCode::DegenerateConfiguration, "best-fit scale is not positive");
    }
    return {scale, mean_v - scale * mean_p};
}

double orthographic_residual(std::span<const Vec3> points, std::span<const Vec2> target_pixels,
                             const OrthographicParams& params) {
    if (points.size() != target_pixels.size()) {
        throw Error(ErrorCode::DimensionMismatch, "points and targets differ in length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sum += (params.scale * points[i].head<2>() + params.translation_2d - target_pixels[i]).squaredNorm();
    }
    return sum;
}

Mat3 rotation_x(double degrees) {
    return Eigen::AngleAxisd(deg_to_rad(degrees), Vec3::UnitX()).toRotationMatrix();
}

Mat3 rotation_y(double degrees) {
    return Eigen::AngleAxisd(deg_to_rad(degrees), Vec3::UnitY()).toRotationMatrix();
}

Mat3 rotation_z(double degrees) {
    return Eigen::AngleAxisd(deg_to_rad(degrees), Vec3::UnitZ()).toRotationMatrix();
}

Mat3 euler_to_rotation(const EulerAngles& angles) {
    return rotation_z(angles.roll) * rotation_y(angles.yaw) * rotation_x(angles.pitch);
}

EulerAngles rotation_to_euler(const Mat3& r) {
    // R = Rz(roll) Ry(yaw) Rx(pitch):
    //   R(2,0) = -sin(yaw), R(2,1) = cos(yaw) sin(pitch), R(2,2) = cos(yaw) cos(pitch)
    //   R(1,0) = sin(roll) cos(yaw), R(0,0) = cos(roll) cos(yaw)
    EulerAngles e;
    const double cos_yaw = std::hypot(r(2, 1), r(2, 2));
    e.yaw = rad_to_deg(std::atan2(-r(2, 0), cos_yaw));
    if (std::abs(e.yaw) > 89.99) {
        // Only pitch - roll (yaw = +90) or pitch + roll (yaw = -90) is observable.
        e.gimbal_lock = true;
        e.roll = 0.0;
        e.pitch = e.yaw > 0.0 ? rad_to_deg(std::atan2(r(0, 1), r(0, 2)))
                              : rad_to_deg(std::atan2(-r(0, 1), -r(0, 2)));
    } else {
        e.pitch = rad_to_deg(std::atan2(r(2, 1), r(2, 2)));
        e.roll = rad_to_deg(std::atan2(r(1, 0), r(0, 0)));
    }
    e.yaw = wrap_deg(e.yaw);
    e.pitch = wrap_deg(e.pitch);
    e.roll = wrap_deg(e.roll);
    return e;
}

double rotation_angle_deg(const Mat3& a, const Mat3& b) {
    const Mat3 rel = a.transpose() * b;
    // Axis-angle via atan2 keeps precision near zero, where acos of the trace does not.
    const Vec3 axis_sin(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    const double s = 0.5 * axis_sin.norm();
    const double c = 0.5 * (rel.trace() - 1.0);
    return rad_to_deg(std::atan2(s, c));
}

Mat3 project_to_so3(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
        d(2, 2) = -1.0;
    }
    return svd.matrixU() * d * svd.matrixV().transpose();
}

Mat3 axis_angle_to_rotation(const Vec3& omega) {
    const double angle = omega.norm();
    if (angle < 1e-300) {
        return Mat3::Identity();
    }
    return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

}  // namespace perspface
