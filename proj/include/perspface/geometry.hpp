#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace perspface {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using Vec2List = std::vector<Vec2, Eigen::aligned_allocator<Vec2>>;
using Vec3List = std::vector<Vec3, Eigen::aligned_allocator<Vec3>>;

using Triangle = std::array<int, 3>;

/// Canonical-space face shape: vertices in meters, triangles as index
/// triples, and one UV coordinate per vertex in [0,1)^2 (top-left origin,
/// v grows downward).
struct TriangleMesh {
    Vec3List vertices;
    std::vector<Triangle> triangles;
    Vec2List uv_coords;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }

    /// Throws InvariantViolation on out-of-range or repeated indices,
    /// duplicate triangles, mismatched uv length or non-finite values.
    void validate() const;
};

bool operator==(const TriangleMesh& a, const TriangleMesh& b);

/// Pinhole intrinsics with zero skew.
struct CameraIntrinsics {
    double fx = 1000.0;
    double fy = 1000.0;
    double cx = 640.0;
    double cy = 360.0;

    Mat3 matrix() const;
    void validate() const;
};

/// World-to-camera rigid transform: x_cam = rotation * x + translation.
struct RigidPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 transform(const Vec3& x) const { return rotation * x + translation; }

    /// Throws InvariantViolation unless rotation is orthonormal with det +1
    /// (elementwise tolerance 1e-9).
    void validate() const;

    static RigidPose identity() { return {}; }
};

/// Returns the pose applying `second` after `first`.
RigidPose compose(const RigidPose& second, const RigidPose& first);

struct OrthographicParams {
    double scale = 1.0;
    Vec2 translation_2d = Vec2::Zero();
};

/// Angles in degrees. R = Rz(roll) * Ry(yaw) * Rx(pitch).
struct EulerAngles {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    bool gimbal_lock = false;
};

struct PerspectiveProjection {
    Vec2List pixels;
    std::vector<double> depths;
};

inline constexpr double kMinDepth = 1e-9;

/// Pinhole projection of world points. Throws NonPositiveDepth (with the
/// offending index) when a camera-frame depth is <= 1e-9.
PerspectiveProjection project_perspective(std::span<const Vec3> points, const RigidPose& pose,
                                          const CameraIntrinsics& intr);

Vec2 project_point(const Vec3& point, const RigidPose& pose, const CameraIntrinsics& intr);

Vec2List project_orthographic(std::span<const Vec3> points, const OrthographicParams& params);

/// Closed-form least-squares scale and 2D offset.
OrthographicParams fit_orthographic(std::span<const Vec3> points, std::span<const Vec2> target_pixels);

/// Sum of squared pixel residuals of an orthographic fit.
double orthographic_residual(std::span<const Vec3> points, std::span<const Vec2> target_pixels,
                             const OrthographicParams& params);

EulerAngles rotation_to_euler(const Mat3& rotation);
Mat3 euler_to_rotation(const EulerAngles& angles);

Mat3 rotation_x(double degrees);
Mat3 rotation_y(double degrees);
Mat3 rotation_z(double degrees);

/// Geodesic angle between two rotations, in degrees.
double rotation_angle_deg(const Mat3& a, const Mat3& b);

/// Nearest rotation in the Frobenius sense (det +1).
Mat3 project_to_so3(const Mat3& m);

/// Rodrigues exponential map of an axis-angle vector (radians).
Mat3 axis_angle_to_rotation(const Vec3& omega);

constexpr double deg_to_rad(double deg) { return deg * 0.017453292519943295; }
constexpr double rad_to_deg(double rad) { return rad * 57.29577951308232; }

}  // namespace perspface
