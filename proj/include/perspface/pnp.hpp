#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "perspface/correspondence.hpp"
#include "perspface/geometry.hpp"

namespace perspface {

/// 2D-3D correspondences with known intrinsics.
struct PnPProblem {
    PixelSet pixels;
    Vec3List world_points;
    CameraIntrinsics intr;

    std::size_t size() const { return pixels.size(); }

    /// Throws DimensionMismatch on unequal lengths and PreconditionViolation
    /// when fewer than four correspondences are given.
    void validate() const;

    /// Sub-problem with the listed correspondences.
    PnPProblem subset(std::span<const std::size_t> indices) const;
};

/// Per-point reprojection error in pixels; +inf for points at or behind
/// the camera plane.
std::vector<double> reprojection_errors(const RigidPose& pose, const PnPProblem& problem);

double reprojection_rmse(const RigidPose& pose, const PnPProblem& problem);

/// EPnP: control points from the principal axes of the world points
/// (three in the planar case), null space of the 2m x 3c system from the
/// normal matrix, beta initialisations N = 1..4 refined by Gauss-Newton, and
/// Procrustes alignment. The candidate with the lowest reprojection error is
/// returned.
///
/// Throws DegenerateGeometry for collinear/coincident world points and
/// BehindCamera when at least half the points land at Z <= 0.
RigidPose solve_epnp(const PnPProblem& problem);

struct RefineResult {
    RigidPose pose;
    bool singular = false;
    int iterations = 0;
    /// Reprojection RMSE before the first iteration and after each one.
    std::vector<double> rmse_history;
};

/// Gauss-Newton on (axis-angle, translation) increments. A step that raises
/// the cost is halved up to 8 times; if none helps, iteration stops. On
/// singular normal equations the input pose is returned with `singular` set.
RefineResult refine_pose(const RigidPose& pose, const PnPProblem& problem, int iterations = 10);

struct RansacConfig {
    int max_iterations = 100;
    double inlier_threshold_px = 2.0;
    static constexpr int kMinSample = 4;
    std::uint64_t seed = 0;
    /// Adaptive early exit once this confidence of an all-inlier sample is
    /// reached. Values outside (0, 1) disable it.
    double confidence = 0.99;
    bool refine = true;
    int refine_iterations = 10;

    void validate() const;
};

struct RansacResult {
    RigidPose pose;
    std::vector<std::size_t> inliers;
    int iterations = 0;
};

/// Seeded minimal-sample RANSAC around solve_epnp. Hypotheses are ranked by
/// inlier count, then lower mean inlier error, then earlier iteration. The
/// winner is re-estimated on its inliers (EPnP, then refine_pose when
/// enabled), dropping residuals beyond three robust standard deviations, until
/// the set is stable. Reported inliers use the plain threshold. Throws
/// NoConsensus when fewer than four inliers are found.
RansacResult solve_pnp_ransac(const PnPProblem& problem, const RansacConfig& config = {});

/// Direct linear transform on Hartley-normalised data, with the known
/// intrinsics factored out and the rotation projected to SO(3). Test oracle
/// for solve_epnp. Needs m >= 6 non-coplanar points.
RigidPose solve_dlt(const PnPProblem& problem);

}  // namespace perspface
