#include "perspface/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "perspface/error.hpp"

namespace perspface {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sqrt of eigenvalue ratios below this make the point cloud planar/linear.
constexpr double kFlatRatio = 1e-8;

struct PrincipalAxes {
    Vec3 centroid;
    Mat3 axes;      // columns, largest spread first
    Vec3 spreads;   // sqrt(eigenvalue / m), descending
};

PrincipalAxes principal_axes(std::span<const Vec3> points) {
    PrincipalAxes pa;
    pa.centroid = Vec3::Zero();
    for (const auto& p : points) {
        pa.centroid += p;
    }
    pa.centroid /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        const Vec3 d = p - pa.centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    for (int k = 0; k < 3; ++k) {
        pa.axes.col(k) = eig.eigenvectors().col(2 - k);
        pa.spreads(k) = std::sqrt(std::max(eig.eigenvalues()(2 - k), 0.0) / static_cast<double>(points.size()));
    }
    return pa;
}

bool is_linear(const PrincipalAxes& pa) {
    return !(pa.spreads(0) > 0.0) || pa.spreads(1) <= kFlatRatio * pa.spreads(0);
}

bool is_planar(const PrincipalAxes& pa) {
    return pa.spreads(2) <= kFlatRatio * pa.spreads(0);
}

// Least-squares rigid transform taking `from` onto `to` (Kabsch).
RigidPose align_rigid(std::span<const Vec3> from, std::span<const Vec3> to) {
    Vec3 mean_from = Vec3::Zero();
    Vec3 mean_to = Vec3::Zero();
    for (std::size_t i = 0; i < from.size(); ++i) {
        mean_from += from[i];
        mean_to += to[i];
    }
    mean_from /= static_cast<double>(from.size());
    mean_to /= static_cast<double>(to.size());
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < from.size(); ++i) {
        h += (to[i] - mean_to) * (from[i] - mean_from).transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
        d(2, 2) = -1.0;
    }
    RigidPose pose;
    pose.rotation = svd.matrixU() * d * svd.matrixV().transpose();
    pose.translation = mean_to - pose.rotation * mean_from;
    return pose;
}

double mean_reprojection_error(const RigidPose& pose, const PnPProblem& problem) {
    const auto errors = reprojection_errors(pose, problem);
    return std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
}

// Inliers under `threshold`, tightened to three robust standard deviations
// (1.4826 * median residual) so that near-miss outliers do not bias a refit.
std::vector<std::size_t> trimmed_inliers(const RigidPose& pose, const PnPProblem& problem, double threshold) {
    const auto errors = reprojection_errors(pose, problem);
    std::vector<double> kept;
    for (double e : errors) {
        if (e < threshold) {
            kept.push_back(e);
        }
    }
    std::vector<std::size_t> out;
    if (kept.empty()) {
        return out;
    }
    const auto mid = kept.begin() + static_cast<std::ptrdiff_t>(kept.size() / 2);
    std::nth_element(kept.begin(), mid, kept.end());
    const double cut = std::min(threshold, std::max(3.0 * 1.4826 * *mid, 1e-6));
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i] < cut || (cut == threshold && errors[i] < threshold)) {
            out.push_back(i);
        }
    }
    return out;
}

class EpnpSolver {
public:
    explicit EpnpSolver(const PnPProblem& problem) : problem_(problem) {}

    RigidPose solve() {
        const auto pa = principal_axes(problem_.world_points);
        if (is_linear(pa)) {
            throw Error(ErrorCode::DegenerateGeometry, "world points are collinear or coincident");
        }
        controls_ = is_planar(pa) ? 3 : 4;
        choose_control_points(pa);
        compute_alphas(pa);
        const auto kernel = null_space();
        build_distance_system(kernel);

        std::vector<Eigen::VectorXd> starts;
        starts.push_back(betas_approx_1());
        starts.push_back(betas_approx_2());
        if (controls_ == 4) {
            starts.push_back(betas_approx_3());
            starts.push_back(betas_relinearized());
        }

        double best_error = kInf;
        RigidPose best;
        for (auto& betas : starts) {
            refine_betas(betas);
            const RigidPose pose = pose_from_betas(kernel, betas);
            const double err = mean_reprojection_error(pose, problem_);
            if (err < best_error) {
                best_error = err;
                best = pose;
            }
        }

        std::size_t behind = 0;
        for (const auto& p : problem_.world_points) {
            if (!(best.transform(p).z() > 0.0)) {
                ++behind;
            }
        }
        if (2 * behind >= problem_.size()) {
            throw Error(ErrorCode::BehindCamera, "recovered pose places the points behind the camera");
        }
        return best;
    }

private:
    void choose_control_points(const PrincipalAxes& pa) {
        control_world_.assign(static_cast<std::size_t>(controls_), pa.centroid);
        for (int k = 1; k < controls_; ++k) {
            control_world_[static_cast<std::size_t>(k)] += pa.spreads(k - 1) * pa.axes.col(k - 1);
        }
    }

    // Axes are orthonormal, so the affine coordinates are plain projections.
    void compute_alphas(const PrincipalAxes& pa) {
        const auto m = problem_.size();
        alphas_.resize(static_cast<Eigen::Index>(m), controls_);
        for (std::size_t i = 0; i < m; ++i) {
            const Vec3 d = problem_.world_points[i] - pa.centroid;
            double rest = 1.0;
            for (int k = 1; k < controls_; ++k) {
                const double a = d.dot(pa.axes.col(k - 1)) / pa.spreads(k - 1);
                alphas_(static_cast<Eigen::Index>(i), k) = a;
                rest -= a;
            }
            alphas_(static_cast<Eigen::Index>(i), 0) = rest;
        }
    }

    // Eigenvectors of M^T M for the smallest eigenvalues, smallest first.
    std::vector<Eigen::VectorXd> null_space() {
        const int dim = 3 * controls_;
        Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd row_u(dim);
        Eigen::VectorXd row_v(dim);
        const auto& k = problem_.intr;
        for (std::size_t i = 0; i < problem_.size(); ++i) {
            // Normalised image coordinates keep the system well scaled.
            const double x = (problem_.pixels[i].x() - k.cx) / k.fx;
            const double y = (problem_.pixels[i].y() - k.cy) / k.fy;
            row_u.setZero();
            row_v.setZero();
            for (int j = 0; j < controls_; ++j) {
                const double a = alphas_(static_cast<Eigen::Index>(i), j);
                row_u(3 * j) = a;
                row_u(3 * j + 2) = -a * x;
                row_v(3 * j + 1) = a;
                row_v(3 * j + 2) = -a * y;
            }
            normal.noalias() += row_u * row_u.transpose();
            normal.noalias() += row_v * row_v.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
        std::vector<Eigen::VectorXd> kernel;
        for (int j = 0; j < controls_; ++j) {
            kernel.push_back(eig.eigenvectors().col(j));
        }
        return kernel;
    }

    int product_index(int a, int b) const {
        if (a > b) {
            std::swap(a, b);
        }
        // Row-major upper triangle of a controls_ x controls_ matrix.
        return a * controls_ - a * (a - 1) / 2 + (b - a);
    }

    void build_distance_system(const std::vector<Eigen::VectorXd>& kernel) {
        const int pairs = controls_ * (controls_ - 1) / 2;
        const int products = controls_ * (controls_ + 1) / 2;
        distance_matrix_ = Eigen::MatrixXd::Zero(pairs, products);
        rho_ = Eigen::VectorXd::Zero(pairs);
        int row = 0;
        for (int a = 0; a < controls_; ++a) {
            for (int b = a + 1; b < controls_; ++b, ++row) {
                std::vector<Vec3> diff;
                for (const auto& v : kernel) {
                    diff.push_back(v.segment<3>(3 * a) - v.segment<3>(3 * b));
                }
                for (int k = 0; k < controls_; ++k) {
                    for (int l = k; l < controls_; ++l) {
                        const double dot = diff[static_cast<std::size_t>(k)].dot(diff[static_cast<std::size_t>(l)]);
                        distance_matrix_(row, product_index(k, l)) = k == l ? dot : 2.0 * dot;
                    }
                }
                rho_(row) = (control_world_[static_cast<std::size_t>(a)] - control_world_[static_cast<std::size_t>(b)])
                                .squaredNorm();
            }
        }
    }

    Eigen::VectorXd solve_columns(const std::vector<int>& columns) const {
        Eigen::MatrixXd sub(distance_matrix_.rows(), static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            sub.col(static_cast<Eigen::Index>(c)) = distance_matrix_.col(columns[c]);
        }
        return sub.completeOrthogonalDecomposition().solve(rho_);
    }

    // Linearised in (b11, b12, ..., b1c).
    Eigen::VectorXd betas_approx_1() const {
        std::vector<int> cols;
        for (int k = 0; k < controls_; ++k) {
            cols.push_back(product_index(0, k));
        }
        const Eigen::VectorXd b = solve_columns(cols);
        Eigen::VectorXd betas = Eigen::VectorXd::Zero(controls_);
        if (b(0) < 0.0) {
            betas(0) = std::sqrt(-b(0));
            for (int k = 1; k < controls_; ++k) {
                betas(k) = betas(0) > 0.0 ? -b(k) / betas(0) : 0.0;
            }
        } else {
            betas(0) = std::sqrt(b(0));
            for (int k = 1; k < controls_; ++k) {
                betas(k) = betas(0) > 0.0 ? b(k) / betas(0) : 0.0;
            }
        }
        return betas;
    }

    // Linearised in (b11, b12, b22).
    Eigen::VectorXd betas_approx_2() const {
        const Eigen::VectorXd b = solve_columns({product_index(0, 0), product_index(0, 1), product_index(1, 1)});
        Eigen::VectorXd betas = Eigen::VectorXd::Zero(controls_);
        if (b(0) < 0.0) {
            betas(0) = std::sqrt(-b(0));
            betas(1) = b(2) < 0.0 ? std::sqrt(-b(2)) : 0.0;
        } else {
            betas(0) = std::sqrt(b(0));
            betas(1) = b(2) > 0.0 ? std::sqrt(b(2)) : 0.0;
        }
        if (b(1) < 0.0) {
            betas(0) = -betas(0);
        }
        return betas;
    }

    // Linearised in (b11, b12, b22, b13, b23); needs six distance rows.
    Eigen::VectorXd betas_approx_3() const {
        const Eigen::VectorXd b = solve_columns({product_index(0, 0), product_index(0, 1), product_index(1, 1),
                                                 product_index(0, 2), product_index(1, 2)});
        Eigen::VectorXd betas = Eigen::VectorXd::Zero(controls_);
        if (b(0) < 0.0) {
            betas(0) = std::sqrt(-b(0));
            betas(1) = b(2) < 0.0 ? std::sqrt(-b(2)) : 0.0;
        } else {
            betas(0) = std::sqrt(b(0));
            betas(1) = b(2) > 0.0 ? std::sqrt(b(2)) : 0.0;
        }
        if (b(1) < 0.0) {
            betas(0) = -betas(0);
        }
        betas(2) = betas(0) != 0.0 ? b(3) / betas(0) : 0.0;
        return betas;
    }

    // N = 4: b = b0 + sum_k lambda_k n_k over the null space of the distance
    // system, with the rank-1 conditions B_ab B_cd = B_ad B_cb on B = beta beta^T
    // linearised in (lambda_k, lambda_k lambda_l).
    Eigen::VectorXd betas_relinearized() const {
        const int products_count = static_cast<int>(distance_matrix_.cols());
        const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(distance_matrix_);
        const Eigen::VectorXd particular = cod.solve(rho_);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(distance_matrix_, Eigen::ComputeFullV);
        const int rank = static_cast<int>(svd.rank());
        const int free = products_count - rank;
        Eigen::VectorXd betas = Eigen::VectorXd::Zero(controls_);
        if (free == 0) {
            return betas_from_products(particular);
        }
        const Eigen::MatrixXd null = svd.matrixV().rightCols(free);

        // Affine form of entry B(a, b): value = base + coeff . lambda
        const auto entry = [&](int a, int b) {
            const int idx = product_index(a, b);
            return std::pair<double, Eigen::VectorXd>(particular(idx), null.row(idx).transpose());
        };
        const int quad_terms = free * (free + 1) / 2;
        std::vector<Eigen::VectorXd> rows;
        std::vector<double> rhs;
        for (int a = 0; a < controls_; ++a) {
            for (int c = a + 1; c < controls_; ++c) {
                for (int b = 0; b < controls_; ++b) {
                    for (int d = b + 1; d < controls_; ++d) {
                        const auto [p0, p] = entry(a, b);
                        const auto [q0, q] = entry(c, d);
                        const auto [r0, r] = entry(a, d);
                        const auto [s0, sv] = entry(c, b);
                        Eigen::VectorXd row = Eigen::VectorXd::Zero(free + quad_terms);
                        row.head(free) = p0 * q + q0 * p - r0 * sv - s0 * r;
                        int col = free;
                        for (int k = 0; k < free; ++k) {
                            for (int l = k; l < free; ++l, ++col) {
                                const double coef = p(k) * q(l) - r(k) * sv(l);
                                const double sym = k == l ? 0.0 : p(l) * q(k) - r(l) * sv(k);
                                row(col) = coef + sym;
                            }
                        }
                        rows.push_back(row);
                        rhs.push_back(-(p0 * q0 - r0 * s0));
                    }
                }
            }
        }
        Eigen::MatrixXd system(static_cast<Eigen::Index>(rows.size()), free + quad_terms);
        Eigen::VectorXd target(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            system.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
            target(static_cast<Eigen::Index>(i)) = rhs[i];
        }
        const Eigen::VectorXd solution = system.completeOrthogonalDecomposition().solve(target);
        return betas_from_products(particular + null * solution.head(free));
    }

    // Rank-1 factor of the symmetric product matrix, anchored on its
    // largest diagonal entry.
    Eigen::VectorXd betas_from_products(const Eigen::VectorXd& b) const {
        int anchor = 0;
        for (int k = 1; k < controls_; ++k) {
            if (std::abs(b(product_index(k, k))) > std::abs(b(product_index(anchor, anchor)))) {
                anchor = k;
            }
        }
        Eigen::VectorXd betas = Eigen::VectorXd::Zero(controls_);
        const double diag = std::abs(b(product_index(anchor, anchor)));
        if (!(diag > 0.0)) {
            return betas;
        }
        const double root = std::sqrt(diag);
        const double sign = b(product_index(anchor, anchor)) < 0.0 ? -1.0 : 1.0;
        for (int k = 0; k < controls_; ++k) {
            betas(k) = k == anchor ? root : sign * b(product_index(anchor, k)) / root;
        }
        return betas;
    }

    Eigen::VectorXd products(const Eigen::VectorXd& betas) const {
        Eigen::VectorXd p(distance_matrix_.cols());
        for (int k = 0; k < controls_; ++k) {
            for (int l = k; l < controls_; ++l) {
                p(product_index(k, l)) = betas(k) * betas(l);
            }
        }
        return p;
    }

    void refine_betas(Eigen::VectorXd& betas) const {
        const Eigen::Index pairs = distance_matrix_.rows();
        Eigen::MatrixXd jac(pairs, controls_);
        for (int iter = 0; iter < 10; ++iter) {
            const Eigen::VectorXd residual = distance_matrix_ * products(betas) - rho_;
            for (int k = 0; k < controls_; ++k) {
                Eigen::VectorXd dp = Eigen::VectorXd::Zero(distance_matrix_.cols());
                for (int l = 0; l < controls_; ++l) {
                    dp(product_index(k, l)) += k == l ? 2.0 * betas(k) : betas(l);
                }
                jac.col(k) = distance_matrix_ * dp;
            }
            const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-residual);
            if (!step.allFinite()) {
                return;
            }
            const Eigen::VectorXd next = betas + step;
            const double before = residual.squaredNorm();
            const double after = (distance_matrix_ * products(next) - rho_).squaredNorm();
            if (!(after < before)) {
                return;
            }
            betas = next;
            if (step.norm() <= 1e-15 * std::max(1.0, betas.norm())) {
                return;
            }
        }
    }

    RigidPose pose_from_betas(const std::vector<Eigen::VectorXd>& kernel, const Eigen::VectorXd& betas) const {
        Eigen::VectorXd stacked = Eigen::VectorXd::Zero(3 * controls_);
        for (int k = 0; k < controls_; ++k) {
            stacked += betas(k) * kernel[static_cast<std::size_t>(k)];
        }
        double mean_depth = 0.0;
        for (int j = 0; j < controls_; ++j) {
            mean_depth += stacked(3 * j + 2);
        }
        if (mean_depth < 0.0) {
            stacked = -stacked;
        }
        Vec3List camera_points;
        camera_points.reserve(problem_.size());
        for (std::size_t i = 0; i < problem_.size(); ++i) {
            Vec3 pc = Vec3::Zero();
            for (int j = 0; j < controls_; ++j) {
                pc += alphas_(static_cast<Eigen::Index>(i), j) * stacked.segment<3>(3 * j);
            }
            camera_points.push_back(pc);
        }
        return align_rigid(problem_.world_points, camera_points);
    }

    const PnPProblem& problem_;
    int controls_ = 4;
    std::vector<Vec3> control_world_;
    Eigen::MatrixXd alphas_;
    Eigen::MatrixXd distance_matrix_;
    Eigen::VectorXd rho_;
};

double reprojection_cost(const RigidPose& pose, const PnPProblem& problem) {
    double cost = 0.0;
    for (std::size_t i = 0; i < problem.size(); ++i) {
        const Vec3 pc = pose.transform(problem.world_points[i]);
        if (!(pc.z() > kMinDepth)) {
            return kInf;
        }
        const Vec2 proj((problem.intr.fx * pc.x() + problem.intr.cx * pc.z()) / pc.z(),
                        (problem.intr.fy * pc.y() + problem.intr.cy * pc.z()) / pc.z());
        cost += (proj - problem.pixels[i]).squaredNorm();
    }
    return cost;
}

}  // namespace

void PnPProblem::validate() const {
    if (pixels.size() != world_points.size()) {
        throw Error(ErrorCode::DimensionMismatch, "pixel and world point counts differ");
    }
    if (pixels.size() < 4) {
        throw Error(ErrorCode::PreconditionViolation, "PnP needs at least four correspondences");
    }
    intr.validate();
}

PnPProblem PnPProblem::subset(std::span<const std::size_t> indices) const {
    PnPProblem out;
    out.intr = intr;
    out.pixels.reserve(indices.size());
    out.world_points.reserve(indices.size());
    for (auto i : indices) {
        out.pixels.push_back(pixels[i]);
        out.world_points.push_back(world_points[i]);
    }
    return out;
}

std::vector<double> reprojection_errors(const RigidPose& pose, const PnPProblem& problem) {
    std::vector<double> errors(problem.size(), kInf);
    for (std::size_t i = 0; i < problem.size(); ++i) {
        const Vec3 pc = pose.transform(problem.world_points[i]);
        if (pc.z() > kMinDepth) {
            const Vec2 proj((problem.intr.fx * pc.x() + problem.intr.cx * pc.z()) / pc.z(),
                            (problem.intr.fy * pc.y() + problem.intr.cy * pc.z()) / pc.z());
            errors[i] = (proj - problem.pixels[i]).norm();
        }
    }
    return errors;
}

double reprojection_rmse(const RigidPose& pose, const PnPProblem& problem) {
    return std::sqrt(reprojection_cost(pose, problem) / static_cast<double>(problem.size()));
}

RigidPose solve_epnp(const PnPProblem& problem) {
    problem.validate();
    return EpnpSolver(problem).solve();
}

RefineResult refine_pose(const RigidPose& pose, const PnPProblem& problem, int iterations) {
    problem.validate();
    if (iterations < 1) {
        throw Error(ErrorCode::PreconditionViolation, "refinement needs at least one iteration");
    }
    RefineResult out;
    out.pose = pose;
    double cost = reprojection_cost(pose, problem);
    const double count = static_cast<double>(problem.size());
    out.rmse_history.push_back(std::sqrt(cost / count));
    if (!std::isfinite(cost)) {
        out.singular = true;
        return out;
    }

    const auto& k = problem.intr;
    for (int iter = 0; iter < iterations; ++iter) {
        Eigen::Matrix<double, 6, 6> normal = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> gradient = Eigen::Matrix<double, 6, 1>::Zero();
        for (std::size_t i = 0; i < problem.size(); ++i) {
            const Vec3 rotated = out.pose.rotation * problem.world_points[i];
            const Vec3 pc = rotated + out.pose.translation;
            const double inv_z = 1.0 / pc.z();
            const Vec2 proj(k.fx * pc.x() * inv_z + k.cx, k.fy * pc.y() * inv_z + k.cy);
            const Vec2 residual = proj - problem.pixels[i];

            Eigen::Matrix<double, 2, 3> d_proj;
            d_proj << k.fx * inv_z, 0.0, -k.fx * pc.x() * inv_z * inv_z, 0.0, k.fy * inv_z,
                -k.fy * pc.y() * inv_z * inv_z;
            // Left perturbation: d(exp(w) R x)/dw = -[R x]_x.
            Mat3 skew;
            skew << 0.0, -rotated.z(), rotated.y(), rotated.z(), 0.0, -rotated.x(), -rotated.y(), rotated.x(), 0.0;
            Eigen::Matrix<double, 2, 6> jac;
            jac.leftCols<3>() = -d_proj * skew;
            jac.rightCols<3>() = d_proj;
            normal.noalias() += jac.transpose() * jac;
            gradient.noalias() += jac.transpose() * residual;
        }

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(normal);
        const double lo = eig.eigenvalues()(0);
        const double hi = eig.eigenvalues()(5);
        if (!(hi > 0.0) || !(lo > 1e-14 * hi)) {
            out.pose = pose;
            out.singular = true;
            out.rmse_history.resize(1);
            out.iterations = 0;
            return out;
        }
        const Eigen::Matrix<double, 6, 1> delta = normal.ldlt().solve(-gradient);

        bool accepted = false;
        double scale = 1.0;
        for (int halving = 0; halving <= 8; ++halving, scale *= 0.5) {
            RigidPose candidate;
            candidate.rotation = project_to_so3(axis_angle_to_rotation(scale * delta.head<3>()) * out.pose.rotation);
            candidate.translation = out.pose.translation + scale * delta.tail<3>();
            const double candidate_cost = reprojection_cost(candidate, problem);
            if (candidate_cost <= cost) {
                out.pose = candidate;
                cost = candidate_cost;
                accepted = true;
                break;
            }
        }
        out.iterations = iter + 1;
        out.rmse_history.push_back(std::sqrt(cost / count));
        if (!accepted || delta.norm() < 1e-14) {
            break;
        }
    }
    return out;
}

void RansacConfig::validate() const {
    if (max_iterations < 1) {
        throw Error(ErrorCode::PreconditionViolation, "RANSAC needs at least one iteration");
    }
    if (!(inlier_threshold_px > 0.0)) {
        throw Error(ErrorCode::PreconditionViolation, "inlier threshold must be positive");
    }
    if (refine && refine_iterations < 1) {
        throw Error(ErrorCode::PreconditionViolation, "refinement needs at least one iteration");
    }
}

RansacResult solve_pnp_ransac(const PnPProblem& problem, const RansacConfig& config) {
    problem.validate();
    config.validate();
    const std::size_t m = problem.size();
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);

    std::size_t best_count = 0;
    double best_mean = kInf;
    RigidPose best_pose;
    std::vector<std::size_t> best_inliers;
    int needed = config.max_iterations;
    int iter = 0;

    std::vector<std::size_t> sample(RansacConfig::kMinSample);
    for (; iter < std::min(needed, config.max_iterations); ++iter) {
        for (std::size_t s = 0; s < sample.size(); ++s) {
            std::size_t idx = 0;
            do {
                idx = pick(rng);
            } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(s), idx) !=
                     sample.begin() + static_cast<std::ptrdiff_t>(s));
            sample[s] = idx;
        }

        RigidPose hypothesis;
        try {
            hypothesis = solve_epnp(problem.subset(sample));
        } catch (const Error&) {
            continue;
        }
        const auto errors = reprojection_errors(hypothesis, problem);
        std::vector<std::size_t> inliers;
        double sum = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (errors[i] < config.inlier_threshold_px) {
                inliers.push_back(i);
                sum += errors[i];
            }
        }
        const double mean = inliers.empty() ? kInf : sum / static_cast<double>(inliers.size());
        if (inliers.size() > best_count || (inliers.size() == best_count && !inliers.empty() && mean < best_mean)) {
            best_count = inliers.size();
            best_mean = mean;
            best_pose = hypothesis;
            best_inliers = std::move(inliers);

            if (config.confidence > 0.0 && config.confidence < 1.0) {
                const double ratio = static_cast<double>(best_count) / static_cast<double>(m);
                const double all_inlier = std::pow(ratio, RansacConfig::kMinSample);
                if (all_inlier >= 1.0) {
                    needed = iter + 1;
                } else if (all_inlier > 0.0) {
                    const double n = std::log(1.0 - config.confidence) / std::log(1.0 - all_inlier);
                    if (n < static_cast<double>(config.max_iterations)) {
                        needed = std::max(iter + 1, static_cast<int>(std::ceil(n)));
                    }
                }
            }
        }
    }

    if (best_count < RansacConfig::kMinSample) {
        throw Error(ErrorCode::NoConsensus, "best hypothesis has " + std::to_string(best_count) + " inliers");
    }

    RansacResult result;
    result.iterations = iter;
    result.pose = best_pose;
    // Re-estimate on the consensus set until it stops changing.
    std::vector<std::size_t> fit_set = trimmed_inliers(best_pose, problem, config.inlier_threshold_px);
    for (int round = 0; round < 5 && fit_set.size() >= RansacConfig::kMinSample; ++round) {
        const PnPProblem fit_problem = problem.subset(fit_set);
        RigidPose pose;
        try {
            pose = solve_epnp(fit_problem);
        } catch (const Error&) {
            break;
        }
        if (config.refine) {
            pose = refine_pose(pose, fit_problem, config.refine_iterations).pose;
        }
        auto next = trimmed_inliers(pose, problem, config.inlier_threshold_px);
        if (next.size() < RansacConfig::kMinSample) {
            break;
        }
        result.pose = pose;
        const bool stable = next == fit_set;
        fit_set = std::move(next);
        if (stable) {
            break;
        }
    }
    const auto errors = reprojection_errors(result.pose, problem);
    for (std::size_t i = 0; i < m; ++i) {
        if (errors[i] < config.inlier_threshold_px) {
            result.inliers.push_back(i);
        }
    }
    return result;
}

RigidPose solve_dlt(const PnPProblem& problem) {
    problem.validate();
    const std::size_t m = problem.size();
    if (m < 6) {
        throw Error(ErrorCode::PreconditionViolation, "DLT needs at least six correspondences");
    }
    const auto pa = principal_axes(problem.world_points);
    if (is_linear(pa) || is_planar(pa)) {
        throw Error(ErrorCode::DegenerateGeometry, "DLT needs non-coplanar world points");
    }

    // Hartley normalisation of both point sets.
    Vec2 mean2 = Vec2::Zero();
    for (const auto& p : problem.pixels) {
        mean2 += p;
    }
    mean2 /= static_cast<double>(m);
    double spread2 = 0.0;
    for (const auto& p : problem.pixels) {
        spread2 += (p - mean2).norm();
    }
    const double s2 = std::sqrt(2.0) * static_cast<double>(m) / spread2;
    double spread3 = 0.0;
    for (const auto& p : problem.world_points) {
        spread3 += (p - pa.centroid).norm();
    }
    const double s3 = std::sqrt(3.0) * static_cast<double>(m) / spread3;

    Eigen::Matrix3d t2 = Eigen::Matrix3d::Identity();
    t2(0, 0) = t2(1, 1) = s2;
    t2.block<2, 1>(0, 2) = -s2 * mean2;
    Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
    t3(0, 0) = t3(1, 1) = t3(2, 2) = s3;
    t3.block<3, 1>(0, 3) = -s3 * pa.centroid;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * m), 12);
    for (std::size_t i = 0; i < m; ++i) {
        const Eigen::Vector4d x = t3 * problem.world_points[i].homogeneous();
        const Eigen::Vector3d u = t2 * problem.pixels[i].homogeneous();
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.block<1, 4>(r, 0) = x.transpose();
        a.block<1, 4>(r, 8) = -u.x() * x.transpose();
        a.block<1, 4>(r + 1, 4) = x.transpose();
        a.block<1, 4>(r + 1, 8) = -u.y() * x.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd p = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> normalized;
    normalized << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();
    const Eigen::Matrix<double, 3, 4> projection = t2.inverse() * normalized * t3;

    // P ~ K [R | t]: strip K, then fix scale and sign from the rotation block.
    Eigen::Matrix<double, 3, 4> rt = problem.intr.matrix().inverse() * projection;
    const double det = rt.leftCols<3>().determinant();
    if (!(std::abs(det) > 0.0)) {
        throw Error(ErrorCode::DegenerateGeometry, "singular projection matrix");
    }
    rt /= std::cbrt(det);
    RigidPose pose;
    pose.rotation = project_to_so3(rt.leftCols<3>());
    const Eigen::JacobiSVD<Mat3> rsvd(rt.leftCols<3>());
    pose.translation = rt.col(3) / rsvd.singularValues().mean();
    return pose;
}

}  // namespace perspface
