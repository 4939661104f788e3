#include "perspface/losses.hpp"

#include <cmath>
#include <string>

#include "perspface/error.hpp"

namespace perspface {

namespace {

double sign(double x) {
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

// x * log(max(x, eps)) and its derivative.
double xlogx(double x, double eps) {
    return x * std::log(std::max(x, eps));
}

double xlogx_grad(double x, double eps) {
    return x > eps ? std::log(x) + 1.0 : std::log(eps);
}

}  // namespace

void LossWeights::validate() const {
    for (double w : {uv_map, correspondence, corr_points, segmentation, entropy}) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::InvariantViolation, "loss weights must be finite and non-negative");
        }
    }
}

LossResult<std::vector<double>> uv_weighted_l1(const UVPositionMap& truth, const UVPositionMap& predicted) {
    if (truth.height() != predicted.height() || truth.width() != predicted.width()) {
        throw Error(ErrorCode::DimensionMismatch, "UV maps differ in size");
    }
    LossResult<std::vector<double>> out;
    out.gradient.assign(truth.data().size(), 0.0);
    const auto s = truth.data();
    const auto s_hat = predicted.data();
    const auto w = truth.weights();
    for (std::size_t p = 0; p < w.size(); ++p) {
        if (w[p] == 0) {
            continue;
        }
        for (std::size_t c = 0; c < 3; ++c) {
            const double diff = s_hat[p * 3 + c] - s[p * 3 + c];
            out.value += std::abs(diff);
            out.gradient[p * 3 + c] = sign(diff);
        }
    }
    return out;
}

LossResult<Eigen::MatrixXd> correspondence_loss(const Eigen::MatrixXd& predicted, const CorrespondenceMatrix& truth,
                                                const CorrespondenceLossOptions& options) {
    if (static_cast<std::size_t>(predicted.rows()) != truth.rows() ||
        static_cast<std::size_t>(predicted.cols()) != truth.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "predicted and ground-truth correspondence shapes differ");
    }
    if (predicted.rows() == 0) {
        throw Error(ErrorCode::EmptyInput, "correspondence matrix has no rows");
    }
    for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
        const auto row = predicted.row(i);
        if (!row.allFinite() || row.minCoeff() < 0.0 || std::abs(row.sum() - 1.0) > options.row_tolerance) {
            throw Error(ErrorCode::NotAProbabilityRow, "predicted row is not a distribution",
                        static_cast<std::size_t>(i));
        }
    }

    const double eps = options.log_floor;
    const double lambda = options.entropy_weight;
    const double inv_m = 1.0 / static_cast<double>(predicted.rows());
    LossResult<Eigen::MatrixXd> out;
    out.gradient = Eigen::MatrixXd::Zero(predicted.rows(), predicted.cols());
    Eigen::VectorXd truth_row(predicted.cols());

    double kl = 0.0;
    double neg_entropy = 0.0;
    for (Eigen::Index i = 0; i < predicted.rows(); ++i) {
        truth_row.setZero();
        for (const auto& e : truth.row(static_cast<std::size_t>(i))) {
            truth_row(e.vertex) += e.weight;
        }
        for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
            const double q = predicted(i, j);
            const double p = truth_row(j);
            double grad = 0.0;
            if (options.direction == KlDirection::TruthFirst) {
                if (p > 0.0) {
                    kl += p * (std::log(std::max(p, eps)) - std::log(std::max(q, eps)));
                    grad += q > eps ? -p / q : 0.0;
                }
            } else {
                kl += xlogx(q, eps) - q * std::log(std::max(p, eps));
                grad += xlogx_grad(q, eps) - std::log(std::max(p, eps));
            }
            neg_entropy += xlogx(q, eps);
            grad -= lambda * xlogx_grad(q, eps);
            out.gradient(i, j) = grad * inv_m;
        }
    }
    out.value = inv_m * (kl - lambda * neg_entropy);
    return out;
}

LossResult<Vec3List> corr_l1(std::span<const Vec3> truth, std::span<const Vec3> predicted) {
    if (truth.size() != predicted.size()) {
        throw Error(ErrorCode::DimensionMismatch, "point lists differ in length");
    }
    LossResult<Vec3List> out;
    out.gradient.reserve(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Vec3 diff = predicted[i] - truth[i];
        out.value += diff.cwiseAbs().sum();
        out.gradient.emplace_back(sign(diff.x()), sign(diff.y()), sign(diff.z()));
    }
    return out;
}

LossResult<SegmentationLogits> seg_cross_entropy(const SegmentationLogits& logits, const SegmentationMask& mask) {
    const auto pixels = mask.values().size();
    if (static_cast<std::size_t>(logits.rows()) != pixels) {
        throw Error(ErrorCode::DimensionMismatch, "logit count differs from mask pixel count");
    }
    if (pixels == 0) {
        throw Error(ErrorCode::EmptyInput, "empty mask");
    }
    const double inv_n = 1.0 / static_cast<double>(pixels);
    LossResult<SegmentationLogits> out;
    out.gradient.resize(logits.rows(), 2);
    for (Eigen::Index p = 0; p < logits.rows(); ++p) {
        const double l0 = logits(p, 0);
        const double l1 = logits(p, 1);
        const double hi = std::max(l0, l1);
        const double e0 = std::exp(l0 - hi);
        const double e1 = std::exp(l1 - hi);
        const double log_z = hi + std::log(e0 + e1);
        const int cls = mask.values()[static_cast<std::size_t>(p)] ? 1 : 0;
        out.value += log_z - logits(p, cls);
        const double p0 = e0 / (e0 + e1);
        const double p1 = e1 / (e0 + e1);
        out.gradient(p, 0) = (p0 - (cls == 0 ? 1.0 : 0.0)) * inv_n;
        out.gradient(p, 1) = (p1 - (cls == 1 ? 1.0 : 0.0)) * inv_n;
    }
    out.value *= inv_n;
    return out;
}

double total_loss(const LossTerms& terms, const LossWeights& weights) {
    weights.validate();
    return weights.uv_map * terms.uv_map + weights.correspondence * terms.correspondence +
           weights.corr_points * terms.corr_points + weights.segmentation * terms.segmentation;
}

}  // namespace perspface
