#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "perspface/correspondence.hpp"
#include "perspface/geometry.hpp"
#include "perspface/uv_map.hpp"

namespace perspface {

struct LossWeights {
    double uv_map = 0.5;          // lambda_1
    double correspondence = 0.01; // lambda_2
    double corr_points = 1.0;     // lambda_3
    double segmentation = 0.01;   // lambda_4
    double entropy = 0.1;         // lambda inside the correspondence loss

    void validate() const;
};

/// Scalar loss plus its gradient with respect to the prediction, laid out
/// like the prediction.
template <typename Gradient>
struct LossResult {
    double value = 0.0;
    Gradient gradient;
};

/// Sum over pixels with ground-truth weight 1 of the channel-wise L1
/// distance. Gradient is sign(S_hat - S) * W with sign(0) = 0.
LossResult<std::vector<double>> uv_weighted_l1(const UVPositionMap& truth, const UVPositionMap& predicted);

enum class KlDirection {
    /// KL(M || M_hat): ground truth first; finite for sparse ground truth.
    TruthFirst,
    /// KL(M_hat || M): prediction first; needs the floor
    /// wherever M is zero.
    PredictionFirst,
};

struct CorrespondenceLossOptions {
    double entropy_weight = 0.1;
    KlDirection direction = KlDirection::TruthFirst;
    double log_floor = 1e-12;
    /// Allowed deviation of each predicted row sum from 1.
    double row_tolerance = 1e-6;
};

/// (1/m) * [sum_i KL_i - lambda * sum_ij M_hat_ij log M_hat_ij], logs
/// floored at `log_floor`. Throws NotAProbabilityRow(i) for a predicted row
/// that is negative or does not sum to 1, DimensionMismatch on shape.
LossResult<Eigen::MatrixXd> correspondence_loss(const Eigen::MatrixXd& predicted, const CorrespondenceMatrix& truth,
                                                const CorrespondenceLossOptions& options = {});

/// Sum of absolute coordinate differences; gradient w.r.t. the prediction.
LossResult<Vec3List> corr_l1(std::span<const Vec3> truth, std::span<const Vec3> predicted);

/// Per-pixel two-class logits, row index = row * W + col.
using SegmentationLogits = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// Mean over pixels of -log softmax(logits)[true class].
LossResult<SegmentationLogits> seg_cross_entropy(const SegmentationLogits& logits, const SegmentationMask& mask);

struct LossTerms {
    double uv_map = 0.0;
    double correspondence = 0.0;
    double corr_points = 0.0;
    double segmentation = 0.0;
};

double total_loss(const LossTerms& terms, const LossWeights& weights = {});

}  // namespace perspface
