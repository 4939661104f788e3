#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "perspface/losses.hpp"
#include "support.hpp"

using namespace perspface;

namespace {

constexpr double kH = 1e-5;
constexpr double kRelTol = 1e-5;

// |a - b| relative to the larger magnitude, with an absolute floor for
// entries that are zero on both sides.
double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / scale;
}

double central_difference(const std::function<double()>& f, double& x) {
    const double saved = x;
    x = saved + kH;
    const double up = f();
    x = saved - kH;
    const double down = f();
    x = saved;
    return (up - down) / (2.0 * kH);
}

// Strictly positive random rows summing to 1.
Eigen::MatrixXd random_rows(std::mt19937_64& rng, int m, int n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::MatrixXd out(m, n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            out(i, j) = u(rng);
        }
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

CorrespondenceMatrix sparse_truth(std::mt19937_64& rng, int m, int n) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    CorrespondenceMatrix out(static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) {
        int a = pick(rng), b = pick(rng);
        while (b == a) {
            b = pick(rng);
        }
        const double wa = u(rng);
        const double wb = u(rng);
        const CorrespondenceEntry row[] = {{a, wa / (wa + wb)}, {b, wb / (wa + wb)}};
        out.append_row(row);
    }
    return out;
}

CorrespondenceMatrix from_dense(const Eigen::MatrixXd& d) {
    CorrespondenceMatrix out(static_cast<std::size_t>(d.cols()));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        std::vector<CorrespondenceEntry> row;
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (d(i, j) != 0.0) {
                row.push_back({static_cast<int>(j), d(i, j)});
            }
        }
        out.append_row(row);
    }
    return out;
}

UVPositionMap random_map(std::mt19937_64& rng, int h, int w, bool random_weights) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution coin(0.6);
    UVPositionMap map(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const bool on = !random_weights || coin(rng);
            map.set_weight(r, c, on ? 1 : 0);
            if (on) {
                map.set(r, c, Vec3(u(rng), u(rng), u(rng)));
            }
        }
    }
    return map;
}

}  // namespace

TEST_CASE("uv L1 examples") {
    UVPositionMap truth(4, 4);
    truth.set_weight(1, 2, 1);
    truth.set(1, 2, Vec3(0.5, -0.5, 1.0));
    UVPositionMap pred = truth;
    CHECK(uv_weighted_l1(truth, pred).value == 0.0);

    pred.set(1, 2, Vec3(1.5, 1.5, 4.0));
    CHECK(uv_weighted_l1(truth, pred).value == 6.0);

    pred = truth;
    pred.set(0, 0, Vec3(7, 8, 9));
    const auto masked = uv_weighted_l1(truth, pred);
    CHECK(masked.value == 0.0);
    for (double g : masked.gradient) {
        CHECK(g == 0.0);
    }

    CHECK_ERROR(uv_weighted_l1(truth, UVPositionMap(4, 5)), ErrorCode::DimensionMismatch);
}

TEST_CASE("uv L1 gradient matches finite differences") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> offset(0.01, 0.5);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto truth = random_map(rng, 3, 4, true);
        UVPositionMap pred = truth;
        // Every channel at least 0.01 away from the kink.
        for (double& v : pred.data()) {
            v += coin(rng) ? offset(rng) : -offset(rng);
        }
        const auto result = uv_weighted_l1(truth, pred);
        auto data = pred.data();
        for (std::size_t k = 0; k < data.size(); ++k) {
            const double numeric = central_difference([&] { return uv_weighted_l1(truth, pred).value; }, data[k]);
            CHECK(relative_error(result.gradient[k], numeric) < kRelTol);
        }
    }
}

TEST_CASE("correspondence loss examples") {
    const int n = 1220;
    CorrespondenceMatrix truth(n);
    const CorrespondenceEntry r0[] = {{3, 1.0}};
    const CorrespondenceEntry r1[] = {{1219, 1.0}};
    truth.append_row(r0);
    truth.append_row(r1);
    CHECK(correspondence_loss(truth.to_dense(), truth).value == 0.0);

    // Uniform prediction: entropy term lambda * ln n per row.
    const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(2, n, 1.0 / n);
    const auto u = correspondence_loss(uniform, truth);
    const double kl_part = std::log(static_cast<double>(n));  // KL(one-hot || uniform) = ln n
    CHECK(u.value == doctest::Approx(kl_part + 0.1 * std::log(1220.0)).epsilon(1e-12));
    CHECK(0.1 * std::log(1220.0) == doctest::Approx(0.710661).epsilon(1e-5));

    std::mt19937_64 rng(2);
    const auto sparse = sparse_truth(rng, 6, 40);
    CorrespondenceLossOptions plain;
    plain.entropy_weight = 0.0;
    CHECK(std::abs(correspondence_loss(sparse.to_dense(), sparse, plain).value) < 1e-15);
}

TEST_CASE("correspondence loss shape and row checks") {
    std::mt19937_64 rng(3);
    const auto truth = sparse_truth(rng, 3, 5);
    CHECK_ERROR(correspondence_loss(Eigen::MatrixXd::Constant(3, 4, 0.25), truth), ErrorCode::DimensionMismatch);
    Eigen::MatrixXd bad = truth.to_dense();
    bad(1, 0) += 0.1;
    try {
        correspondence_loss(bad, truth);
        FAIL("expected NotAProbabilityRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotAProbabilityRow);
        CHECK(e.index() == std::optional<std::size_t>(1));
    }
    bad = truth.to_dense();
    bad.row(2).setZero();
    bad(2, 0) = -0.5;
    bad(2, 1) = 1.5;
    CHECK_ERROR(correspondence_loss(bad, truth), ErrorCode::NotAProbabilityRow);
}

TEST_CASE("correspondence loss gradient matches finite differences") {
    std::mt19937_64 rng(4);
    for (auto direction : {KlDirection::TruthFirst, KlDirection::PredictionFirst}) {
        CorrespondenceLossOptions options;
        options.direction = direction;
        options.row_tolerance = 1e-3;
        for (int trial = 0; trial < 100; ++trial) {
            const auto truth = sparse_truth(rng, 4, 6);
            Eigen::MatrixXd pred = random_rows(rng, 4, 6);
            const auto result = correspondence_loss(pred, truth, options);
            for (Eigen::Index i = 0; i < pred.rows(); ++i) {
                for (Eigen::Index j = 0; j < pred.cols(); ++j) {
                    const double numeric =
                        central_difference([&] { return correspondence_loss(pred, truth, options).value; }, pred(i, j));
                    CHECK(relative_error(result.gradient(i, j), numeric) < kRelTol);
                }
            }
        }
    }
}

TEST_CASE("correspondence loss lower bound and minimum") {
    std::mt19937_64 rng(5);
    const int n = 30;
    CorrespondenceLossOptions options;
    for (int trial = 0; trial < 200; ++trial) {
        const auto truth = sparse_truth(rng, 5, n);
        const auto value = correspondence_loss(random_rows(rng, 5, n), truth, options).value;
        CHECK(value >= -options.entropy_weight * std::log(static_cast<double>(n)));
    }

    // lambda = 0: M_hat = M is the minimum.
    options.entropy_weight = 0.0;
    const Eigen::MatrixXd target = random_rows(rng, 5, n);
    const auto truth = from_dense(target);
    const double at_truth = correspondence_loss(target, truth, options).value;
    CHECK(std::abs(at_truth) < 1e-14);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::MatrixXd other = 0.7 * target + 0.3 * random_rows(rng, 5, n);
        CHECK(correspondence_loss(other, truth, options).value >= at_truth);
    }
}

TEST_CASE("corr L1 against a brute-force sum and its gradient") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> offset(0.01, 0.3);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        Vec3List truth, pred;
        double expected = 0.0;
        for (int k = 0; k < 8; ++k) {
            truth.emplace_back(u(rng), u(rng), u(rng));
            Vec3 p = truth.back();
            for (int c = 0; c < 3; ++c) {
                p[c] += coin(rng) ? offset(rng) : -offset(rng);
                expected += std::abs(p[c] - truth.back()[c]);
            }
            pred.push_back(p);
        }
        const auto result = corr_l1(truth, pred);
        CHECK(result.value == doctest::Approx(expected).epsilon(1e-14));
        for (std::size_t k = 0; k < pred.size(); ++k) {
            for (int c = 0; c < 3; ++c) {
                const double numeric = central_difference([&] { return corr_l1(truth, pred).value; }, pred[k][c]);
                CHECK(relative_error(result.gradient[k][c], numeric) < kRelTol);
            }
        }
    }
    CHECK(corr_l1(Vec3List{}, Vec3List{}).value == 0.0);
    CHECK_ERROR(corr_l1(Vec3List(2), Vec3List(3)), ErrorCode::DimensionMismatch);
}

TEST_CASE("segmentation cross-entropy examples") {
    SegmentationMask mask(1, 2);
    mask.set(0, 0, true);
    SegmentationLogits confident(2, 2);
    confident << -20, 20, 20, -20;
    CHECK(seg_cross_entropy(confident, mask).value < 1e-8);

    SegmentationLogits flat = SegmentationLogits::Zero(2, 2);
    const auto r = seg_cross_entropy(flat, mask);
    CHECK(r.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    for (Eigen::Index p = 0; p < r.gradient.rows(); ++p) {
        CHECK(std::abs(r.gradient.row(p).sum()) < 1e-15);
    }

    CHECK_ERROR(seg_cross_entropy(SegmentationLogits::Zero(3, 2), mask), ErrorCode::DimensionMismatch);
}

TEST_CASE("segmentation cross-entropy gradient matches finite differences") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 100; ++trial) {
        SegmentationMask mask(3, 4);
        SegmentationLogits logits(12, 2);
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) {
                mask.set(r, c, coin(rng));
            }
        }
        for (Eigen::Index p = 0; p < 12; ++p) {
            logits(p, 0) = n(rng);
            logits(p, 1) = n(rng);
        }
        const auto result = seg_cross_entropy(logits, mask);
        CHECK(result.value >= 0.0);
        for (Eigen::Index p = 0; p < 12; ++p) {
            CHECK(std::abs(result.gradient.row(p).sum()) < 1e-15);
            for (int k = 0; k < 2; ++k) {
                const double numeric =
                    central_difference([&] { return seg_cross_entropy(logits, mask).value; }, logits(p, k));
                CHECK(relative_error(result.gradient(p, k), numeric) < kRelTol);
            }
        }
    }
}

TEST_CASE("non-correspondence losses are non-negative") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_map(rng, 5, 5, true);
        const auto b = random_map(rng, 5, 5, false);
        CHECK(uv_weighted_l1(a, b).value >= 0.0);
    }
}

TEST_CASE("total loss") {
    const LossWeights defaults;
    CHECK(defaults.uv_map == 0.5);
    CHECK(defaults.correspondence == 0.01);
    CHECK(defaults.corr_points == 1.0);
    CHECK(defaults.segmentation == 0.01);
    CHECK(defaults.entropy == 0.1);

    CHECK(total_loss(LossTerms{}) == 0.0);
    CHECK(total_loss(LossTerms{1, 1, 1, 1}) == doctest::Approx(1.52).epsilon(1e-15));
    CHECK(total_loss(LossTerms{1.5, 2, 3, 4}, LossWeights{1, 1, 1, 1, 0}) == 10.5);

    LossWeights negative;
    negative.segmentation = -1.0;
    CHECK_ERROR(total_loss(LossTerms{}, negative), ErrorCode::InvariantViolation);
}
