#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include <Eigen/LU>

#include "perspface/correspondence.hpp"
#include "perspface/synth.hpp"
#include "support.hpp"

using namespace perspface;

namespace {

// Mesh in front of the camera with pose identity: a square at z = 1
// split into two triangles, covering pixels [540, 740] x [260, 460].
TriangleMesh square_mesh() {
    TriangleMesh mesh;
    mesh.vertices = {Vec3(-0.1, -0.1, 1.0), Vec3(0.1, -0.1, 1.0), Vec3(0.1, 0.1, 1.0), Vec3(-0.1, 0.1, 1.0)};
    mesh.uv_coords = {Vec2(0.1, 0.1), Vec2(0.9, 0.1), Vec2(0.9, 0.9), Vec2(0.1, 0.9)};
    mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
    return mesh;
}

SyntheticSample small_sample(std::size_t id, BarycentricMode mode = BarycentricMode::PerspectiveCorrect) {
    GeneratorConfig config;
    config.count = 1;
    config.seed = 21;
    config.pixels_per_sample = 256;
    config.barycentric = mode;
    static const TriangleMesh mesh = make_synthetic_face(0);
    return make_sample(config, mesh, id);
}

}  // namespace

TEST_CASE("barycentric coordinates of simple points") {
    const Vec2 a(0, 0), b(2, 0), c(0, 2);
    auto w = barycentric_coordinates(Vec2(2.0 / 3.0, 2.0 / 3.0), a, b, c);
    CHECK(w[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(w[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    w = barycentric_coordinates(b, a, b, c);
    CHECK(w == std::array<double, 3>{0.0, 1.0, 0.0});

    w = barycentric_coordinates(Vec2(1, 0), a, b, c);
    CHECK(w == std::array<double, 3>{0.5, 0.5, 0.0});
}

TEST_CASE("barycentric coordinates agree with a dense 2x2 solve") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    int tested = 0;
    while (tested < 1000) {
        const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng)), p(u(rng), u(rng));
        Eigen::Matrix2d m;
        m << b - a, c - a;
        if (std::abs(m.determinant()) < 1.0) {
            continue;
        }
        const Vec2 bc = m.inverse() * (p - a);
        const auto w = barycentric_coordinates(p, a, b, c);
        CHECK(std::abs(w[1] - bc.x()) < 1e-9);
        CHECK(std::abs(w[2] - bc.y()) < 1e-9);
        CHECK(std::abs(w[0] - (1.0 - bc.x() - bc.y())) < 1e-9);
        ++tested;
    }
}

TEST_CASE("barycentric coordinates are invariant to affine maps") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec2 a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng)), p(u(rng), u(rng));
        Eigen::Matrix2d A;
        A << u(rng), u(rng), u(rng), u(rng);
        if (std::abs(A.determinant()) < 0.5) {
            continue;
        }
        const Vec2 t(u(rng), u(rng));
        const auto w0 = barycentric_coordinates(p, a, b, c);
        const auto w1 = barycentric_coordinates(A * p + t, A * a + t, A * b + t, A * c + t);
        for (int k = 0; k < 3; ++k) {
            CHECK(w0[k] == doctest::Approx(w1[k]).epsilon(1e-7).scale(1.0));
        }
    }
}

TEST_CASE("degenerate triangle") {
    CHECK_ERROR(barycentric_coordinates(Vec2(0, 0), Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)),
                ErrorCode::DegenerateTriangle);
}

TEST_CASE("ground truth at a projected vertex is one-hot") {
    const auto mesh = square_mesh();
    const CameraIntrinsics intr;
    const Vec2List pixels{Vec2(740, 260), Vec2(540, 460)};
    const auto m = build_gt_correspondence(mesh, RigidPose::identity(), intr, pixels);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.row(0).size() == 1);
    CHECK(m.row(0)[0] == CorrespondenceEntry{1, 1.0});
    REQUIRE(m.row(1).size() == 1);
    CHECK(m.row(1)[0] == CorrespondenceEntry{3, 1.0});
}

TEST_CASE("ground-truth rows are distributions over at most three vertices") {
    const auto s = small_sample(0);
    const auto& m = s.correspondence;
    CHECK(m.rows() == s.pixels.size());
    CHECK(m.cols() == s.mesh.vertex_count());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        CHECK(row.size() >= 1);
        CHECK(row.size() <= 3);
        double sum = 0.0;
        for (const auto& e : row) {
            CHECK(e.weight > 0.0);
            sum += e.weight;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    CHECK_NOTHROW(m.validate(1e-12, 3));
}

TEST_CASE("pixel outside every projected triangle") {
    const auto mesh = square_mesh();
    const Vec2List pixels{Vec2(640, 360), Vec2(10, 10)};
    try {
        build_gt_correspondence(mesh, RigidPose::identity(), CameraIntrinsics{}, pixels);
        FAIL("expected PixelOutsideFace");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PixelOutsideFace);
        CHECK(e.index() == std::optional<std::size_t>(1));
    }
}

TEST_CASE("the front-most triangle wins") {
    TriangleMesh mesh;
    mesh.vertices = {Vec3(-0.1, -0.1, 2.0), Vec3(0.1, -0.1, 2.0), Vec3(0.0, 0.1, 2.0),
                     Vec3(-0.1, -0.1, 1.0), Vec3(0.1, -0.1, 1.0), Vec3(0.0, 0.1, 1.0)};
    mesh.uv_coords = {Vec2(0.1, 0.1), Vec2(0.2, 0.1), Vec2(0.1, 0.2),
                      Vec2(0.5, 0.5), Vec2(0.6, 0.5), Vec2(0.5, 0.6)};
    for (auto order : {std::vector<Triangle>{{0, 1, 2}, {3, 4, 5}}, std::vector<Triangle>{{3, 4, 5}, {0, 1, 2}}}) {
        mesh.triangles = order;
        const Vec2List pixels{Vec2(640, 360)};
        const auto m = build_gt_correspondence(mesh, RigidPose::identity(), CameraIntrinsics{}, pixels);
        for (const auto& e : m.row(0)) {
            CHECK(e.vertex >= 3);
        }
    }
}

TEST_CASE("perspective-correct weights reproject onto the pixel") {
    for (std::size_t id = 0; id < 3; ++id) {
        const auto s = small_sample(id);
        const auto points = corresponding_points(s.correspondence, s.mesh.vertices);
        double worst = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            worst = std::max(worst, (project_point(points[i], s.pose, s.intr) - s.pixels[i]).norm());
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("screen-space weights are affine in the image") {
    const auto s = small_sample(1, BarycentricMode::ScreenSpace);
    const auto proj = project_perspective(s.mesh.vertices, s.pose, s.intr);
    for (std::size_t i = 0; i < s.pixels.size(); ++i) {
        Vec2 p = Vec2::Zero();
        for (const auto& e : s.correspondence.row(i)) {
            p += e.weight * proj.pixels[static_cast<std::size_t>(e.vertex)];
        }
        CHECK((p - s.pixels[i]).norm() < 1e-8);
    }
}

TEST_CASE("corresponding points match a dense product") {
    const auto s = small_sample(2);
    const auto points = corresponding_points(s.correspondence, s.mesh.vertices);
    Eigen::MatrixXd x(s.mesh.vertex_count(), 3);
    for (std::size_t k = 0; k < s.mesh.vertex_count(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = s.mesh.vertices[k].transpose();
    }
    const Eigen::MatrixXd dense = s.correspondence.to_dense() * x;
    REQUIRE(points.size() == static_cast<std::size_t>(dense.rows()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        CHECK((points[i] - dense.row(static_cast<Eigen::Index>(i)).transpose()).norm() < 1e-12);
    }
}

TEST_CASE("one-hot rows pick vertices, repeated vertices are fine") {
    const Vec3List verts{Vec3(1, 2, 3), Vec3(4, 5, 6), Vec3(-1, 0, 1)};
    CorrespondenceMatrix m(3);
    const CorrespondenceEntry r0[] = {{1, 1.0}};
    const CorrespondenceEntry r1[] = {{1, 1.0}};
    const CorrespondenceEntry r2[] = {{0, 0.5}, {2, 0.5}};
    m.append_row(r0);
    m.append_row(r1);
    m.append_row(r2);
    const auto p = corresponding_points(m, verts);
    CHECK(p[0] == verts[1]);
    CHECK(p[1] == verts[1]);
    CHECK(p[2] == Vec3(0, 1, 2));

    const Vec3List short_list{Vec3(0, 0, 0)};
    CHECK_ERROR(corresponding_points(m, short_list), ErrorCode::DimensionMismatch);
}

TEST_CASE("sampling a one-pixel mask repeats that pixel") {
    SegmentationMask mask(72, 128);
    mask.set(10, 20, true);
    const auto pixels = sample_pixels(mask, 1024, 3);
    REQUIRE(pixels.size() == 1024);
    for (const auto& p : pixels) {
        CHECK(p == Vec2(20, 10));
    }
}

TEST_CASE("sampling is deterministic and stays on the mask") {
    SegmentationMask mask(50, 60);
    for (int r = 10; r < 40; ++r) {
        for (int c = 5; c < 30; ++c) {
            mask.set(r, c, true);
        }
    }
    const auto a = sample_pixels(mask, 300, 9);
    const auto b = sample_pixels(mask, 300, 9);
    CHECK(a == b);
    CHECK(a != sample_pixels(mask, 300, 10));
    std::set<std::pair<int, int>> seen;
    for (const auto& p : a) {
        CHECK(mask.at(static_cast<int>(p.y()), static_cast<int>(p.x())));
        seen.emplace(static_cast<int>(p.x()), static_cast<int>(p.y()));
    }
    // 750 set pixels: drawn without replacement.
    CHECK(seen.size() == 300);

    CHECK_ERROR(sample_pixels(SegmentationMask(4, 4), 1, 0), ErrorCode::EmptyMask);
}

TEST_CASE("positional encoding values") {
    const Vec2List pixels{Vec2(0, 0), Vec2(1, 0)};
    const auto e = positional_encoding_2d(pixels, 4);
    REQUIRE(e.rows() == 2);
    REQUIRE(e.cols() == 4);
    CHECK(e(0, 0) == 0.0);
    CHECK(e(0, 1) == 1.0);
    CHECK(e(0, 2) == 0.0);
    CHECK(e(0, 3) == 1.0);
    CHECK(e(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    CHECK(e(1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
    CHECK(e(1, 2) == 0.0);
    CHECK(e(1, 3) == 1.0);

    CHECK_ERROR(positional_encoding_2d(pixels, 6), ErrorCode::InvalidDimension);
    CHECK_ERROR(positional_encoding_2d(pixels, 0), ErrorCode::InvalidDimension);
}

TEST_CASE("positional encoding separates every pixel of a 192 x 192 grid") {
    Vec2List pixels;
    for (int r = 0; r < 192; ++r) {
        for (int c = 0; c < 192; ++c) {
            pixels.emplace_back(c, r);
        }
    }
    for (int d : {16, 32}) {
        const auto e = positional_encoding_2d(pixels, d);
        CHECK(e.cwiseAbs().maxCoeff() <= 1.0);
        std::set<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            std::vector<double> v(static_cast<std::size_t>(d));
            for (int k = 0; k < d; ++k) {
                v[static_cast<std::size_t>(k)] = e(i, k);
            }
            rows.insert(v);
        }
        CHECK(rows.size() == pixels.size());
    }
}

TEST_CASE("segmentation rasterization") {
    const CameraIntrinsics intr{100, 100, 16, 12};
    const auto empty = rasterize_segmentation(TriangleMesh{}, RigidPose::identity(), intr, 24, 32);
    CHECK(empty.count() == 0);

    TriangleMesh big;
    big.vertices = {Vec3(-10, -10, 1), Vec3(10, -10, 1), Vec3(0, 10, 1), Vec3(-10, 10, 1), Vec3(10, 10, 1)};
    big.uv_coords = Vec2List(5, Vec2(0.5, 0.5));
    big.triangles = {{0, 1, 4}, {0, 4, 3}};
    CHECK(rasterize_segmentation(big, RigidPose::identity(), intr, 24, 32).count() == 24u * 32u);

    const auto s = small_sample(0);
    const int h = 90, w = 160;
    CameraIntrinsics small_intr = s.intr;
    small_intr.fx /= 8;
    small_intr.fy /= 8;
    small_intr.cx /= 8;
    small_intr.cy /= 8;
    const auto fast = rasterize_segmentation(s.mesh, s.pose, small_intr, h, w);
    const auto proj = project_perspective(s.mesh.vertices, s.pose, small_intr);
    SegmentationMask slow(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (const auto& t : s.mesh.triangles) {
                const Vec2 a = proj.pixels[t[0]], b = proj.pixels[t[1]], cc = proj.pixels[t[2]];
                const double area = (b - a).x() * (cc - a).y() - (b - a).y() * (cc - a).x();
                if (std::abs(0.5 * area) <= 1e-12) {
                    continue;
                }
                const auto bw = barycentric_coordinates(Vec2(c, r), a, b, cc);
                if (bw[0] >= -1e-10 && bw[1] >= -1e-10 && bw[2] >= -1e-10) {
                    slow.set(r, c, true);
                    break;
                }
            }
        }
    }
    CHECK(fast == slow);
    CHECK(fast.count() > 0);
}

TEST_CASE("correspondence text round trip") {
    const auto s = small_sample(0);
    const std::string text = format_correspondence(s.correspondence);
    CHECK(text.rfind("CORR 256 1220\n", 0) == 0);
    CHECK(parse_correspondence(text) == s.correspondence);

    test::TempDir dir;
    save_correspondence(s.correspondence, dir / "c.txt");
    CHECK(load_correspondence(dir / "c.txt") == s.correspondence);
    CHECK_ERROR(load_correspondence(dir / "none.txt"), ErrorCode::IoError);
}

TEST_CASE("correspondence parse errors") {
    CHECK_ERROR(parse_correspondence(""), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 1\n"), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 2 3\n0 1 0:1\n"), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 1 3\n0 1 0-1\n"), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 1 3\n0 2 0:1\n"), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 1 3\n0 1 5:1\n"), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 1 3\n0 1 0:x\n"), ErrorCode::ParseError);
    CHECK_ERROR(parse_correspondence("CORR 1 3\n0 1 0:1\nextra\n"), ErrorCode::ParseError);
}

TEST_CASE("row validation") {
    CorrespondenceMatrix m(3);
    const CorrespondenceEntry good[] = {{0, 0.25}, {2, 0.75}};
    const CorrespondenceEntry light[] = {{1, 0.5}};
    m.append_row(good);
    CHECK_NOTHROW(m.validate());
    CHECK_ERROR(m.validate(1e-6, 1), ErrorCode::InvariantViolation);
    m.append_row(light);
    try {
        m.validate();
        FAIL("expected NotAProbabilityRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotAProbabilityRow);
        CHECK(e.index() == std::optional<std::size_t>(1));
    }

    CorrespondenceMatrix neg(2);
    const CorrespondenceEntry bad[] = {{0, 1.5}, {1, -0.5}};
    neg.append_row(bad);
    CHECK_ERROR(neg.validate(), ErrorCode::NotAProbabilityRow);

    CorrespondenceMatrix wide(2);
    const CorrespondenceEntry oob[] = {{2, 1.0}};
    wide.append_row(oob);
    CHECK_ERROR(wide.validate(), ErrorCode::InvariantViolation);
}
