#include "doctest.h"

#include <string>

#include "perspface/io_util.hpp"
#include "perspface/mesh_io.hpp"
#include "perspface/synth.hpp"
#include "support.hpp"

using namespace perspface;

namespace {

const char* kTriangle =
    "# one triangle\n"
    "v 0 0 0\n"
    "v 1 0 0\n"
    "v 0 1 0\n"
    "vt 0.1 0.1\n"
    "vt 0.9 0.1\n"
    "vt 0.1 0.9\n"
    "f 1/1 2/2 3/3\n";

std::size_t parse_error_line(const std::string& text) {
    try {
        parse_mesh(text);
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::ParseError);
        REQUIRE(e.index().has_value());
        return *e.index();
    }
    FAIL("expected ParseError");
    return 0;
}

}  // namespace

TEST_CASE("parse a minimal OBJ") {
    const auto mesh = parse_mesh(kTriangle);
    REQUIRE(mesh.vertex_count() == 3);
    REQUIRE(mesh.triangle_count() == 1);
    CHECK(mesh.triangles[0] == Triangle{0, 1, 2});
    CHECK(mesh.uv_coords[2] == Vec2(0.1, 0.9));
    CHECK(mesh.vertices[1] == Vec3(1, 0, 0));
}

TEST_CASE("synthetic face survives save and load bit-exactly") {
    test::TempDir dir;
    const auto mesh = make_synthetic_face(4);
    save_mesh(mesh, dir / "face.obj");
    const auto back = load_mesh(dir / "face.obj");
    CHECK(back == mesh);
    CHECK(format_mesh(back) == read_file(dir / "face.obj"));
}

TEST_CASE("arbitrary doubles round-trip through the text format") {
    TriangleMesh mesh = parse_mesh(kTriangle);
    mesh.vertices[0] = Vec3(0.1, 1.0 / 3.0, -2.718281828459045e-7);
    mesh.vertices[1] = Vec3(1e-300, 123456789.123456789, -0.0);
    mesh.uv_coords[0] = Vec2(0.123456789012345678, 0.5);
    CHECK(parse_mesh(format_mesh(mesh)) == mesh);
}

TEST_CASE("OBJ parse errors carry the line number") {
    CHECK(parse_error_line("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 0/0 1/1 2/2\n") == 7);
    CHECK(parse_error_line("v 0 0 0\nvn 0 0 1\n") == 2);
    CHECK(parse_error_line("v 0 0\n") == 1);
    CHECK(parse_error_line("v 0 0 zero\n") == 1);
    CHECK(parse_error_line("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/3 3/2\n") == 7);
    CHECK(parse_error_line("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1 2 3\n") == 7);
    CHECK(parse_error_line("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3 1/1\n") == 7);
}

TEST_CASE("missing uv for a vertex is a parse error") {
    CHECK_ERROR(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nf 1/1 2/2 3/3\n"), ErrorCode::ParseError);
}

TEST_CASE("out-of-range face index violates the mesh invariant") {
    CHECK_ERROR(parse_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 4/4\n"),
                ErrorCode::InvariantViolation);
}

TEST_CASE("comments, blank lines and CRLF are accepted") {
    const auto mesh = parse_mesh("# header\r\n\r\nv 0 0 0\r\nv 1 0 0\r\nv 0 1 0\r\n# uv\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3");
    CHECK(mesh.triangle_count() == 1);
}

TEST_CASE("missing file is an IO error") {
    test::TempDir dir;
    CHECK_ERROR(load_mesh(dir / "absent.obj"), ErrorCode::IoError);
}
