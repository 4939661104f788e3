#include "perspface/mesh_io.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "perspface/error.hpp"
#include "perspface/io_util.hpp"

namespace perspface {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
            ++i;
        }
        if (i > start) {
            tokens.push_back(line.substr(start, i - start));
        }
    }
    return tokens;
}

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what, line_no);
}

double parse_real(std::string_view token, std::size_t line_no) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        parse_fail(line_no, "bad number '" + std::string(token) + "'");
    }
    return value;
}

long parse_index(std::string_view token, std::size_t line_no) {
    long value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        parse_fail(line_no, "bad index '" + std::string(token) + "'");
    }
    return value;
}

}  // namespace

TriangleMesh parse_mesh(std::string_view text) {
    TriangleMesh mesh;
    std::vector<std::size_t> face_lines;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        const auto tokens = split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') {
            if (end == text.size()) {
                break;
            }
            continue;
        }
        const auto& tag = tokens[0];
        if (tag == "v") {
            if (tokens.size() != 4) {
                parse_fail(line_no, "expected 'v x y z'");
            }
            mesh.vertices.emplace_back(parse_real(tokens[1], line_no), parse_real(tokens[2], line_no),
                                       parse_real(tokens[3], line_no));
        } else if (tag == "vt") {
            if (tokens.size() != 3) {
                parse_fail(line_no, "expected 'vt u v'");
            }
            mesh.uv_coords.emplace_back(parse_real(tokens[1], line_no), parse_real(tokens[2], line_no));
        } else if (tag == "f") {
            if (tokens.size() != 4) {
                parse_fail(line_no, "expected a triangle 'f a/a b/b c/c'");
            }
            Triangle tri{};
            for (int k = 0; k < 3; ++k) {
                const auto tok = tokens[static_cast<std::size_t>(k) + 1];
                const auto slash = tok.find('/');
                if (slash == std::string_view::npos || tok.find('/', slash + 1) != std::string_view::npos) {
                    parse_fail(line_no, "face corner must be 'a/a'");
                }
                const long vi = parse_index(tok.substr(0, slash), line_no);
                const long ti = parse_index(tok.substr(slash + 1), line_no);
                if (vi < 1 || ti < 1) {
                    parse_fail(line_no, "indices are 1-based");
                }
                if (vi != ti) {
                    parse_fail(line_no, "vertex and uv indices must be equal");
                }
                tri[static_cast<std::size_t>(k)] = static_cast<int>(vi - 1);
            }
            mesh.triangles.push_back(tri);
            face_lines.push_back(line_no);
        } else {
            parse_fail(line_no, "unsupported directive '" + std::string(tag) + "'");
        }
        if (end == text.size()) {
            break;
        }
    }
    if (mesh.uv_coords.size() != mesh.vertices.size()) {
        throw Error(ErrorCode::ParseError,
                    "vertex/uv count mismatch (" + std::to_string(mesh.vertices.size()) + " v, " +
                        std::to_string(mesh.uv_coords.size()) + " vt)",
                    line_no);
    }
    mesh.validate();
    return mesh;
}

std::string format_mesh(const TriangleMesh& mesh) {
    mesh.validate();
    std::ostringstream out;
    out << "# perspface mesh: " << mesh.vertex_count() << " vertices, " << mesh.triangle_count() << " triangles\n";
    for (const auto& v : mesh.vertices) {
        out << "v " << format_shortest(v.x()) << ' ' << format_shortest(v.y()) << ' '
            << format_shortest(v.z()) << '\n';
    }
    for (const auto& t : mesh.uv_coords) {
        out << "vt " << format_shortest(t.x()) << ' ' << format_shortest(t.y()) << '\n';
    }
    for (const auto& tri : mesh.triangles) {
        out << 'f';
        for (int idx : tri) {
            out << ' ' << idx + 1 << '/' << idx + 1;
        }
        out << '\n';
    }
    return out.str();
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
    return parse_mesh(read_file(path));
}

void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
    write_file_atomic(path, format_mesh(mesh));
}

}  // namespace perspface
