#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "perspface/geometry.hpp"

namespace perspface {

// Wavefront OBJ subset: `v x y z`, `vt u v`, `f a/a b/b c/c` (1-based,
// vertex and uv indices equal), `#` comments. Anything else is a ParseError.

TriangleMesh parse_mesh(std::string_view text);
std::string format_mesh(const TriangleMesh& mesh);

TriangleMesh load_mesh(const std::filesystem::path& path);
void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);

}  // namespace perspface
