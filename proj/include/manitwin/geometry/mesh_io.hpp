#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "manitwin/geometry/types.hpp"

namespace manitwin {

/// Parses ASCII OBJ text. Only `v` and `f` records are interpreted; polygons
/// are fan-triangulated. Throws ParseError with the offending line number.
TriMesh load_mesh(std::string_view obj_text);
TriMesh load_mesh_file(const std::filesystem::path& path);

/// OBJ text with round-trip precision coordinates and 1-based indices.
std::string to_obj(const TriMesh& mesh);
void save_mesh_file(const TriMesh& mesh, const std::filesystem::path& path);

/// Throws ValidationError when an index is out of range, a coordinate is not
/// finite, or a face repeats a vertex.
void validate_mesh(const TriMesh& mesh);

}  // namespace manitwin
