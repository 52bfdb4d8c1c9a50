#include "manitwin/geometry/mesh_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "manitwin/errors.hpp"
#include "manitwin/io_util.hpp"

namespace manitwin {
namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw ParseError("OBJ line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        fail(line, "non-numeric coordinate '" + std::string(tok) + "'");
    if (!std::isfinite(value)) fail(line, "non-finite coordinate");
    return value;
}

long parse_index(std::string_view tok, std::size_t line) {
    // "v", "v/vt", "v//vn", "v/vt/vn": only the position index matters.
    const std::string_view head = tok.substr(0, tok.find('/'));
    long value = 0;
    const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
    if (ec != std::errc() || ptr != head.data() + head.size() || value == 0)
        fail(line, "invalid face index '" + std::string(tok) + "'");
    return value;
}

}  // namespace

TriMesh load_mesh(std::string_view text) {
    std::vector<double> coords;
    std::vector<std::int32_t> tris;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tokens = split_ws(line);
        if (tokens.empty()) {
            if (end == text.size()) break;
            continue;
        }

        if (tokens[0] == "v") {
            if (tokens.size() < 4) fail(line_no, "vertex needs three coordinates");
            for (int k = 1; k <= 3; ++k) coords.push_back(parse_double(tokens[static_cast<std::size_t>(k)], line_no));
        } else if (tokens[0] == "f") {
            if (tokens.size() < 4) fail(line_no, "face needs at least three vertices");
            const long n_verts = static_cast<long>(coords.size() / 3);
            std::vector<std::int32_t> poly;
            for (std::size_t k = 1; k < tokens.size(); ++k) {
                long idx = parse_index(tokens[k], line_no);
                // Negative indices count back from the latest vertex.
                idx = idx > 0 ? idx - 1 : n_verts + idx;
                if (idx < 0 || idx >= n_verts)
                    fail(line_no, "face references vertex " + std::string(tokens[k]) + " of " +
                                      std::to_string(n_verts));
                poly.push_back(static_cast<std::int32_t>(idx));
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                const std::int32_t a = poly[0], b = poly[k], c = poly[k + 1];
                if (a == b || b == c || a == c) fail(line_no, "face repeats a vertex");
                tris.insert(tris.end(), {a, b, c});
            }
        }
        if (end == text.size()) break;
    }

    TriMesh mesh;
    mesh.vertices.resize(static_cast<Index>(coords.size() / 3), 3);
    for (Index i = 0; i < mesh.vertices.rows(); ++i)
        for (int k = 0; k < 3; ++k) mesh.vertices(i, k) = coords[static_cast<std::size_t>(3 * i + k)];
    mesh.faces.resize(static_cast<Index>(tris.size() / 3), 3);
    for (Index i = 0; i < mesh.faces.rows(); ++i)
        for (int k = 0; k < 3; ++k) mesh.faces(i, k) = tris[static_cast<std::size_t>(3 * i + k)];
    return mesh;
}

TriMesh load_mesh_file(const std::filesystem::path& path) {
    try {
        return load_mesh(read_text_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string to_obj(const TriMesh& mesh) {
    std::string out;
    char buf[128];
    for (Index i = 0; i < mesh.num_vertices(); ++i) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", mesh.vertices(i, 0), mesh.vertices(i, 1),
                      mesh.vertices(i, 2));
        out += buf;
    }
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        std::snprintf(buf, sizeof buf, "f %d %d %d\n", mesh.faces(f, 0) + 1, mesh.faces(f, 1) + 1,
                      mesh.faces(f, 2) + 1);
        out += buf;
    }
    return out;
}

void save_mesh_file(const TriMesh& mesh, const std::filesystem::path& path) {
    write_file_atomic(path, to_obj(mesh));
}

void validate_mesh(const TriMesh& mesh) {
    if (!mesh.vertices.allFinite()) throw ValidationError("vertices", "non-finite coordinate");
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const auto idx = mesh.faces(f, c);
            if (idx < 0 || idx >= mesh.num_vertices())
                throw ValidationError("faces[" + std::to_string(f) + "]", "index out of range");
        }
        if (mesh.faces(f, 0) == mesh.faces(f, 1) || mesh.faces(f, 1) == mesh.faces(f, 2) ||
            mesh.faces(f, 0) == mesh.faces(f, 2))
            throw ValidationError("faces[" + std::to_string(f) + "]", "repeated vertex");
    }
}

}  // namespace manitwin
