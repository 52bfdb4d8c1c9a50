#include "manitwin/geometry/shapes.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace manitwin::shapes {
namespace {

TriMesh build(const std::vector<Vector3d>& verts, const std::vector<std::array<int, 3>>& tris) {
    TriMesh m;
    m.vertices.resize(static_cast<Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) m.vertices.row(static_cast<Index>(i)) = verts[i].transpose();
    m.faces.resize(static_cast<Index>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i)
        m.faces.row(static_cast<Index>(i)) << tris[i][0], tris[i][1], tris[i][2];
    return m;
}

// Extrudes a counter-clockwise polygon in the xy plane over z in [z0, z1].
TriMesh extrude(const std::vector<Eigen::Vector2d>& poly, double z0, double z1) {
    const int n = static_cast<int>(poly.size());
    std::vector<Vector3d> v;
    for (const auto& p : poly) v.emplace_back(p.x(), p.y(), z0);
    for (const auto& p : poly) v.emplace_back(p.x(), p.y(), z1);
    std::vector<std::array<int, 3>> t;
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        t.push_back({i, j, n + j});
        t.push_back({i, n + j, n + i});
    }
    // Caps by fan from vertex 0 (polygon must be star-shaped from it).
    for (int i = 1; i + 1 < n; ++i) {
        t.push_back({0, i + 1, i});
        t.push_back({n, n + i, n + i + 1});
    }
    return build(v, t);
}

}  // namespace

TriMesh box(const Vector3d& size, const Vector3d& center) {
    const Vector3d h = 0.5 * size;
    std::vector<Vector3d> v;
    for (int i = 0; i < 8; ++i)
        v.push_back(center + Vector3d((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z()));
    const std::vector<std::array<int, 3>> t{
        {0, 2, 1}, {1, 2, 3},  // -z
        {4, 5, 6}, {5, 7, 6},  // +z
        {0, 1, 4}, {1, 5, 4},  // -y
        {2, 6, 3}, {3, 6, 7},  // +y
        {0, 4, 2}, {2, 4, 6},  // -x
        {1, 3, 5}, {3, 7, 5},  // +x
    };
    return build(v, t);
}

TriMesh uv_sphere(double radius, int rings, int segments, const Vector3d& center) {
    std::vector<Vector3d> v;
    v.push_back(center + Vector3d(0, 0, radius));
    for (int r = 1; r < rings; ++r) {
        const double theta = std::numbers::pi * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / segments;
            v.push_back(center + radius * Vector3d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                                                   std::cos(theta)));
        }
    }
    v.push_back(center + Vector3d(0, 0, -radius));
    const int south = static_cast<int>(v.size()) - 1;
    const auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };

    std::vector<std::array<int, 3>> t;
    for (int s = 0; s < segments; ++s) t.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
    for (int r = 1; r + 1 < rings; ++r)
        for (int s = 0; s < segments; ++s) {
            const int a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
            const int c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
            t.push_back({a, c, d});
            t.push_back({a, d, b});
        }
    for (int s = 0; s < segments; ++s) t.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
    return build(v, t);
}

TriMesh cylinder(double radius, double height, int segments, const Vector3d& center) {
    std::vector<Eigen::Vector2d> poly;
    for (int s = 0; s < segments; ++s) {
        const double phi = 2.0 * std::numbers::pi * s / segments;
        poly.emplace_back(radius * std::cos(phi), radius * std::sin(phi));
    }
    TriMesh m = extrude(poly, -0.5 * height, 0.5 * height);
    m.vertices.rowwise() += center.transpose();
    return m;
}

TriMesh wedge(double half_base, double height, double depth) {
    // Extrude the triangle along y: build in xy with (x, z) then swap axes.
    const std::vector<Eigen::Vector2d> tri{{-half_base, 0.0}, {half_base, 0.0}, {0.0, height}};
    TriMesh m = extrude(tri, -0.5 * depth, 0.5 * depth);
    // (x, y, z) -> (x, -z, y) is a proper rotation, so winding stays outward.
    for (Index i = 0; i < m.num_vertices(); ++i) {
        const Vector3d p = m.vertex(i);
        m.vertices.row(i) << p.x(), -p.z(), p.y();
    }
    return m;
}

TriMesh l_shape(double long_side, double short_side, double thickness, double height) {
    const std::vector<Eigen::Vector2d> poly{{0.0, 0.0},       {long_side, 0.0},       {long_side, thickness},
                                            {thickness, thickness}, {thickness, short_side}, {0.0, short_side}};
    return extrude(poly, 0.0, height);
}

TriMesh merge(const TriMesh& a, const TriMesh& b) {
    TriMesh m;
    m.vertices.resize(a.num_vertices() + b.num_vertices(), 3);
    m.vertices << a.vertices, b.vertices;
    m.faces.resize(a.num_faces() + b.num_faces(), 3);
    m.faces.topRows(a.num_faces()) = a.faces;
    m.faces.bottomRows(b.num_faces()) = b.faces.array() + static_cast<std::int32_t>(a.num_vertices());
    return m;
}

}  // namespace manitwin::shapes
