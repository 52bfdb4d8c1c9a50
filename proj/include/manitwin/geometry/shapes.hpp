#pragma once

#include "manitwin/geometry/types.hpp"

namespace manitwin::shapes {

// Procedural closed meshes with outward (counter-clockwise) winding.

TriMesh box(const Vector3d& size, const Vector3d& center = Vector3d::Zero());
TriMesh uv_sphere(double radius, int rings = 16, int segments = 32, const Vector3d& center = Vector3d::Zero());
/// Axis along z, centered at `center`.
TriMesh cylinder(double radius, double height, int segments = 32, const Vector3d& center = Vector3d::Zero());
/// Triangular prism: cross-section (-half_base, 0), (half_base, 0), (0, height)
/// in the x-z plane, extruded over y in [-depth/2, depth/2].
TriMesh wedge(double half_base, double height, double depth);
/// L-shaped prism footprint extruded along z.
TriMesh l_shape(double long_side, double short_side, double thickness, double height);

/// Disjoint union of two meshes.
TriMesh merge(const TriMesh& a, const TriMesh& b);

}  // namespace manitwin::shapes
