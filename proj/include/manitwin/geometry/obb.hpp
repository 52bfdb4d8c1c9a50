#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/sampling.hpp"
#include "manitwin/geometry/types.hpp"

namespace manitwin {

namespace detail {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& o, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Andrew's monotone chain. Collinear points are dropped.
template <typename Scalar>
std::vector<Vec2<Scalar>> convex_hull_2d(std::vector<Vec2<Scalar>> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;

    std::vector<Vec2<Scalar>> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= Scalar(0)) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= Scalar(0)) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Direction (unit 2-vector) of the minimum-area enclosing rectangle's first
/// side, found by trying every hull edge. Returns (direction, area).
template <typename Scalar>
std::pair<Vec2<Scalar>, Scalar> min_area_rectangle(const std::vector<Vec2<Scalar>>& pts) {
    const auto hull = convex_hull_2d(pts);
    Vec2<Scalar> best_dir(Scalar(1), Scalar(0));
    Scalar best_area = std::numeric_limits<Scalar>::infinity();
    if (hull.size() < 2) return {best_dir, Scalar(0)};

    auto area_for = [&](const Vec2<Scalar>& dir) {
        const Vec2<Scalar> perp(-dir.y(), dir.x());
        Scalar lo_u = std::numeric_limits<Scalar>::infinity(), hi_u = -lo_u;
        Scalar lo_v = lo_u, hi_v = -lo_u;
        for (const auto& p : hull) {
            const Scalar u = p.dot(dir), v = p.dot(perp);
            lo_u = std::min(lo_u, u);
            hi_u = std::max(hi_u, u);
            lo_v = std::min(lo_v, v);
            hi_v = std::max(hi_v, v);
        }
        return (hi_u - lo_u) * (hi_v - lo_v);
    };

    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2<Scalar> edge = hull[(i + 1) % hull.size()] - hull[i];
        const Scalar len = edge.norm();
        if (len <= Scalar(0)) continue;
        const Vec2<Scalar> dir = edge / len;
        const Scalar area = area_for(dir);
        if (area < best_area) {
            best_area = area;
            best_dir = dir;
        }
    }
    return {best_dir, best_area};
}

/// Two unit vectors completing `w` to an orthonormal basis.
template <typename Scalar>
std::pair<Vec3<Scalar>, Vec3<Scalar>> complete_basis(const Vec3<Scalar>& w) {
    Index smallest;
    w.cwiseAbs().minCoeff(&smallest);
    Vec3<Scalar> helper = Vec3<Scalar>::Zero();
    helper(smallest) = Scalar(1);
    const Vec3<Scalar> u = w.cross(helper).normalized();
    return {u, w.cross(u)};
}

/// Rotates (u, v) about their normal so the points' footprint in that plane
/// has minimum rectangle area. Returns the rectangle area.
template <typename Derived, typename Scalar>
Scalar refine_plane(const Eigen::MatrixBase<Derived>& points, Vec3<Scalar>& u, Vec3<Scalar>& v) {
    std::vector<Vec2<Scalar>> projected;
    projected.reserve(static_cast<std::size_t>(points.rows()));
    for (Index i = 0; i < points.rows(); ++i) {
        const Vec3<Scalar> p = points.row(i).transpose();
        projected.emplace_back(p.dot(u), p.dot(v));
    }
    const auto [dir, area] = min_area_rectangle(projected);
    const Vec3<Scalar> new_u = dir.x() * u + dir.y() * v;
    const Vec3<Scalar> new_v = -dir.y() * u + dir.x() * v;
    u = new_u;
    v = new_v;
    return area;
}

template <typename Derived, typename Scalar>
Scalar extent_along(const Eigen::MatrixBase<Derived>& points, const Vec3<Scalar>& axis) {
    const auto proj = (points * axis).eval();
    return proj.maxCoeff() - proj.minCoeff();
}

}  // namespace detail

/// Oriented bounding box of a point set.
///
/// Axes come from the covariance eigenbasis. When the spectrum is degenerate
/// the eigenvectors are arbitrary inside the degenerate subspace, so the axes
/// there are fixed by a minimum-area (or minimum-volume) search instead.
template <typename Derived>
OrientedBoundingBoxT<typename Derived::Scalar> compute_obb(const Eigen::MatrixBase<Derived>& points) {
    using Scalar = typename Derived::Scalar;
    const Index n = points.rows();
    if (n < 1) throw ArgumentError("compute_obb: empty point set");

    const Eigen::Matrix<Scalar, 1, 3> mean = points.colwise().mean();
    const Points3<Scalar> centered = points.rowwise() - mean;
    const Mat3<Scalar> cov = (centered.transpose() * centered) / static_cast<Scalar>(n);

    Eigen::SelfAdjointEigenSolver<Mat3<Scalar>> solver(cov);
    // Eigen sorts ascending; flip to descending variance.
    Mat3<Scalar> axes;
    Vec3<Scalar> lambda;
    for (int i = 0; i < 3; ++i) {
        axes.col(i) = solver.eigenvectors().col(2 - i);
        lambda(i) = solver.eigenvalues()(2 - i);
    }

    const Scalar tol = Scalar(1e-7) * std::max(lambda(0), std::numeric_limits<Scalar>::min());
    const bool top_tied = lambda(0) - lambda(1) <= tol;
    const bool bottom_tied = lambda(1) - lambda(2) <= tol;

    if (top_tied && bottom_tied) {
        // Isotropic spread: search primary axes among chord directions of a
        // well-spread subset and keep the smallest box.
        const Index m = std::min<Index>(n, 32);
        const auto picks = farthest_point_sampling(centered, m, farthest_from_centroid(centered));
        Points3<Scalar> subset(m, 3);
        for (Index i = 0; i < m; ++i) subset.row(i) = centered.row(picks[static_cast<std::size_t>(i)]);

        std::vector<Vec3<Scalar>> candidates{axes.col(0), axes.col(1), axes.col(2)};
        for (Index i = 0; i < m; ++i)
            for (Index j = i + 1; j < m; ++j) {
                const Vec3<Scalar> d = (subset.row(j) - subset.row(i)).transpose();
                if (d.norm() > Scalar(0)) candidates.push_back(d.normalized());
            }

        Scalar best_volume = std::numeric_limits<Scalar>::infinity();
        for (const auto& w : candidates) {
            auto [u, v] = detail::complete_basis(w);
            const Scalar area = detail::refine_plane(subset, u, v);
            const Scalar volume = area * detail::extent_along(subset, w);
            if (volume < best_volume) {
                best_volume = volume;
                axes.col(0) = w;
                axes.col(1) = u;
                axes.col(2) = v;
            }
        }
    } else if (top_tied || bottom_tied) {
        const int fixed = top_tied ? 2 : 0;
        Vec3<Scalar> u = axes.col((fixed + 1) % 3);
        Vec3<Scalar> v = axes.col(fixed).cross(u);
        detail::refine_plane(centered, u, v);
        axes.col((fixed + 1) % 3) = u;
        axes.col((fixed + 2) % 3) = v;
    }

    const Points3<Scalar> local = centered * axes;
    const Vec3<Scalar> lo = local.colwise().minCoeff().transpose();
    const Vec3<Scalar> hi = local.colwise().maxCoeff().transpose();
    const Vec3<Scalar> half = Scalar(0.5) * (hi - lo);

    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return half(a) > half(b); });

    OrientedBoundingBoxT<Scalar> box;
    for (int i = 0; i < 3; ++i) {
        box.rotation.col(i) = axes.col(order[static_cast<std::size_t>(i)]).normalized();
        box.half_extents(i) = half(order[static_cast<std::size_t>(i)]);
    }
    box.rotation.col(2) = box.rotation.col(0).cross(box.rotation.col(1));
    box.center = mean.transpose() + axes * (Scalar(0.5) * (hi + lo));
    return box;
}

template <typename Scalar>
OrientedBoundingBoxT<Scalar> compute_obb(const PointCloudT<Scalar>& cloud) {
    return compute_obb(cloud.points);
}

template <typename Scalar>
OrientedBoundingBoxT<Scalar> compute_obb(const TriMeshT<Scalar>& mesh) {
    return compute_obb(mesh.vertices);
}

/// Uniformly scales the mesh about the origin so its longest OBB axis equals
/// `target_longest_axis`. Returns the scaled mesh and the factor applied.
template <typename Scalar>
std::pair<TriMeshT<Scalar>, Scalar> rescale_to_dims(const TriMeshT<Scalar>& mesh, Scalar target_longest_axis) {
    if (!(target_longest_axis > Scalar(0)) || !std::isfinite(target_longest_axis))
        throw ArgumentError("rescale_to_dims: target must be positive");
    if (mesh.num_vertices() == 0) throw DegenerateMeshError("rescale_to_dims: mesh has no vertices");
    const Scalar current = compute_obb(mesh.vertices).longest_axis();
    if (!(current > Scalar(0))) throw DegenerateMeshError("rescale_to_dims: mesh has zero extent");

    const Scalar factor = target_longest_axis / current;
    TriMeshT<Scalar> out = mesh;
    if (factor != Scalar(1)) out.vertices *= factor;
    return {std::move(out), factor};
}

/// Centroid of the vertex set projected onto the plane through the origin
/// perpendicular to `up`.
template <typename Scalar>
Vec3<Scalar> projected_centroid(const TriMeshT<Scalar>& mesh, const Vec3<Scalar>& up) {
    const Vec3<Scalar> u = up.normalized();
    const Vec3<Scalar> mean = mesh.vertices.colwise().mean().transpose();
    return mean - mean.dot(u) * u;
}

/// Radius of the footprint circle: largest horizontal distance from the
/// projected vertex centroid to any vertex.
template <typename Scalar>
Scalar collision_radius(const TriMeshT<Scalar>& mesh, const Vec3<Scalar>& up) {
    if (mesh.num_vertices() == 0) throw DegenerateMeshError("collision_radius: mesh has no vertices");
    if (!(up.norm() > Scalar(0))) throw ArgumentError("collision_radius: zero up axis");
    const Vec3<Scalar> u = up.normalized();
    const Vec3<Scalar> c = projected_centroid(mesh, u);

    Scalar r2 = Scalar(0);
    for (Index i = 0; i < mesh.num_vertices(); ++i) {
        const Vec3<Scalar> p = mesh.vertex(i);
        const Vec3<Scalar> horizontal = p - p.dot(u) * u - c;
        r2 = std::max(r2, horizontal.squaredNorm());
    }
    const Scalar r = std::sqrt(r2);
    if (!(r > Scalar(0))) throw DegenerateMeshError("collision_radius: mesh footprint is a single point");
    return r;
}

/// Signed enclosed volume via the divergence theorem; positive for a closed
/// mesh with outward (counter-clockwise) winding.
template <typename Scalar>
Scalar signed_volume(const TriMeshT<Scalar>& mesh) {
    Scalar v = Scalar(0);
    for (Index f = 0; f < mesh.num_faces(); ++f)
        v += mesh.corner(f, 0).dot(mesh.corner(f, 1).cross(mesh.corner(f, 2)));
    return v / Scalar(6);
}

/// Centroid of the enclosed solid; falls back to the vertex mean when the
/// enclosed volume is not positive.
template <typename Scalar>
Vec3<Scalar> volume_centroid(const TriMeshT<Scalar>& mesh) {
    Scalar total = Scalar(0);
    Vec3<Scalar> acc = Vec3<Scalar>::Zero();
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const Vec3<Scalar> a = mesh.corner(f, 0), b = mesh.corner(f, 1), c = mesh.corner(f, 2);
        const Scalar v = a.dot(b.cross(c)) / Scalar(6);
        total += v;
        acc += v * (a + b + c) / Scalar(4);
    }
    if (total > Scalar(0)) return acc / total;
    return mesh.vertices.colwise().mean().transpose();
}

}  // namespace manitwin
