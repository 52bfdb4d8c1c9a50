#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/geometry/types.hpp"

namespace manitwin {

inline constexpr Index kDefaultSurfaceSamples = 20000;
inline constexpr Index kDefaultFpsCandidates = 42;
// Faces below this area are kept in the mesh but never sampled.
inline constexpr double kDegenerateFaceArea = 1e-12;

template <typename Scalar>
Vec3<Scalar> face_normal_unnormalized(const TriMeshT<Scalar>& mesh, Index f) {
    const Vec3<Scalar> a = mesh.corner(f, 0);
    return (mesh.corner(f, 1) - a).cross(mesh.corner(f, 2) - a);
}

template <typename Scalar>
Scalar face_area(const TriMeshT<Scalar>& mesh, Index f) {
    return Scalar(0.5) * face_normal_unnormalized(mesh, f).norm();
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> face_areas(const TriMeshT<Scalar>& mesh) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> areas(mesh.num_faces());
    for (Index f = 0; f < mesh.num_faces(); ++f) areas(f) = face_area(mesh, f);
    return areas;
}

/// Area-weighted uniform sampling of the mesh surface. Each point carries the
/// unit normal of the face it was drawn from.
template <typename Scalar>
PointCloudT<Scalar> surface_sample(const TriMeshT<Scalar>& mesh, Index n, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("surface_sample: n must be >= 1");

    std::vector<Index> usable;
    std::vector<double> cumulative;
    double total = 0.0;
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const double area = static_cast<double>(face_area(mesh, f));
        if (!(area >= kDegenerateFaceArea)) continue;
        total += area;
        usable.push_back(f);
        cumulative.push_back(total);
    }
    if (usable.empty()) throw DegenerateMeshError("surface_sample: mesh has zero surface area");

    PointCloudT<Scalar> cloud;
    cloud.points.resize(n, 3);
    cloud.normals.resize(n, 3);

    Rng rng(seed);
    for (Index i = 0; i < n; ++i) {
        const double pick = uniform01(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const Index f = usable[static_cast<std::size_t>(it - cumulative.begin())];

        const Scalar r1 = std::sqrt(static_cast<Scalar>(uniform01(rng)));
        const Scalar r2 = static_cast<Scalar>(uniform01(rng));
        const Vec3<Scalar> a = mesh.corner(f, 0);
        const Vec3<Scalar> b = mesh.corner(f, 1);
        const Vec3<Scalar> c = mesh.corner(f, 2);
        const Vec3<Scalar> p = (Scalar(1) - r1) * a + r1 * (Scalar(1) - r2) * b + r1 * r2 * c;

        cloud.points.row(i) = p.transpose();
        cloud.normals.row(i) = face_normal_unnormalized(mesh, f).normalized().transpose();
    }
    return cloud;
}

/// Index of the point farthest from the centroid; ties go to the lowest index.
template <typename Derived>
Index farthest_from_centroid(const Eigen::MatrixBase<Derived>& points) {
    if (points.rows() == 0) throw ArgumentError("farthest_from_centroid: empty point set");
    using Scalar = typename Derived::Scalar;
    const Eigen::Matrix<Scalar, 1, 3> centroid = points.colwise().mean();
    Index best = 0;
    Scalar best_d = Scalar(-1);
    for (Index i = 0; i < points.rows(); ++i) {
        const Scalar d = (points.row(i) - centroid).squaredNorm();
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// Greedy farthest point sampling over the rows of `points`.
///
/// Starting from `seed_index`, each step selects the point whose distance to
/// the nearest already-selected point is largest. Ties go to the lowest index.
template <typename Derived>
std::vector<Index> farthest_point_sampling(const Eigen::MatrixBase<Derived>& points, Index k,
                                           Index seed_index) {
    using Scalar = typename Derived::Scalar;
    const Index n = points.rows();
    if (k < 1 || k > n) throw ArgumentError("farthest_point_sampling: k must be in [1, |cloud|]");
    if (seed_index < 0 || seed_index >= n)
        throw ArgumentError("farthest_point_sampling: seed index out of range");

    std::vector<Index> selected;
    selected.reserve(static_cast<std::size_t>(k));
    std::vector<Scalar> nearest(static_cast<std::size_t>(n), std::numeric_limits<Scalar>::infinity());
    std::vector<char> taken(static_cast<std::size_t>(n), 0);

    Index current = seed_index;
    for (Index step = 0; step < k; ++step) {
        selected.push_back(current);
        taken[static_cast<std::size_t>(current)] = 1;
        if (step + 1 == k) break;

        Index next = -1;
        Scalar next_d = Scalar(-1);
        for (Index i = 0; i < n; ++i) {
            if (taken[static_cast<std::size_t>(i)]) continue;
            Scalar& d = nearest[static_cast<std::size_t>(i)];
            d = std::min(d, (points.row(i) - points.row(current)).squaredNorm());
            if (d > next_d) {
                next_d = d;
                next = i;
            }
        }
        current = next;
    }
    return selected;
}

template <typename Scalar>
std::vector<Index> farthest_point_sampling(const PointCloudT<Scalar>& cloud, Index k, Index seed_index) {
    return farthest_point_sampling(cloud.points, k, seed_index);
}

/// Rows of `cloud` picked by `indices`, normals included when present.
template <typename Scalar>
PointCloudT<Scalar> select_points(const PointCloudT<Scalar>& cloud, const std::vector<Index>& indices) {
    PointCloudT<Scalar> out;
    out.points.resize(static_cast<Index>(indices.size()), 3);
    if (cloud.has_normals()) out.normals.resize(static_cast<Index>(indices.size()), 3);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.points.row(static_cast<Index>(i)) = cloud.points.row(indices[i]);
        if (cloud.has_normals()) out.normals.row(static_cast<Index>(i)) = cloud.normals.row(indices[i]);
    }
    return out;
}

}  // namespace manitwin
