#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace manitwin {

using Index = Eigen::Index;

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// N x 3 block of positions, one point per row.
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Triangles = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Vector3d = Vec3<double>;
using Matrix3d = Mat3<double>;
using Quaterniond = Eigen::Quaterniond;

// Asset frame convention: z is up, lengths in meters.
inline const Vector3d kWorldUp{0.0, 0.0, 1.0};

template <typename Scalar>
struct TriMeshT {
    Points3<Scalar> vertices;
    Triangles faces;

    Index num_vertices() const { return vertices.rows(); }
    Index num_faces() const { return faces.rows(); }
    bool empty() const { return faces.rows() == 0; }

    Vec3<Scalar> vertex(Index i) const { return vertices.row(i).transpose(); }
    Vec3<Scalar> corner(Index f, int c) const { return vertices.row(faces(f, c)).transpose(); }
};

template <typename Scalar>
struct PointCloudT {
    Points3<Scalar> points;
    // Either empty or one unit normal per point.
    Points3<Scalar> normals;

    Index size() const { return points.rows(); }
    bool has_normals() const { return normals.rows() == points.rows() && points.rows() > 0; }
    Vec3<Scalar> point(Index i) const { return points.row(i).transpose(); }
    Vec3<Scalar> normal(Index i) const { return normals.row(i).transpose(); }
};

template <typename Scalar>
struct OrientedBoundingBoxT {
    Vec3<Scalar> center = Vec3<Scalar>::Zero();
    // Columns are the box axes, matching half_extents order.
    Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
    // Sorted descending.
    Vec3<Scalar> half_extents = Vec3<Scalar>::Zero();

    Vec3<Scalar> dims() const { return Scalar(2) * half_extents; }
    Scalar longest_axis() const { return Scalar(2) * half_extents(0); }

    bool contains(const Vec3<Scalar>& p, Scalar tol = Scalar(0)) const {
        const Vec3<Scalar> local = rotation.transpose() * (p - center);
        return (local.cwiseAbs() - half_extents).maxCoeff() <= tol;
    }
};

using TriMesh = TriMeshT<double>;
using PointCloud = PointCloudT<double>;
using OrientedBoundingBox = OrientedBoundingBoxT<double>;

}  // namespace manitwin
