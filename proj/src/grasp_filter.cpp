#include "manitwin/grasp_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "manitwin/errors.hpp"

namespace manitwin {

std::vector<GraspPose> proximity_filter(std::span<const GraspPose> grasps, std::span<const Vector3d> points,
                                        double threshold) {
    if (!(threshold > 0.0)) throw ArgumentError("proximity_filter: threshold must be positive");
    std::vector<GraspPose> kept;
    for (const GraspPose& g : grasps) {
        const bool near = std::any_of(points.begin(), points.end(),
                                      [&](const Vector3d& p) { return (g.position - p).norm() <= threshold; });
        if (near) kept.push_back(g);
    }
    return kept;
}

double quaternion_angle(const Quaterniond& a, const Quaterniond& b) {
    // atan2 form stays accurate for nearly identical rotations, where acos
    // of the dot product loses half the digits.
    const Quaterniond rel = a.normalized().conjugate() * b.normalized();
    return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double pose_distance(const GraspPose& a, const GraspPose& b, double rotation_weight) {
    return (a.position - b.position).norm() + rotation_weight * quaternion_angle(a.orientation, b.orientation);
}

std::vector<Index> fps_7dof_indices(std::span<const GraspPose> grasps, Index k, double rotation_weight) {
    if (k < 1) throw ArgumentError("fps_7dof: k must be >= 1");
    if (!(rotation_weight >= 0.0)) throw ArgumentError("fps_7dof: rotation weight must be non-negative");
    const Index n = static_cast<Index>(grasps.size());
    if (n == 0) return {};

    Index seed = 0;
    for (Index i = 1; i < n; ++i)
        if (grasps[static_cast<std::size_t>(i)].confidence > grasps[static_cast<std::size_t>(seed)].confidence) seed = i;

    const Index count = std::min(k, n);
    std::vector<Index> selected{seed};
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    taken[static_cast<std::size_t>(seed)] = 1;

    Index current = seed;
    while (static_cast<Index>(selected.size()) < count) {
        Index next = -1;
        double next_d = -1.0;
        for (Index i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            if (taken[ui]) continue;
            nearest[ui] = std::min(nearest[ui], pose_distance(grasps[ui], grasps[static_cast<std::size_t>(current)],
                                                              rotation_weight));
            if (nearest[ui] > next_d) {
                next_d = nearest[ui];
                next = i;
            }
        }
        taken[static_cast<std::size_t>(next)] = 1;
        selected.push_back(next);
        current = next;
    }
    return selected;
}

std::vector<GraspPose> fps_7dof(std::span<const GraspPose> grasps, Index k, double rotation_weight) {
    std::vector<GraspPose> out;
    for (Index i : fps_7dof_indices(grasps, k, rotation_weight)) out.push_back(grasps[static_cast<std::size_t>(i)]);
    return out;
}

namespace {

template <typename Point>
std::optional<int> nearest_id(const Vector3d& p, std::span<const Point> points) {
    std::optional<int> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const Point& q : points) {
        const double d = (p - q.position).norm();
        if (d < best_d || (d == best_d && best && q.id < *best)) {
            best_d = d;
            best = q.id;
        }
    }
    return best;
}

}  // namespace

std::vector<GraspPose> associate_semantics(std::span<const GraspPose> grasps,
                                           std::span<const FunctionalPoint> functional_points,
                                           std::span<const GraspPoint> grasp_points) {
    if (functional_points.empty() && grasp_points.empty())
        throw ArgumentError("associate_semantics: no functional or grasp points to associate with");
    std::vector<GraspPose> out(grasps.begin(), grasps.end());
    for (GraspPose& g : out) {
        g.associated_functional_point = nearest_id(g.position, functional_points);
        g.associated_grasp_point = nearest_id(g.position, grasp_points);
    }
    return out;
}

}  // namespace manitwin
