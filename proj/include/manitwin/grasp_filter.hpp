#pragma once

#include <span>
#include <vector>

#include "manitwin/asset.hpp"

namespace manitwin {

inline constexpr double kDefaultProximityThreshold = 0.03;  // m
inline constexpr Index kDefaultGraspK = 100;
inline constexpr double kDefaultRotationWeight = 0.05;  // m per rad

/// Keeps grasps whose position lies within `threshold` (inclusive) of at least
/// one selected point. Order is preserved.
std::vector<GraspPose> proximity_filter(std::span<const GraspPose> grasps, std::span<const Vector3d> points,
                                        double threshold);

/// Geodesic angle between two orientations, in [0, pi].
double quaternion_angle(const Quaterniond& a, const Quaterniond& b);

/// ||p_a - p_b|| + rotation_weight * angle(q_a, q_b)
double pose_distance(const GraspPose& a, const GraspPose& b, double rotation_weight);

/// Greedy farthest point sampling in pose space, seeded with the most
/// confident grasp. Returns indices into `grasps` in selection order.
std::vector<Index> fps_7dof_indices(std::span<const GraspPose> grasps, Index k, double rotation_weight);
std::vector<GraspPose> fps_7dof(std::span<const GraspPose> grasps, Index k,
                                double rotation_weight = kDefaultRotationWeight);

/// Tags each grasp with the id of its nearest functional point and nearest
/// grasp point (ties to the lower id). Throws ArgumentError if both lists are
/// empty.
std::vector<GraspPose> associate_semantics(std::span<const GraspPose> grasps,
                                           std::span<const FunctionalPoint> functional_points,
                                           std::span<const GraspPoint> grasp_points);

}  // namespace manitwin
