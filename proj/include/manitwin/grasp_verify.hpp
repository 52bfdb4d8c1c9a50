#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "manitwin/asset.hpp"
#include "manitwin/geometry/types.hpp"

namespace manitwin {

enum class Finger { Left, Right };

struct Contact {
    Vector3d position = Vector3d::Zero();
    Vector3d normal = Vector3d::UnitZ();  // unit, pointing out of the object
    Finger finger = Finger::Left;
};

using ContactSet = std::vector<Contact>;

inline constexpr double kGravity = 9.81;             // m/s^2
inline constexpr double kTestAcceleration = 5.0;     // m/s^2
inline constexpr double kDisplacementThreshold = 0.01;  // m
inline constexpr double kSlideFailDisplacement = 0.02;  // m, sentinel
inline constexpr int kStableFrames = 3;

/// Finger and palm boxes of the gripper at `opening`, in world coordinates.
/// Order: left finger, right finger, palm.
std::array<OrientedBoundingBox, 3> gripper_boxes(const GripperModel& gripper, const GraspPose& pose, double opening);

/// Separating-axis test; touching counts as intersecting.
bool triangle_box_intersect(const Vector3d& a, const Vector3d& b, const Vector3d& c, const OrientedBoundingBox& box);

/// Parity of crossings along a fixed ray. Meaningful for closed meshes only.
bool point_inside_mesh(const TriMesh& mesh, const Vector3d& p);

/// Ray/triangle intersection distance along `dir`, or nothing.
std::optional<double> ray_triangle(const Vector3d& origin, const Vector3d& dir, const Vector3d& a, const Vector3d& b,
                                   const Vector3d& c);

/// True iff a finger or palm box, gripper fully open, touches a mesh triangle
/// or lies inside the mesh.
bool check_penetration(const GripperModel& gripper, const GraspPose& pose, const TriMesh& mesh);

/// Sweeps each finger pad inward along the jaw axis across the full opening
/// and returns the first hit per finger (left first). Empty if neither finger
/// touches anything.
ContactSet close_fingers(const GripperModel& gripper, const GraspPose& pose, const TriMesh& mesh);

/// Two-contact antipodal test: the segment between the contacts must lie in
/// both friction cones. Anything but one contact per finger fails, as does
/// mu <= 0.
bool force_closure(const ContactSet& contacts, double mu);

struct SlideParams {
    double gravity = kGravity;
    double test_acceleration = kTestAcceleration;
    double displacement_threshold = kDisplacementThreshold;
};

struct SlideResult {
    bool passed = false;
    double max_displacement = 0.0;
};

/// The four in-plane directions perpendicular to the jaw axis.
std::array<Vector3d, 4> slide_directions(const GraspPose& pose);

SlideResult slide_resistance(const ContactSet& contacts, double mu, double squeeze_force, double mass,
                             std::span<const Vector3d> directions, const SlideParams& params = {});

struct VerifyParams {
    std::optional<double> mu;             // overrides the asset friction
    std::optional<double> squeeze_force;  // overrides the gripper value
    SlideParams slide;
};

/// position -> close -> force closure -> slide resistance; the first failing
/// step names the failure reason.
VerificationOutcome verify_grasp(const TriMesh& mesh, const PhysicalProperties& physical, const GraspPose& grasp,
                                 const GripperModel& gripper, const VerifyParams& params = {});

}  // namespace manitwin
