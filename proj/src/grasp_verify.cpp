#include "manitwin/grasp_verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "manitwin/errors.hpp"

namespace manitwin {

namespace {

OrientedBoundingBox make_box(const Matrix3d& r, const Vector3d& origin, const Vector3d& local_center,
                             const Vector3d& half) {
    OrientedBoundingBox box;
    box.center = origin + r * local_center;
    box.rotation = r;
    box.half_extents = half;  // fixed finger/palm layout, not sorted
    return box;
}

struct Aabb {
    Vector3d lo, hi;
};

Aabb box_aabb(const OrientedBoundingBox& box) {
    const Vector3d reach = box.rotation.cwiseAbs() * box.half_extents;
    return {box.center - reach, box.center + reach};
}

bool aabb_overlaps_triangle(const Aabb& bb, const Vector3d& a, const Vector3d& b, const Vector3d& c) {
    const Vector3d lo = a.cwiseMin(b).cwiseMin(c);
    const Vector3d hi = a.cwiseMax(b).cwiseMax(c);
    return (lo.array() <= bb.hi.array()).all() && (hi.array() >= bb.lo.array()).all();
}

// Projection interval test of three box-local vertices against axis `axis`.
bool separated(const Vector3d& axis, const Vector3d& v0, const Vector3d& v1, const Vector3d& v2,
               const Vector3d& half) {
    if (axis.squaredNorm() < 1e-24) return false;
    const double p0 = axis.dot(v0);
    const double p1 = axis.dot(v1);
    const double p2 = axis.dot(v2);
    const double r = half.dot(axis.cwiseAbs());
    return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
}

// Contacts closer than this cannot squeeze anything between them.
constexpr double kMinContactSeparation = 1e-9;

const Vector3d kParityRay = Vector3d(0.3141592653, 0.5772156649, 0.7541122371).normalized();

}  // namespace

std::array<OrientedBoundingBox, 3> gripper_boxes(const GripperModel& g, const GraspPose& pose, double opening) {
    const Matrix3d r = pose.orientation.normalized().toRotationMatrix();
    const double t = g.finger_thickness;
    const double l = g.finger_length;
    const Vector3d finger_half(t / 2.0, t, l / 2.0);
    return {
        make_box(r, pose.position, Vector3d(-(opening / 2.0 + t / 2.0), 0.0, 0.0), finger_half),
        make_box(r, pose.position, Vector3d(opening / 2.0 + t / 2.0, 0.0, 0.0), finger_half),
        make_box(r, pose.position, Vector3d(0.0, 0.0, -l / 2.0 - g.palm_depth / 2.0),
                 Vector3d(opening / 2.0 + t, t, g.palm_depth / 2.0)),
    };
}

bool triangle_box_intersect(const Vector3d& a, const Vector3d& b, const Vector3d& c, const OrientedBoundingBox& box) {
    const Matrix3d rt = box.rotation.transpose();
    const Vector3d v0 = rt * (a - box.center);
    const Vector3d v1 = rt * (b - box.center);
    const Vector3d v2 = rt * (c - box.center);
    const Vector3d& h = box.half_extents;

    const Vector3d e0 = v1 - v0;
    const Vector3d e1 = v2 - v1;
    const Vector3d e2 = v0 - v2;
    for (int i = 0; i < 3; ++i) {
        const Vector3d u = Vector3d::Unit(i);
        for (const Vector3d* e : {&e0, &e1, &e2})
            if (separated(u.cross(*e), v0, v1, v2, h)) return false;
    }
    for (int i = 0; i < 3; ++i)
        if (separated(Vector3d::Unit(i), v0, v1, v2, h)) return false;
    return !separated(e0.cross(e1), v0, v1, v2, h);
}

std::optional<double> ray_triangle(const Vector3d& origin, const Vector3d& dir, const Vector3d& a, const Vector3d& b,
                                   const Vector3d& c) {
    const Vector3d e1 = b - a;
    const Vector3d e2 = c - a;
    const Vector3d p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-18) return std::nullopt;
    const double inv = 1.0 / det;
    const Vector3d s = origin - a;
    const double u = s.dot(p) * inv;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vector3d q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    return e2.dot(q) * inv;
}

bool point_inside_mesh(const TriMesh& mesh, const Vector3d& p) {
    int crossings = 0;
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const auto t = ray_triangle(p, kParityRay, mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        if (t && *t > 0.0) ++crossings;
    }
    return crossings % 2 == 1;
}

bool check_penetration(const GripperModel& gripper, const GraspPose& pose, const TriMesh& mesh) {
    for (const OrientedBoundingBox& box : gripper_boxes(gripper, pose, gripper.max_opening)) {
        const Aabb bb = box_aabb(box);
        for (Index f = 0; f < mesh.num_faces(); ++f) {
            const Vector3d a = mesh.corner(f, 0);
            const Vector3d b = mesh.corner(f, 1);
            const Vector3d c = mesh.corner(f, 2);
            if (aabb_overlaps_triangle(bb, a, b, c) && triangle_box_intersect(a, b, c, box)) return true;
        }
        if (point_inside_mesh(mesh, box.center)) return true;
    }
    return false;
}

namespace {

// Pad sample offsets (y, z) in units of the pad half extents, center first.
std::vector<std::pair<double, double>> pad_grid() {
    std::vector<std::pair<int, int>> cells;
    for (int iz = -2; iz <= 2; ++iz)
        for (int iy = -1; iy <= 1; ++iy) cells.emplace_back(iy, iz);
    std::stable_sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
        return std::abs(a.first) + std::abs(a.second) < std::abs(b.first) + std::abs(b.second);
    });
    std::vector<std::pair<double, double>> out;
    for (const auto& [iy, iz] : cells) out.emplace_back(iy, iz / 2.0);
    return out;
}

std::optional<Contact> sweep_finger(const GripperModel& g, const GraspPose& pose, const TriMesh& mesh,
                                    Finger finger) {
    static const auto grid = pad_grid();
    const Matrix3d r = pose.orientation.normalized().toRotationMatrix();
    const double side = finger == Finger::Left ? -1.0 : 1.0;
    const Vector3d dir = -side * r.col(0);
    const double travel = g.max_opening;

    std::optional<Contact> best;
    double best_t = std::numeric_limits<double>::infinity();
    for (const auto& [sy, sz] : grid) {
        const Vector3d local(side * g.max_opening / 2.0, sy * g.finger_thickness, sz * g.finger_length / 2.0);
        const Vector3d origin = pose.position + r * local;
        for (Index f = 0; f < mesh.num_faces(); ++f) {
            const Vector3d a = mesh.corner(f, 0);
            const Vector3d b = mesh.corner(f, 1);
            const Vector3d c = mesh.corner(f, 2);
            const auto t = ray_triangle(origin, dir, a, b, c);
            if (!t || *t < 0.0 || *t > travel) continue;
            if (*t < best_t - 1e-9) {
                Vector3d n = (b - a).cross(c - a).normalized();
                if (n.dot(dir) > 0.0) n = -n;
                best_t = *t;
                best = Contact{origin + *t * dir, n, finger};
            }
        }
    }
    return best;
}

}  // namespace

ContactSet close_fingers(const GripperModel& gripper, const GraspPose& pose, const TriMesh& mesh) {
    ContactSet contacts;
    for (Finger f : {Finger::Left, Finger::Right})
        if (auto c = sweep_finger(gripper, pose, mesh, f)) contacts.push_back(*c);
    return contacts;
}

bool force_closure(const ContactSet& contacts, double mu) {
    if (contacts.size() != 2 || contacts[0].finger == contacts[1].finger) return false;
    if (!(mu > 0.0)) return false;
    const double half_angle = std::atan(mu);
    for (int i = 0; i < 2; ++i) {
        const Contact& ci = contacts[static_cast<std::size_t>(i)];
        const Contact& cj = contacts[static_cast<std::size_t>(1 - i)];
        const Vector3d line = cj.position - ci.position;
        if (line.norm() < kMinContactSeparation) return false;
        const double angle = std::atan2(ci.normal.cross(line).norm(), ci.normal.dot(line));
        // The segment may lie along either the inward or outward cone axis.
        if (std::min(angle, std::numbers::pi - angle) > half_angle) return false;
    }
    return true;
}

std::array<Vector3d, 4> slide_directions(const GraspPose& pose) {
    const Matrix3d r = pose.orientation.normalized().toRotationMatrix();
    return {r.col(1), Vector3d(-r.col(1)), r.col(2), Vector3d(-r.col(2))};
}

SlideResult slide_resistance(const ContactSet& contacts, double mu, double squeeze_force, double mass,
                             std::span<const Vector3d> directions, const SlideParams& params) {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ArgumentError("slide_resistance: mass must be positive");
    if (contacts.size() != 2) return {false, kSlideFailDisplacement};
    if (directions.empty()) throw ArgumentError("slide_resistance: no test directions");
    // Gravity and the test load are taken as co-linear for every direction,
    // so the hold condition is the same worst case for all four.
    const double friction_capacity = 2.0 * mu * squeeze_force;
    const double load = mass * (params.gravity + params.test_acceleration);
    const double max_displacement = friction_capacity >= load ? 0.0 : kSlideFailDisplacement;
    return {max_displacement < params.displacement_threshold, max_displacement};
}

VerificationOutcome verify_grasp(const TriMesh& mesh, const PhysicalProperties& physical, const GraspPose& grasp,
                                 const GripperModel& gripper, const VerifyParams& params) {
    if (std::abs(grasp.orientation.norm() - 1.0) > kQuaternionTolerance)
        throw ArgumentError("verify_grasp: grasp orientation is not a unit quaternion");
    const double mu = params.mu.value_or(physical.friction);
    const double squeeze = params.squeeze_force.value_or(gripper.squeeze_force);
    if (!(physical.mass > 0.0)) throw ArgumentError("verify_grasp: mass must be positive");

    VerificationOutcome out;
    auto fail = [&](FailureReason reason, double displacement = 0.0) {
        out.passed = false;
        out.failure_reason = reason;
        out.max_displacement = displacement;
        return out;
    };

    if (check_penetration(gripper, grasp, mesh)) return fail(FailureReason::Penetration);
    const ContactSet contacts = close_fingers(gripper, grasp, mesh);
    if (contacts.empty()) return fail(FailureReason::NoContact);
    if (!force_closure(contacts, mu)) return fail(FailureReason::NotForceClosure);
    const auto dirs = slide_directions(grasp);
    const SlideResult slide = slide_resistance(contacts, mu, squeeze, physical.mass, dirs, params.slide);
    if (!slide.passed) return fail(FailureReason::SlideFailure, slide.max_displacement);

    out.passed = true;
    out.failure_reason = FailureReason::None;
    out.stable_frames = kStableFrames;
    out.max_displacement = slide.max_displacement;
    return out;
}

}  // namespace manitwin
