#include "manitwin/asset.hpp"

#include <array>
#include <cmath>
#include <set>
#include <utility>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/obb.hpp"

namespace manitwin {
namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view name, const std::array<std::pair<E, std::string_view>, N>& table,
             const char* field) {
    for (const auto& [value, text] : table)
        if (text == name) return value;
    throw ValidationError(field, "unknown value '" + std::string(name) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [v, text] : table)
        if (v == value) return text;
    return "?";
}

constexpr std::array<std::pair<GraspType, std::string_view>, 5> kGraspTypes{{
    {GraspType::ParallelJaw, "parallel-jaw"},
    {GraspType::Pinch, "pinch"},
    {GraspType::Power, "power"},
    {GraspType::ThreeFinger, "three-finger"},
    {GraspType::Enveloping, "enveloping"},
}};

constexpr std::array<std::pair<FailureReason, std::string_view>, 5> kFailureReasons{{
    {FailureReason::None, "none"},
    {FailureReason::Penetration, "penetration"},
    {FailureReason::NoContact, "no_contact"},
    {FailureReason::NotForceClosure, "not_force_closure"},
    {FailureReason::SlideFailure, "slide_failure"},
}};

constexpr std::array<std::pair<StageStatus, std::string_view>, 3> kStageStatuses{{
    {StageStatus::Ok, "ok"},
    {StageStatus::Filtered, "filtered"},
    {StageStatus::Error, "error"},
}};

void require(bool ok, const std::string& field, const char* what) {
    if (!ok) throw ValidationError(field, what);
}

bool finite(const Vector3d& v) { return v.allFinite(); }

void require_unit_quaternion(const Quaterniond& q, const std::string& field) {
    require(q.coeffs().allFinite(), field, "non-finite quaternion");
    require(std::abs(q.norm() - 1.0) <= kQuaternionTolerance, field, "quaternion is not unit length");
}

}  // namespace

std::string_view to_string(GraspType t) { return enum_name(t, kGraspTypes); }
GraspType parse_grasp_type(std::string_view name) { return parse_enum(name, kGraspTypes, "grasp_type"); }
std::string_view to_string(FailureReason r) { return enum_name(r, kFailureReasons); }
FailureReason parse_failure_reason(std::string_view name) {
    return parse_enum(name, kFailureReasons, "failure_reason");
}
std::string_view to_string(StageStatus s) { return enum_name(s, kStageStatuses); }
StageStatus parse_stage_status(std::string_view name) { return parse_enum(name, kStageStatuses, "status"); }

PipelineStats& PipelineStats::operator+=(const PipelineStats& o) {
    ingested += o.ingested;
    gated += o.gated;
    annotated += o.annotated;
    errors += o.errors;
    proposals += o.proposals;
    after_proximity += o.after_proximity;
    candidates += o.candidates;
    verified += o.verified;
    return *this;
}

void validate(const PhysicalProperties& p, const std::string& path) {
    require(finite(p.obb_dims) && (p.obb_dims.array() > 0.0).all(), path + ".obb_dims", "dimensions must be positive");
    require(std::isfinite(p.mass) && p.mass > 0.0, path + ".mass", "mass must be positive and finite");
    require(std::isfinite(p.friction) && p.friction >= 0.0 && p.friction <= kMaxFriction, path + ".friction",
            "friction must lie in [0, 2]");
}

void validate(const SemanticCaption& c, const std::string& path) {
    const std::array<std::pair<const std::string*, const char*>, 6> fields{{
        {&c.category, "category"},
        {&c.color, "color"},
        {&c.material, "material"},
        {&c.size, "size"},
        {&c.shape, "shape"},
        {&c.function, "function"},
    }};
    for (const auto& [value, name] : fields) require(!value->empty(), path + "." + name, "must be non-empty");
}

void validate(const FunctionalPoint& p, const std::string& path) {
    require(finite(p.position), path + ".position", "non-finite position");
    require(std::isfinite(p.confidence) && p.confidence >= 0.0 && p.confidence <= 1.0, path + ".confidence",
            "confidence must lie in [0, 1]");
}

void validate(const VerificationOutcome& v, const std::string& path, double displacement_threshold) {
    require(v.passed == (v.failure_reason == FailureReason::None), path + ".failure_reason",
            "passed must hold exactly when failure_reason is none");
    require(v.stable_frames >= 0, path + ".stable_frames", "must be non-negative");
    require(std::isfinite(v.max_displacement) && v.max_displacement >= 0.0, path + ".max_displacement",
            "must be a non-negative length");
    if (v.passed) {
        require(v.stable_frames >= 3, path + ".stable_frames", "a passed grasp needs at least 3 stable frames");
        require(v.max_displacement < displacement_threshold, path + ".max_displacement",
                "a passed grasp must stay under the displacement threshold");
    }
}

void validate(const GraspPose& g, const std::string& path) {
    require(finite(g.position), path + ".position", "non-finite position");
    require_unit_quaternion(g.orientation, path + ".orientation");
    require(std::isfinite(g.confidence) && g.confidence >= 0.0 && g.confidence <= 1.0, path + ".confidence",
            "confidence must lie in [0, 1]");
    if (g.verification) validate(*g.verification, path + ".verification");
}

void validate(const GripperModel& g, const std::string& path) {
    require(g.max_opening > 0.0, path + ".max_opening", "must be positive");
    require(g.finger_length > 0.0, path + ".finger_length", "must be positive");
    require(g.finger_thickness > 0.0, path + ".finger_thickness", "must be positive");
    require(g.palm_depth > 0.0, path + ".palm_depth", "must be positive");
    require(g.squeeze_force > 0.0, path + ".squeeze_force", "must be positive");
    require(g.max_opening > 2.0 * g.finger_thickness, path + ".max_opening",
            "must exceed twice the finger thickness");
}

void validate(const PlacementAnnotation& p, const std::string& path) {
    require(finite(p.placement_position), path + ".placement_position", "non-finite position");
    require_unit_quaternion(p.placement_orientation, path + ".placement_orientation");
    require(std::isfinite(p.collision_radius) && p.collision_radius > 0.0, path + ".collision_radius",
            "must be positive");
}

void validate(const AssetRecord& r) {
    require(!r.asset_id.empty(), "asset_id", "must be non-empty");
    require(!r.mesh_ref.empty(), "mesh_ref", "must be non-empty");
    validate(r.physical);
    validate(r.caption);

    std::set<int> functional_ids, grasp_ids;
    for (std::size_t i = 0; i < r.functional_points.size(); ++i) {
        const std::string path = "functional_points[" + std::to_string(i) + "]";
        validate(r.functional_points[i], path);
        require(functional_ids.insert(r.functional_points[i].id).second, path + ".id", "duplicate id");
    }
    for (std::size_t i = 0; i < r.grasp_points.size(); ++i) {
        const std::string path = "grasp_points[" + std::to_string(i) + "]";
        require(finite(r.grasp_points[i].position), path + ".position", "non-finite position");
        require(grasp_ids.insert(r.grasp_points[i].id).second, path + ".id", "duplicate id");
    }
    for (std::size_t i = 0; i < r.verified_grasps.size(); ++i) {
        const std::string path = "verified_grasps[" + std::to_string(i) + "]";
        const GraspPose& g = r.verified_grasps[i];
        validate(g, path);
        require(g.verification.has_value() && g.verification->passed, path + ".verification",
                "verified grasps must carry a passed verification outcome");
        if (g.associated_functional_point)
            require(functional_ids.count(*g.associated_functional_point) == 1,
                    path + ".associated_functional_point", "references an unknown functional point");
        if (g.associated_grasp_point)
            require(grasp_ids.count(*g.associated_grasp_point) == 1, path + ".associated_grasp_point",
                    "references an unknown grasp point");
    }
    validate(r.placement);

    const GraspCounts& c = r.provenance.counts;
    require(c.verified == static_cast<std::int64_t>(r.verified_grasps.size()), "provenance.counts.verified",
            "must equal the number of verified grasps");
    require(c.verified <= c.candidates, "provenance.counts.candidates",
            "verified grasps need at least as many recorded candidates");
    require(c.candidates <= c.after_proximity && c.after_proximity <= c.proposals, "provenance.counts",
            "funnel counts must be non-increasing");
}

void validate(const PipelineStats& s) {
    require(s.verified <= s.candidates, "verified", "exceeds candidates");
    require(s.gated <= s.ingested, "gated", "exceeds ingested");
    require(s.annotated <= s.gated, "annotated", "exceeds gated");
}

void validate_against_mesh(const AssetRecord& r, const TriMesh& mesh) {
    const OrientedBoundingBox box = compute_obb(mesh.vertices);
    for (std::size_t i = 0; i < r.functional_points.size(); ++i) {
        const Vector3d local = box.rotation.transpose() * (r.functional_points[i].position - box.center);
        const Vector3d limit = 1.05 * box.half_extents + Vector3d::Constant(1e-9);
        require((local.cwiseAbs().array() <= limit.array()).all(),
                "functional_points[" + std::to_string(i) + "].position", "lies outside the inflated OBB");
    }
    const double footprint = collision_radius(mesh, kWorldUp);
    require(r.placement.collision_radius >= footprint - 1e-12, "placement.collision_radius",
            "smaller than the projected mesh footprint");
}

Json to_json(const PipelineStats& s) {
    const auto rate = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
    Json j;
    j["counts"] = {{"ingested", s.ingested},   {"gated", s.gated},
                   {"annotated", s.annotated}, {"errors", s.errors},
                   {"proposals", s.proposals}, {"after_proximity", s.after_proximity},
                   {"candidates", s.candidates}, {"verified", s.verified}};
    j["rates"] = {{"gate_pass_rate", rate(s.gate_pass_rate())},
                  {"verification_rate", rate(s.verification_rate())},
                  {"avg_proposals_per_object", rate(s.avg_proposals_per_object())},
                  {"avg_after_proximity_per_object", rate(s.avg_after_proximity_per_object())},
                  {"avg_candidates_per_object", rate(s.avg_candidates_per_object())},
                  {"avg_verified_per_object", rate(s.avg_verified_per_object())}};
    return j;
}

}  // namespace manitwin
