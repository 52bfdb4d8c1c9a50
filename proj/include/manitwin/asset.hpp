#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "manitwin/geometry/types.hpp"

namespace manitwin {

using Json = nlohmann::ordered_json;

enum class GraspType { ParallelJaw, Pinch, Power, ThreeFinger, Enveloping };

std::string_view to_string(GraspType t);
/// Throws ValidationError("grasp_type", ...) for names outside the enumeration.
GraspType parse_grasp_type(std::string_view name);

enum class FailureReason { None, Penetration, NoContact, NotForceClosure, SlideFailure };

std::string_view to_string(FailureReason r);
FailureReason parse_failure_reason(std::string_view name);

enum class StageStatus { Ok, Filtered, Error };

std::string_view to_string(StageStatus s);
StageStatus parse_stage_status(std::string_view name);

struct PhysicalProperties {
    Vector3d obb_dims = Vector3d::Zero();  // m
    double mass = 0.0;                     // kg
    double friction = 0.0;                 // dimensionless, [0, 2]

    bool operator==(const PhysicalProperties&) const = default;
};

struct SemanticCaption {
    std::string category;
    std::string color;
    std::string material;
    std::string size;
    std::string shape;
    std::string function;

    bool operator==(const SemanticCaption&) const = default;
};

struct FunctionalPoint {
    int id = 0;
    Vector3d position = Vector3d::Zero();
    std::string function_label;
    double confidence = 0.0;
    std::string rationale;

    bool operator==(const FunctionalPoint&) const = default;
};

struct GraspPoint {
    int id = 0;
    Vector3d position = Vector3d::Zero();
    GraspType grasp_type = GraspType::ParallelJaw;
    std::string use_scenario;

    bool operator==(const GraspPoint&) const = default;
};

struct VerificationOutcome {
    bool passed = false;
    FailureReason failure_reason = FailureReason::None;
    int stable_frames = 0;
    double max_displacement = 0.0;  // m

    bool operator==(const VerificationOutcome&) const = default;
};

struct GraspPose {
    Vector3d position = Vector3d::Zero();
    Quaterniond orientation = Quaterniond::Identity();
    double confidence = 0.0;
    std::optional<int> associated_functional_point;
    std::optional<int> associated_grasp_point;
    std::optional<VerificationOutcome> verification;

    bool operator==(const GraspPose& o) const {
        return position == o.position && orientation.coeffs() == o.orientation.coeffs() &&
               confidence == o.confidence && associated_functional_point == o.associated_functional_point &&
               associated_grasp_point == o.associated_grasp_point && verification == o.verification;
    }
};

/// Parallel-jaw gripper. Local frame: x is the jaw (closing) axis, z the
/// approach direction, origin at the grasp center between the finger pads.
struct GripperModel {
    double max_opening = 0.08;       // m, inner distance between pads when open
    double finger_length = 0.045;    // m, along z
    double finger_thickness = 0.01;  // m, along x; pads are twice as wide along y
    double palm_depth = 0.02;        // m
    double squeeze_force = 20.0;     // N per finger

    bool operator==(const GripperModel&) const = default;
};

struct PlacementAnnotation {
    Vector3d placement_position = Vector3d::Zero();
    Quaterniond placement_orientation = Quaterniond::Identity();
    double collision_radius = 0.0;

    bool operator==(const PlacementAnnotation& o) const {
        return placement_position == o.placement_position &&
               placement_orientation.coeffs() == o.placement_orientation.coeffs() &&
               collision_radius == o.collision_radius;
    }
};

struct StageRecord {
    std::string stage;
    StageStatus status = StageStatus::Ok;
    std::string params_hash;

    bool operator==(const StageRecord&) const = default;
};

/// Grasp counts per funnel step for one asset.
struct GraspCounts {
    std::int64_t proposals = 0;        // raw proposer output
    std::int64_t after_proximity = 0;  // after the affordance proximity filter
    std::int64_t candidates = 0;       // submitted to verification
    std::int64_t verified = 0;
    std::map<std::string, std::int64_t> failures;  // by failure reason

    bool operator==(const GraspCounts&) const = default;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::vector<StageRecord> stages;
    GraspCounts counts;
    std::vector<std::string> flags;

    bool operator==(const Provenance&) const = default;
};

struct AssetRecord {
    std::string asset_id;
    std::string mesh_ref;
    PhysicalProperties physical;
    SemanticCaption caption;
    std::vector<FunctionalPoint> functional_points;
    std::vector<GraspPoint> grasp_points;
    std::vector<GraspPose> verified_grasps;
    PlacementAnnotation placement;
    Provenance provenance;
    // Top-level manifest keys this version does not know; written back as-is.
    Json extra = Json::object();

    bool operator==(const AssetRecord&) const = default;
};

/// Batch counts; every rate is derived from them on demand.
struct PipelineStats {
    std::int64_t ingested = 0;
    std::int64_t gated = 0;  // passed the quality gate
    std::int64_t annotated = 0;
    std::int64_t errors = 0;
    std::int64_t proposals = 0;
    std::int64_t after_proximity = 0;
    std::int64_t candidates = 0;
    std::int64_t verified = 0;

    std::optional<double> gate_pass_rate() const { return ratio(gated, ingested); }
    std::optional<double> verification_rate() const { return ratio(verified, candidates); }
    std::optional<double> avg_proposals_per_object() const { return ratio(proposals, annotated); }
    std::optional<double> avg_after_proximity_per_object() const { return ratio(after_proximity, annotated); }
    std::optional<double> avg_candidates_per_object() const { return ratio(candidates, annotated); }
    std::optional<double> avg_verified_per_object() const { return ratio(verified, annotated); }

    static std::optional<double> ratio(std::int64_t num, std::int64_t den) {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    }

    PipelineStats& operator+=(const PipelineStats& o);
    bool operator==(const PipelineStats&) const = default;
};

inline constexpr double kQuaternionTolerance = 1e-6;
inline constexpr double kMaxFriction = 2.0;

// Validation: each throws ValidationError naming the offending field path.
void validate(const PhysicalProperties& p, const std::string& path = "physical");
void validate(const SemanticCaption& c, const std::string& path = "caption");
void validate(const FunctionalPoint& p, const std::string& path);
void validate(const VerificationOutcome& v, const std::string& path, double displacement_threshold = 0.01);
void validate(const GraspPose& g, const std::string& path);
void validate(const GripperModel& g, const std::string& path = "gripper");
void validate(const PlacementAnnotation& p, const std::string& path = "placement");
void validate(const AssetRecord& r);
void validate(const PipelineStats& s);

/// Checks that need the asset geometry: functional points inside the 5%
/// inflated OBB and the collision radius covering the footprint.
void validate_against_mesh(const AssetRecord& r, const TriMesh& mesh);

Json to_json(const PipelineStats& s);

}  // namespace manitwin
