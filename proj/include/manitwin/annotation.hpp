#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "manitwin/asset.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/geometry/render.hpp"
#include "manitwin/geometry/types.hpp"
#include "manitwin/manifest.hpp"

namespace manitwin {

enum class GateReason { NotSingleObject, LowVisualQuality };

std::string_view to_string(GateReason r);
GateReason parse_gate_reason(std::string_view name);

struct GateResult {
    bool passed = true;
    std::vector<GateReason> reasons;

    bool operator==(const GateResult&) const = default;
};

struct PropertyEstimate {
    PhysicalProperties physical;
    std::vector<std::string> flags;

    bool operator==(const PropertyEstimate&) const = default;
};

struct PointSelection {
    std::vector<FunctionalPoint> functional_points;
    std::vector<GraspPoint> grasp_points;
    // Candidate index (into the FPS subset) behind each point, same order.
    std::vector<Index> functional_candidates;
    std::vector<Index> grasp_candidates;

    bool operator==(const PointSelection&) const = default;
};

struct SelectionBounds {
    int min_functional = 2;
    int max_functional = 4;
    int min_grasp = 2;
    int max_grasp = 3;
};

inline constexpr int kDefaultMaxProposals = 4000;

/// What a stage sees of an asset. The mesh and views must outlive the call.
struct AssetView {
    std::string asset_id;
    const TriMesh* mesh = nullptr;
    std::span<const RenderView> views;
};

/// One implementation per backend; all methods are safe to call concurrently.
class AnnotationClient {
public:
    virtual ~AnnotationClient() = default;

    virtual GateResult quality_gate(const AssetView& asset) = 0;
    virtual PropertyEstimate estimate_properties(const AssetView& asset) = 0;
    virtual SemanticCaption caption(const AssetView& asset) = 0;
    virtual PointSelection select_points(const AssetView& asset, const PointCloud& candidates) = 0;
    virtual std::vector<GraspPose> propose_grasps(const AssetView& asset, const PointCloud& cloud,
                                                  const GripperModel& gripper, int max_n, std::uint64_t seed) = 0;
};

/// Fixture-table entry for the mock captioner and property estimator.
struct CaptionFixture {
    std::string category;
    std::string color;
    std::string material;
    std::string shape;
    std::string function;
    std::optional<double> longest_axis_m;  // real-world size; absent keeps the mesh scale
};

/// Asset id -> fixture. A key ending in '*' matches any id with that prefix;
/// exact keys win, then the longest prefix.
class FixtureTable {
public:
    void add(std::string key, CaptionFixture entry);
    const CaptionFixture* find(std::string_view asset_id) const;
    std::size_t size() const { return entries_.size(); }

    static FixtureTable from_json(const Json& j);
    static FixtureTable load(const std::string& path);
    Json to_json() const;

private:
    std::map<std::string, CaptionFixture, std::less<>> entries_;
};

double friction_for_material(std::string_view material);
std::string size_bucket(double longest_axis_m);

struct MockConfig {
    double density = 500.0;             // kg/m^3
    double fill_factor = 0.3;           // fallback: OBB volume share
    double component_share = 0.05;      // gate: volume share that counts as an object
    double degenerate_face_ratio = 0.2;  // gate: above this, low visual quality
    double antipodal_angle_deg = 30.0;
    double contact_depth = 0.005;       // m, contacts sit this far behind the fingertips
    int pair_budget_per_grasp = 200;
    SelectionBounds bounds;
    FixtureTable fixtures;
};

/// Deterministic geometric stand-in for every annotation stage.
class MockAnnotationClient final : public AnnotationClient {
public:
    explicit MockAnnotationClient(MockConfig config = {});

    GateResult quality_gate(const AssetView& asset) override;
    PropertyEstimate estimate_properties(const AssetView& asset) override;
    SemanticCaption caption(const AssetView& asset) override;
    PointSelection select_points(const AssetView& asset, const PointCloud& candidates) override;
    std::vector<GraspPose> propose_grasps(const AssetView& asset, const PointCloud& cloud,
                                          const GripperModel& gripper, int max_n, std::uint64_t seed) override;

    const MockConfig& config() const { return config_; }

private:
    MockConfig config_;
};

/// Connected components over faces, welding vertices at identical positions.
/// Returns the component index of every face.
std::vector<int> face_components(const TriMesh& mesh, int* count = nullptr);

struct AntipodalPair {
    Index i = 0;
    Index j = 0;
    double alignment = 0.0;  // cos of the angle between n_i and -n_j
};

/// Random pair search over `cloud` (which must carry normals): keeps pairs no
/// wider than the gripper opening whose normals are within `angle_deg` of
/// antipodal and that face away from each other. Stops after `max_n` pairs or
/// `budget` draws.
std::vector<AntipodalPair> sample_antipodal_pairs(const PointCloud& cloud, const GripperModel& gripper,
                                                  double angle_deg, int max_n, std::uint64_t budget, Rng& rng);

/// Grasp frame for a contact pair: x along the jaw (p_i to p_j), z the
/// approach direction, y = z cross x.
Quaterniond grasp_orientation(const Vector3d& jaw_axis, const Vector3d& approach);

// Wire format shared by the remote adapter and the stub server. Readers
// throw ParseError naming the offending field.
Json to_json(const GateResult& g);
GateResult gate_result_from(const FieldReader& r);
Json to_json(const PropertyEstimate& p);
PropertyEstimate property_estimate_from(const FieldReader& r);
Json to_json(const PointSelection& s);
PointSelection point_selection_from(const FieldReader& r);
Json mesh_to_json(const TriMesh& mesh);
TriMesh mesh_from(const FieldReader& r);
Json cloud_to_json(const PointCloud& cloud);
PointCloud cloud_from(const FieldReader& r);

}  // namespace manitwin
