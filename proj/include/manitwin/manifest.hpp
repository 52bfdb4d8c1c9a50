#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "manitwin/asset.hpp"

namespace manitwin {

inline constexpr std::string_view kManifestFormat = "manitwin.asset/1";
inline constexpr std::string_view kManifestFileName = "manifest.json";

/// Walks a parsed JSON document, turning shape mismatches into ParseError
/// messages that name the full field path.
class FieldReader {
public:
    FieldReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {}

    const Json& node() const { return node_; }
    const std::string& path() const { return path_; }
    bool has(std::string_view key) const;

    FieldReader child(std::string_view key) const;
    std::vector<FieldReader> array(std::string_view key) const;
    double number(std::string_view key) const;
    std::int64_t integer(std::string_view key) const;
    std::uint64_t unsigned_integer(std::string_view key) const;
    bool boolean(std::string_view key) const;
    std::string string(std::string_view key) const;
    Vector3d vec3(std::string_view key) const;
    /// Stored as [w, x, y, z].
    Quaterniond quaternion(std::string_view key) const;
    std::optional<int> optional_int(std::string_view key) const;

    [[noreturn]] void fail(std::string_view key, const std::string& what) const;

private:
    const Json& at(std::string_view key) const;
    std::string field(std::string_view key) const;

    const Json& node_;
    std::string path_;
};

/// Parses JSON text, reporting syntax errors with line and column.
Json parse_json_text(std::string_view text, std::string_view source);

Json vec3_json(const Vector3d& v);
Json quaternion_json(const Quaterniond& q);

Json to_json(const PhysicalProperties& p);
Json to_json(const SemanticCaption& c);
Json to_json(const FunctionalPoint& p);
Json to_json(const GraspPoint& p);
Json to_json(const VerificationOutcome& v);
Json to_json(const GraspPose& g);
Json to_json(const GripperModel& g);
Json to_json(const PlacementAnnotation& p);
Json to_json(const AssetRecord& r);

PhysicalProperties physical_from(const FieldReader& r);
SemanticCaption caption_from(const FieldReader& r);
FunctionalPoint functional_point_from(const FieldReader& r);
GraspPoint grasp_point_from(const FieldReader& r);
VerificationOutcome outcome_from(const FieldReader& r);
GraspPose grasp_pose_from(const FieldReader& r);
GripperModel gripper_from(const FieldReader& r);
PlacementAnnotation placement_from(const FieldReader& r);
/// Shape-checks and converts; does not run invariant validation.
AssetRecord record_from(const FieldReader& r);

std::string manifest_text(const AssetRecord& record);
/// Parses and validates. Throws ParseError or ValidationError.
AssetRecord parse_manifest(std::string_view text, std::string_view source = "manifest");

/// Validates, then writes atomically.
void save_manifest(const AssetRecord& record, const std::filesystem::path& path);
AssetRecord load_manifest(const std::filesystem::path& path);

std::string grasp_list_text(const std::vector<GraspPose>& grasps);
std::vector<GraspPose> parse_grasp_list(std::string_view text, std::string_view source = "grasps");

}  // namespace manitwin
