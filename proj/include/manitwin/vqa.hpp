#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "manitwin/asset.hpp"
#include "manitwin/layout.hpp"
#include "manitwin/manifest.hpp"

namespace manitwin {

enum class VqaCategory { LanguageGrounding, FunctionalPlanning, SceneUnderstanding, TaskPlanning, Detection };

inline constexpr std::array<VqaCategory, 5> kVqaCategories{
    VqaCategory::LanguageGrounding, VqaCategory::FunctionalPlanning, VqaCategory::SceneUnderstanding,
    VqaCategory::TaskPlanning, VqaCategory::Detection};

std::string_view to_string(VqaCategory c);
VqaCategory parse_vqa_category(std::string_view name);

/// `grounding` always has "assets" (ids referenced) plus per-category facts:
///
///   detection           attribute, value, matches (placement indices), count
///   language_grounding  target, description, grasp_point_id, grasp_type
///   functional_planning target, functional_point_id, label, world_position,
///                       viewpoint, occluders, visible
///   scene_understanding target, neighbor, distance, gap
///   task_planning       target, start, legs, colliders, collision
struct VQAPair {
    std::string scene_id;
    VqaCategory category = VqaCategory::Detection;
    std::string question;
    std::string answer;
    Json grounding;

    bool operator==(const VQAPair&) const = default;
};

inline constexpr int kDefaultPerCategory = 3;

/// Template questions answered from the layout and asset records.
std::vector<VQAPair> generate_vqa(const SceneLayout& layout, std::span<const AssetRecord> records, int per_category,
                                  std::uint64_t seed);

/// Fixed camera used for visibility questions: centered in front of the
/// table (low y side), one table depth away.
Vector2d front_viewpoint(const Table& table);

/// Distance from `p` to the segment [a, b].
double point_segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b);

/// Whether a circle of radius `ra` moved from `start` along the consecutive
/// displacements `legs` ever comes closer than ra + rb to `center`.
bool sweep_collides(const Vector2d& start, double ra, std::span<const Vector2d> legs, const Vector2d& center,
                    double rb);

Json to_json(const VQAPair& pair);
VQAPair vqa_pair_from(const FieldReader& r);

}  // namespace manitwin
