#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "manitwin/asset.hpp"

namespace manitwin {

using Vector2d = Eigen::Vector2d;

/// Axis-aligned tabletop rectangle, meters.
struct Table {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 1.0;
    double y_max = 1.0;
    double height = 0.0;  // z of the support plane

    double width() const { return x_max - x_min; }
    double depth() const { return y_max - y_min; }
    bool contains(const Table& inner) const {
        return x_min <= inner.x_min && y_min <= inner.y_min && x_max >= inner.x_max && y_max >= inner.y_max;
    }
    bool operator==(const Table&) const = default;
};

struct Placement {
    std::string asset_id;
    Vector2d position = Vector2d::Zero();
    double yaw = 0.0;  // rad, [0, 2 pi)

    bool operator==(const Placement&) const = default;
};

struct SceneLayout {
    std::string scene_id;
    Table table;
    std::vector<Placement> placements;
    std::uint64_t seed = 0;
    std::string selection = "explicit";  // how the asset list was chosen

    bool operator==(const SceneLayout&) const = default;
};

inline constexpr int kDefaultMaxAttempts = 1000;

/// Places the assets in order by rejection sampling: each position uniform
/// over the table inset by the asset's collision radius, yaw uniform, kept
/// iff clear of every earlier circle (tangency allowed). Throws
/// InfeasibleError naming the first asset that cannot be placed.
SceneLayout sample_layout(std::span<const AssetRecord> assets, const Table& table, std::uint64_t seed,
                          int max_attempts = kDefaultMaxAttempts);

struct LayoutViolation {
    enum class Kind { Overlap, OutOfBounds };
    Kind kind = Kind::Overlap;
    std::size_t i = 0;  // placement index
    std::size_t j = 0;  // second placement for overlaps; equals i otherwise
    double amount = 0.0;  // penetration depth or distance past the edge, m

    bool operator==(const LayoutViolation&) const = default;
};

/// Every overlapping pair and every circle leaving the table. Throws
/// NotFoundError for an asset id missing from `assets`.
std::vector<LayoutViolation> validate_layout(const SceneLayout& layout, std::span<const AssetRecord> assets);

/// World pose of a placed asset: the asset's placement origin goes to
/// (x, y, table height), rotated by yaw about +z after its rest orientation.
struct WorldPose {
    Vector3d position;
    Quaterniond orientation;
};
WorldPose world_pose(const Placement& p, const AssetRecord& asset, const Table& table);
/// Asset-frame point `local` in world coordinates under that pose.
Vector3d world_point(const Placement& p, const AssetRecord& asset, const Table& table, const Vector3d& local);

/// Picks `count` distinct assets uniformly at random (order as drawn).
std::vector<AssetRecord> choose_assets(std::span<const AssetRecord> pool, std::size_t count, std::uint64_t seed);

Json layout_to_json(const SceneLayout& layout, std::span<const AssetRecord> assets);
SceneLayout layout_from_json(const Json& j);

}  // namespace manitwin
