#include "manitwin/layout.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/manifest.hpp"

namespace manitwin {

namespace {

const AssetRecord& lookup(const std::map<std::string_view, const AssetRecord*>& by_id, const std::string& id) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw NotFoundError("layout references unknown asset '" + id + "'");
    return *it->second;
}

std::map<std::string_view, const AssetRecord*> index_assets(std::span<const AssetRecord> assets) {
    std::map<std::string_view, const AssetRecord*> by_id;
    for (const AssetRecord& a : assets) by_id.emplace(a.asset_id, &a);
    return by_id;
}

}  // namespace

SceneLayout sample_layout(std::span<const AssetRecord> assets, const Table& table, std::uint64_t seed,
                          int max_attempts) {
    if (max_attempts < 1) throw ArgumentError("sample_layout: max_attempts must be >= 1");
    if (!(table.width() >= 0.0) || !(table.depth() >= 0.0)) throw ArgumentError("sample_layout: inverted table");
    for (const AssetRecord& a : assets)
        if (!(a.placement.collision_radius > 0.0))
            throw ArgumentError("sample_layout: asset '" + a.asset_id + "' has no positive collision radius");

    SceneLayout layout;
    layout.table = table;
    layout.seed = seed;
    Rng rng(seed);
    std::vector<double> radii;
    for (const AssetRecord& a : assets) {
        const double r = a.placement.collision_radius;
        const double x_lo = table.x_min + r, x_hi = table.x_max - r;
        const double y_lo = table.y_min + r, y_hi = table.y_max - r;
        if (x_lo > x_hi || y_lo > y_hi) throw InfeasibleError(a.asset_id, "collision circle does not fit on the table");

        bool placed = false;
        for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
            const Vector2d c(uniform(rng, x_lo, x_hi), uniform(rng, y_lo, y_hi));
            const double yaw = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            bool clear = true;
            for (std::size_t k = 0; k < layout.placements.size() && clear; ++k)
                clear = (c - layout.placements[k].position).norm() >= r + radii[k];
            if (clear) {
                layout.placements.push_back({a.asset_id, c, yaw});
                radii.push_back(r);
                placed = true;
            }
        }
        if (!placed)
            throw InfeasibleError(a.asset_id, "no collision-free position after " + std::to_string(max_attempts) +
                                                  " attempts");
    }
    return layout;
}

std::vector<LayoutViolation> validate_layout(const SceneLayout& layout, std::span<const AssetRecord> assets) {
    const auto by_id = index_assets(assets);
    std::vector<double> r;
    for (const Placement& p : layout.placements) r.push_back(lookup(by_id, p.asset_id).placement.collision_radius);

    std::vector<LayoutViolation> out;
    const Table& t = layout.table;
    for (std::size_t i = 0; i < layout.placements.size(); ++i) {
        const Vector2d& c = layout.placements[i].position;
        const double past = std::max({t.x_min - (c.x() - r[i]), (c.x() + r[i]) - t.x_max, t.y_min - (c.y() - r[i]),
                                      (c.y() + r[i]) - t.y_max});
        if (past > 0.0) out.push_back({LayoutViolation::Kind::OutOfBounds, i, i, past});
    }
    for (std::size_t i = 0; i < layout.placements.size(); ++i)
        for (std::size_t j = i + 1; j < layout.placements.size(); ++j) {
            const double gap = (layout.placements[i].position - layout.placements[j].position).norm() - (r[i] + r[j]);
            if (gap < 0.0) out.push_back({LayoutViolation::Kind::Overlap, i, j, -gap});
        }
    return out;
}

WorldPose world_pose(const Placement& p, const AssetRecord& asset, const Table& table) {
    const Quaterniond yaw(Eigen::AngleAxisd(p.yaw, Vector3d::UnitZ()));
    const Quaterniond q = (yaw * asset.placement.placement_orientation).normalized();
    // The placement origin lands on the table point; the rest of the asset
    // follows rigidly, so the origin itself is what is reported.
    return {Vector3d(p.position.x(), p.position.y(), table.height), q};
}

Vector3d world_point(const Placement& p, const AssetRecord& asset, const Table& table, const Vector3d& local) {
    const WorldPose w = world_pose(p, asset, table);
    return w.position + w.orientation * (local - asset.placement.placement_position);
}

std::vector<AssetRecord> choose_assets(std::span<const AssetRecord> pool, std::size_t count, std::uint64_t seed) {
    if (count > pool.size())
        throw ArgumentError("choose_assets: asked for " + std::to_string(count) + " of " +
                            std::to_string(pool.size()) + " assets");
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    std::vector<AssetRecord> out;
    for (std::size_t k = 0; k < count; ++k) {
        const auto pick = k + uniform_index(rng, idx.size() - k);
        std::swap(idx[k], idx[pick]);
        out.push_back(pool[idx[k]]);
    }
    return out;
}

Json layout_to_json(const SceneLayout& layout, std::span<const AssetRecord> assets) {
    const auto by_id = index_assets(assets);
    const Table& t = layout.table;
    Json placements = Json::array();
    for (const Placement& p : layout.placements) {
        const AssetRecord& a = lookup(by_id, p.asset_id);
        const WorldPose w = world_pose(p, a, t);
        placements.push_back(Json{{"asset_id", p.asset_id},
                                  {"position", Json::array({p.position.x(), p.position.y()})},
                                  {"yaw", p.yaw},
                                  {"collision_radius", a.placement.collision_radius},
                                  {"world_position", vec3_json(w.position)},
                                  {"world_orientation", quaternion_json(w.orientation)}});
    }
    return Json{{"scene_id", layout.scene_id},
                {"table",
                 {{"x_min", t.x_min}, {"y_min", t.y_min}, {"x_max", t.x_max}, {"y_max", t.y_max}, {"height", t.height}}},
                {"placements", std::move(placements)},
                {"provenance", {{"seed", layout.seed}, {"selection", layout.selection}}}};
}

SceneLayout layout_from_json(const Json& j) {
    const FieldReader r(j, "");
    SceneLayout l;
    l.scene_id = r.string("scene_id");
    const FieldReader t = r.child("table");
    l.table = {t.number("x_min"), t.number("y_min"), t.number("x_max"), t.number("y_max"), t.number("height")};
    for (const auto& p : r.array("placements")) {
        Placement pl;
        pl.asset_id = p.string("asset_id");
        if (!p.has("position")) p.fail("position", "missing");
        const Json& pos = p.node().at("position");
        if (!pos.is_array() || pos.size() != 2 || !pos[0].is_number() || !pos[1].is_number())
            p.fail("position", "expected [x, y]");
        pl.position = Vector2d(pos[0].get<double>(), pos[1].get<double>());
        pl.yaw = p.number("yaw");
        l.placements.push_back(std::move(pl));
    }
    const FieldReader prov = r.child("provenance");
    l.seed = prov.unsigned_integer("seed");
    l.selection = prov.string("selection");
    return l;
}

}  // namespace manitwin
