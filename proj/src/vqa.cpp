#include "manitwin/vqa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/random.hpp"

namespace manitwin {

namespace {

constexpr std::array<std::pair<VqaCategory, std::string_view>, 5> kNames{{
    {VqaCategory::LanguageGrounding, "language_grounding"},
    {VqaCategory::FunctionalPlanning, "functional_planning"},
    {VqaCategory::SceneUnderstanding, "scene_understanding"},
    {VqaCategory::TaskPlanning, "task_planning"},
    {VqaCategory::Detection, "detection"},
}};

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string signed_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.*f", digits, v);
    return buf;
}

// Scene view shared by the templates.
struct Scene {
    const SceneLayout& layout;
    std::vector<const AssetRecord*> rec;  // per placement
    std::vector<std::string> desc;        // per placement

    std::size_t size() const { return rec.size(); }
    const Vector2d& center(std::size_t i) const { return layout.placements[i].position; }
    double radius(std::size_t i) const { return rec[i]->placement.collision_radius; }
};

Scene make_scene(const SceneLayout& layout, std::span<const AssetRecord> records) {
    std::map<std::string_view, const AssetRecord*> by_id;
    for (const AssetRecord& r : records) by_id.emplace(r.asset_id, &r);
    Scene s{layout, {}, {}};
    for (const Placement& p : layout.placements) {
        const auto it = by_id.find(p.asset_id);
        if (it == by_id.end()) throw NotFoundError("vqa: no record for asset '" + p.asset_id + "'");
        s.rec.push_back(it->second);
    }
    std::map<std::string, int> seen;
    auto base = [&](std::size_t i) {
        const SemanticCaption& c = s.rec[i]->caption;
        return "the " + c.color + " " + c.material + " " + c.category;
    };
    for (std::size_t i = 0; i < s.size(); ++i) ++seen[base(i)];
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::string d = base(i);
        if (seen[d] > 1) d += " at (" + fixed(s.center(i).x(), 2) + ", " + fixed(s.center(i).y(), 2) + ")";
        s.desc.push_back(std::move(d));
    }
    return s;
}

Json ids(const Scene& s, const std::vector<std::size_t>& idx) {
    Json arr = Json::array();
    for (std::size_t i : idx) arr.push_back(s.layout.placements[i].asset_id);
    return arr;
}

std::string join_desc(const Scene& s, const std::vector<std::size_t>& idx) {
    std::string out;
    for (std::size_t k = 0; k < idx.size(); ++k) out += (k ? ", " : "") + s.desc[idx[k]];
    return out;
}

/// Up to `n` distinct indices from `candidates`, in draw order.
std::vector<std::size_t> draw(Rng& rng, std::vector<std::size_t> candidates, int n) {
    std::vector<std::size_t> out;
    for (int k = 0; k < n && !candidates.empty(); ++k) {
        const auto pick = uniform_index(rng, candidates.size());
        out.push_back(candidates[pick]);
        candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

std::string caption_attribute(const SemanticCaption& c, std::string_view attribute) {
    if (attribute == "category") return c.category;
    if (attribute == "color") return c.color;
    if (attribute == "material") return c.material;
    if (attribute == "shape") return c.shape;
    return c.size;
}

void detection(const Scene& s, Rng& rng, int n, std::vector<VQAPair>& out) {
    static constexpr std::array<std::string_view, 5> kAttributes{"category", "color", "material", "shape", "size"};
    std::vector<std::pair<std::string, std::string>> queries;
    std::set<std::pair<std::string, std::string>> unique;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::string_view a : kAttributes) {
            std::pair<std::string, std::string> q{std::string(a), caption_attribute(s.rec[i]->caption, a)};
            if (unique.insert(q).second) queries.push_back(std::move(q));
        }
    std::vector<std::size_t> qi = draw(rng, all_indices(queries.size()), n);
    for (std::size_t k : qi) {
        const auto& [attribute, value] = queries[k];
        std::vector<std::size_t> matches;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (caption_attribute(s.rec[i]->caption, attribute) == value) matches.push_back(i);
        VQAPair p;
        p.category = VqaCategory::Detection;
        p.question = "How many objects on the table have " + attribute + " \"" + value + "\"?";
        p.answer = std::to_string(matches.size());
        p.grounding = {{"assets", ids(s, matches)},
                       {"attribute", attribute},
                       {"value", value},
                       {"matches", matches},
                       {"count", matches.size()}};
        out.push_back(std::move(p));
    }
}

void language_grounding(const Scene& s, Rng& rng, int n, std::vector<VQAPair>& out) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.rec[i]->grasp_points.empty()) eligible.push_back(i);
    for (std::size_t i : draw(rng, eligible, n)) {
        const GraspPoint& g = s.rec[i]->grasp_points.front();
        VQAPair p;
        p.category = VqaCategory::LanguageGrounding;
        p.question = "Which grasp type should be used to pick up " + s.desc[i] + "?";
        p.answer = std::string(to_string(g.grasp_type));
        p.grounding = {{"assets", ids(s, {i})},
                       {"target", i},
                       {"description", s.desc[i]},
                       {"grasp_point_id", g.id},
                       {"grasp_type", to_string(g.grasp_type)}};
        out.push_back(std::move(p));
    }
}

void functional_planning(const Scene& s, Rng& rng, int n, std::vector<VQAPair>& out) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (!s.rec[i]->functional_points.empty()) eligible.push_back(i);
    const Vector2d eye = front_viewpoint(s.layout.table);
    for (std::size_t i : draw(rng, eligible, n)) {
        const auto& fps = s.rec[i]->functional_points;
        const FunctionalPoint& f = fps[uniform_index(rng, fps.size())];
        const Vector3d w = world_point(s.layout.placements[i], *s.rec[i], s.layout.table, f.position);
        std::vector<std::size_t> occluders;
        for (std::size_t k = 0; k < s.size(); ++k)
            if (k != i && point_segment_distance(s.center(k), eye, w.head<2>()) < s.radius(k)) occluders.push_back(k);

        std::vector<std::size_t> referenced{i};
        referenced.insert(referenced.end(), occluders.begin(), occluders.end());
        VQAPair p;
        p.category = VqaCategory::FunctionalPlanning;
        p.question = "Where is the " + f.function_label + " point of " + s.desc[i] +
                     ", and can the front camera see it?";
        p.answer = "at (" + fixed(w.x(), 3) + ", " + fixed(w.y(), 3) + ", " + fixed(w.z(), 3) + ") m; " +
                   (occluders.empty() ? std::string("visible") : "blocked by " + join_desc(s, occluders));
        p.grounding = {{"assets", ids(s, referenced)},
                       {"target", i},
                       {"functional_point_id", f.id},
                       {"label", f.function_label},
                       {"world_position", Json::array({w.x(), w.y(), w.z()})},
                       {"viewpoint", Json::array({eye.x(), eye.y()})},
                       {"occluders", occluders},
                       {"visible", occluders.empty()}};
        out.push_back(std::move(p));
    }
}

void scene_understanding(const Scene& s, Rng& rng, int n, std::vector<VQAPair>& out) {
    if (s.size() < 2) return;
    for (std::size_t i : draw(rng, all_indices(s.size()), n)) {
        std::size_t best = i;
        double best_gap = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (k == i) continue;
            const double gap = (s.center(i) - s.center(k)).norm() - s.radius(i) - s.radius(k);
            if (best == i || gap < best_gap) {
                best = k;
                best_gap = gap;
            }
        }
        VQAPair p;
        p.category = VqaCategory::SceneUnderstanding;
        p.question = "How much free space is there between " + s.desc[i] + " and its nearest neighbour?";
        p.answer = fixed(best_gap, 3) + " m, to " + s.desc[best];
        p.grounding = {{"assets", ids(s, {i, best})},
                       {"target", i},
                       {"neighbor", best},
                       {"distance", (s.center(i) - s.center(best)).norm()},
                       {"gap", best_gap}};
        out.push_back(std::move(p));
    }
}

void task_planning(const Scene& s, Rng& rng, int n, std::vector<VQAPair>& out) {
    for (std::size_t i : draw(rng, all_indices(s.size()), n)) {
        // Displacements on a centimeter grid so the question states them exactly.
        auto leg = [&] {
            const double cm = std::round(uniform(rng, -30.0, 30.0));
            return (cm == 0.0 ? 5.0 : cm) / 100.0;
        };
        const double dx = leg(), dy = leg();
        const Vector2d a = s.center(i);
        const std::array<Vector2d, 2> legs{Vector2d(dx, 0.0), Vector2d(0.0, dy)};
        std::vector<std::size_t> colliders;
        for (std::size_t k = 0; k < s.size(); ++k)
            if (k != i && sweep_collides(a, s.radius(i), legs, s.center(k), s.radius(k))) colliders.push_back(k);
        std::vector<std::size_t> referenced{i};
        referenced.insert(referenced.end(), colliders.begin(), colliders.end());
        VQAPair p;
        p.category = VqaCategory::TaskPlanning;
        p.question = "If " + s.desc[i] + " slides " + signed_fixed(dx, 2) + " m along x and then " +
                     signed_fixed(dy, 2) + " m along y, does it hit anything?";
        p.answer = colliders.empty() ? std::string("no") : "yes: " + join_desc(s, colliders);
        p.grounding = {{"assets", ids(s, referenced)},
                       {"target", i},
                       {"start", Json::array({a.x(), a.y()})},
                       {"legs", Json::array({Json::array({dx, 0.0}), Json::array({0.0, dy})})},
                       {"colliders", colliders},
                       {"collision", !colliders.empty()}};
        out.push_back(std::move(p));
    }
}

}  // namespace

std::string_view to_string(VqaCategory c) {
    for (const auto& [v, n] : kNames)
        if (v == c) return n;
    return "unknown";
}

VqaCategory parse_vqa_category(std::string_view name) {
    for (const auto& [v, n] : kNames)
        if (n == name) return v;
    throw ValidationError("category", "unknown VQA category '" + std::string(name) + "'");
}

Vector2d front_viewpoint(const Table& t) {
    return {0.5 * (t.x_min + t.x_max), t.y_min - t.depth()};
}

double point_segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
    const Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

bool sweep_collides(const Vector2d& start, double ra, std::span<const Vector2d> legs, const Vector2d& center,
                    double rb) {
    Vector2d from = start;
    for (const Vector2d& leg : legs) {
        if (point_segment_distance(center, from, from + leg) < ra + rb) return true;
        from += leg;
    }
    return legs.empty() && (center - start).norm() < ra + rb;
}

std::vector<VQAPair> generate_vqa(const SceneLayout& layout, std::span<const AssetRecord> records, int per_category,
                                  std::uint64_t seed) {
    if (per_category < 0) throw ArgumentError("generate_vqa: per_category must be >= 0");
    const Scene scene = make_scene(layout, records);
    std::vector<VQAPair> out;
    // One stream per category so adding pairs to one never shifts another.
    for (VqaCategory c : kVqaCategories) {
        Rng rng(splitmix64(seed ^ fnv1a64(to_string(c))));
        const std::size_t first = out.size();
        switch (c) {
            case VqaCategory::Detection: detection(scene, rng, per_category, out); break;
            case VqaCategory::LanguageGrounding: language_grounding(scene, rng, per_category, out); break;
            case VqaCategory::FunctionalPlanning: functional_planning(scene, rng, per_category, out); break;
            case VqaCategory::SceneUnderstanding: scene_understanding(scene, rng, per_category, out); break;
            case VqaCategory::TaskPlanning: task_planning(scene, rng, per_category, out); break;
        }
        for (std::size_t k = first; k < out.size(); ++k) out[k].scene_id = layout.scene_id;
    }
    return out;
}

Json to_json(const VQAPair& p) {
    return Json{{"scene_id", p.scene_id},
                {"category", to_string(p.category)},
                {"question", p.question},
                {"answer", p.answer},
                {"grounding", p.grounding}};
}

VQAPair vqa_pair_from(const FieldReader& r) {
    VQAPair p;
    p.scene_id = r.string("scene_id");
    try {
        p.category = parse_vqa_category(r.string("category"));
    } catch (const ValidationError& e) {
        r.fail("category", e.what());
    }
    p.question = r.string("question");
    p.answer = r.string("answer");
    r.child("grounding");
    p.grounding = r.node().at("grounding");
    return p;
}

}  // namespace manitwin
