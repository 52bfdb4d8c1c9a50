#include "manitwin/manifest.hpp"

#include <algorithm>
#include <array>

#include "manitwin/errors.hpp"
#include "manitwin/io_util.hpp"

namespace manitwin {
namespace {

constexpr std::array<std::string_view, 10> kKnownKeys{
    "format", "asset_id", "mesh_ref", "physical", "caption", "functional_points",
    "grasp_points", "verified_grasps", "placement", "provenance",
};

template <typename T, typename F>
Json array_of(const std::vector<T>& items, F&& convert) {
    Json arr = Json::array();
    for (const auto& item : items) arr.push_back(convert(item));
    return arr;
}

Json optional_int_json(const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

bool FieldReader::has(std::string_view key) const {
    return node_.is_object() && node_.contains(key);
}

std::string FieldReader::field(std::string_view key) const {
    if (key.empty()) return path_;
    if (path_.empty()) return std::string(key);
    if (!key.empty() && key.front() == '[') return path_ + std::string(key);
    return path_ + "." + std::string(key);
}

void FieldReader::fail(std::string_view key, const std::string& what) const {
    throw ParseError("field '" + field(key) + "': " + what);
}

const Json& FieldReader::at(std::string_view key) const {
    if (!node_.is_object()) throw ParseError("field '" + path_ + "': expected an object");
    const auto it = node_.find(key);
    if (it == node_.end()) fail(key, "missing");
    return *it;
}

FieldReader FieldReader::child(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_object()) fail(key, "expected an object");
    return FieldReader(n, field(key));
}

std::vector<FieldReader> FieldReader::array(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_array()) fail(key, "expected an array");
    std::vector<FieldReader> out;
    const std::string base = field(key);
    for (std::size_t i = 0; i < n.size(); ++i) out.emplace_back(n[i], base + "[" + std::to_string(i) + "]");
    return out;
}

double FieldReader::number(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_number()) fail(key, "expected a number");
    return n.get<double>();
}

std::int64_t FieldReader::integer(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_number_integer()) fail(key, "expected an integer");
    return n.get<std::int64_t>();
}

std::uint64_t FieldReader::unsigned_integer(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_number_unsigned() && !(n.is_number_integer() && n.get<std::int64_t>() >= 0))
        fail(key, "expected a non-negative integer");
    return n.get<std::uint64_t>();
}

bool FieldReader::boolean(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_boolean()) fail(key, "expected a boolean");
    return n.get<bool>();
}

std::string FieldReader::string(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_string()) fail(key, "expected a string");
    return n.get<std::string>();
}

Vector3d FieldReader::vec3(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_array() || n.size() != 3 || !std::all_of(n.begin(), n.end(), [](const Json& x) { return x.is_number(); }))
        fail(key, "expected an array of 3 numbers");
    return {n[0].get<double>(), n[1].get<double>(), n[2].get<double>()};
}

Quaterniond FieldReader::quaternion(std::string_view key) const {
    const Json& n = at(key);
    if (!n.is_array() || n.size() != 4 || !std::all_of(n.begin(), n.end(), [](const Json& x) { return x.is_number(); }))
        fail(key, "expected [w, x, y, z]");
    return Quaterniond(n[0].get<double>(), n[1].get<double>(), n[2].get<double>(), n[3].get<double>());
}

std::optional<int> FieldReader::optional_int(std::string_view key) const {
    if (!has(key) || node_.at(key).is_null()) return std::nullopt;
    return static_cast<int>(integer(key));
}

Json parse_json_text(std::string_view text, std::string_view source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(std::string(source) + ": line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": malformed JSON");
    }
}

Json vec3_json(const Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json quaternion_json(const Quaterniond& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

Json to_json(const PhysicalProperties& p) {
    return {{"obb_dims", vec3_json(p.obb_dims)}, {"mass", p.mass}, {"friction", p.friction}};
}

Json to_json(const SemanticCaption& c) {
    return {{"category", c.category}, {"color", c.color}, {"material", c.material},
            {"size", c.size},         {"shape", c.shape}, {"function", c.function}};
}

Json to_json(const FunctionalPoint& p) {
    return {{"id", p.id},
            {"position", vec3_json(p.position)},
            {"function_label", p.function_label},
            {"confidence", p.confidence},
            {"rationale", p.rationale}};
}

Json to_json(const GraspPoint& p) {
    return {{"id", p.id},
            {"position", vec3_json(p.position)},
            {"grasp_type", to_string(p.grasp_type)},
            {"use_scenario", p.use_scenario}};
}

Json to_json(const VerificationOutcome& v) {
    return {{"passed", v.passed},
            {"failure_reason", to_string(v.failure_reason)},
            {"stable_frames", v.stable_frames},
            {"max_displacement", v.max_displacement}};
}

Json to_json(const GraspPose& g) {
    Json j{{"position", vec3_json(g.position)},
           {"orientation", quaternion_json(g.orientation)},
           {"confidence", g.confidence},
           {"associated_functional_point", optional_int_json(g.associated_functional_point)},
           {"associated_grasp_point", optional_int_json(g.associated_grasp_point)}};
    j["verification"] = g.verification ? to_json(*g.verification) : Json(nullptr);
    return j;
}

Json to_json(const GripperModel& g) {
    return {{"max_opening", g.max_opening},
            {"finger_length", g.finger_length},
            {"finger_thickness", g.finger_thickness},
            {"palm_depth", g.palm_depth},
            {"squeeze_force", g.squeeze_force}};
}

Json to_json(const PlacementAnnotation& p) {
    return {{"placement_position", vec3_json(p.placement_position)},
            {"placement_orientation", quaternion_json(p.placement_orientation)},
            {"collision_radius", p.collision_radius}};
}

Json to_json(const AssetRecord& r) {
    Json j;
    j["format"] = kManifestFormat;
    j["asset_id"] = r.asset_id;
    j["mesh_ref"] = r.mesh_ref;
    j["physical"] = to_json(r.physical);
    j["caption"] = to_json(r.caption);
    j["functional_points"] = array_of(r.functional_points, [](const auto& p) { return to_json(p); });
    j["grasp_points"] = array_of(r.grasp_points, [](const auto& p) { return to_json(p); });
    j["verified_grasps"] = array_of(r.verified_grasps, [](const auto& g) { return to_json(g); });
    j["placement"] = to_json(r.placement);

    const Provenance& p = r.provenance;
    Json prov;
    prov["seed"] = p.seed;
    prov["stages"] = array_of(p.stages, [](const StageRecord& s) {
        return Json{{"stage", s.stage}, {"status", to_string(s.status)}, {"params_hash", s.params_hash}};
    });
    Json failures = Json::object();
    for (const auto& [reason, count] : p.counts.failures) failures[reason] = count;
    prov["counts"] = {{"proposals", p.counts.proposals},
                      {"after_proximity", p.counts.after_proximity},
                      {"candidates", p.counts.candidates},
                      {"verified", p.counts.verified},
                      {"failures", failures}};
    prov["flags"] = p.flags;
    j["provenance"] = prov;

    for (const auto& [key, value] : r.extra.items()) j[key] = value;
    return j;
}

PhysicalProperties physical_from(const FieldReader& r) {
    return {r.vec3("obb_dims"), r.number("mass"), r.number("friction")};
}

SemanticCaption caption_from(const FieldReader& r) {
    return {r.string("category"), r.string("color"), r.string("material"),
            r.string("size"),     r.string("shape"), r.string("function")};
}

FunctionalPoint functional_point_from(const FieldReader& r) {
    return {static_cast<int>(r.integer("id")), r.vec3("position"), r.string("function_label"),
            r.number("confidence"), r.string("rationale")};
}

GraspPoint grasp_point_from(const FieldReader& r) {
    GraspPoint p;
    p.id = static_cast<int>(r.integer("id"));
    p.position = r.vec3("position");
    try {
        p.grasp_type = parse_grasp_type(r.string("grasp_type"));
    } catch (const ValidationError& e) {
        throw ValidationError(r.path() + ".grasp_type", e.what());
    }
    p.use_scenario = r.string("use_scenario");
    return p;
}

VerificationOutcome outcome_from(const FieldReader& r) {
    VerificationOutcome v;
    v.passed = r.boolean("passed");
    try {
        v.failure_reason = parse_failure_reason(r.string("failure_reason"));
    } catch (const ValidationError& e) {
        throw ValidationError(r.path() + ".failure_reason", e.what());
    }
    v.stable_frames = static_cast<int>(r.integer("stable_frames"));
    v.max_displacement = r.number("max_displacement");
    return v;
}

GraspPose grasp_pose_from(const FieldReader& r) {
    GraspPose g;
    g.position = r.vec3("position");
    g.orientation = r.quaternion("orientation");
    g.confidence = r.number("confidence");
    g.associated_functional_point = r.optional_int("associated_functional_point");
    g.associated_grasp_point = r.optional_int("associated_grasp_point");
    if (r.has("verification") && !r.node().at("verification").is_null())
        g.verification = outcome_from(r.child("verification"));
    return g;
}

GripperModel gripper_from(const FieldReader& r) {
    return {r.number("max_opening"), r.number("finger_length"), r.number("finger_thickness"),
            r.number("palm_depth"), r.number("squeeze_force")};
}

PlacementAnnotation placement_from(const FieldReader& r) {
    return {r.vec3("placement_position"), r.quaternion("placement_orientation"), r.number("collision_radius")};
}

AssetRecord record_from(const FieldReader& r) {
    if (r.has("format") && r.string("format") != kManifestFormat)
        r.fail("format", "unsupported manifest format '" + r.string("format") + "'");

    AssetRecord rec;
    rec.asset_id = r.string("asset_id");
    rec.mesh_ref = r.string("mesh_ref");
    rec.physical = physical_from(r.child("physical"));
    rec.caption = caption_from(r.child("caption"));
    for (const auto& f : r.array("functional_points")) rec.functional_points.push_back(functional_point_from(f));
    for (const auto& g : r.array("grasp_points")) rec.grasp_points.push_back(grasp_point_from(g));
    for (const auto& g : r.array("verified_grasps")) rec.verified_grasps.push_back(grasp_pose_from(g));
    rec.placement = placement_from(r.child("placement"));

    const FieldReader prov = r.child("provenance");
    rec.provenance.seed = prov.unsigned_integer("seed");
    for (const auto& s : prov.array("stages")) {
        StageRecord stage;
        stage.stage = s.string("stage");
        try {
            stage.status = parse_stage_status(s.string("status"));
        } catch (const ValidationError& e) {
            throw ValidationError(s.path() + ".status", e.what());
        }
        stage.params_hash = s.string("params_hash");
        rec.provenance.stages.push_back(std::move(stage));
    }
    const FieldReader counts = prov.child("counts");
    rec.provenance.counts.proposals = counts.integer("proposals");
    rec.provenance.counts.after_proximity = counts.integer("after_proximity");
    rec.provenance.counts.candidates = counts.integer("candidates");
    rec.provenance.counts.verified = counts.integer("verified");
    const FieldReader failures = counts.child("failures");
    for (const auto& [key, value] : failures.node().items()) rec.provenance.counts.failures[key] = failures.integer(key);
    for (const auto& flag : prov.array("flags")) {
        if (!flag.node().is_string()) throw ParseError("field '" + flag.path() + "': expected a string");
        rec.provenance.flags.push_back(flag.node().get<std::string>());
    }

    for (const auto& [key, value] : r.node().items())
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) rec.extra[key] = value;
    return rec;
}

std::string manifest_text(const AssetRecord& record) { return to_json(record).dump(2) + "\n"; }

AssetRecord parse_manifest(std::string_view text, std::string_view source) {
    const Json doc = parse_json_text(text, source);
    if (!doc.is_object()) throw ParseError(std::string(source) + ": expected a JSON object");
    AssetRecord rec;
    try {
        rec = record_from(FieldReader(doc, ""));
    } catch (const ParseError& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
    validate(rec);
    return rec;
}

void save_manifest(const AssetRecord& record, const std::filesystem::path& path) {
    validate(record);
    write_file_atomic(path, manifest_text(record));
}

AssetRecord load_manifest(const std::filesystem::path& path) {
    return parse_manifest(read_text_file(path), path.string());
}

std::string grasp_list_text(const std::vector<GraspPose>& grasps) {
    Json j;
    j["grasps"] = array_of(grasps, [](const GraspPose& g) { return to_json(g); });
    return j.dump(2) + "\n";
}

std::vector<GraspPose> parse_grasp_list(std::string_view text, std::string_view source) {
    const Json doc = parse_json_text(text, source);
    std::vector<GraspPose> out;
    try {
        const FieldReader root(doc, "");
        for (const auto& g : root.array("grasps")) {
            out.push_back(grasp_pose_from(g));
            validate(out.back(), g.path());
        }
    } catch (const ParseError& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
    return out;
}

}  // namespace manitwin
