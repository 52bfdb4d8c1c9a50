#include "manitwin/annotation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/mesh_io.hpp"
#include "manitwin/geometry/obb.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/geometry/sampling.hpp"
#include "manitwin/io_util.hpp"

namespace manitwin {

namespace {

constexpr std::array<std::pair<GateReason, std::string_view>, 2> kGateReasons{{
    {GateReason::NotSingleObject, "not_single_object"},
    {GateReason::LowVisualQuality, "low_visual_quality"},
}};

const TriMesh& require_mesh(const AssetView& asset, std::string_view stage) {
    if (asset.mesh == nullptr) throw ArgumentError(std::string(stage) + ": no mesh for asset '" + asset.asset_id + "'");
    return *asset.mesh;
}

int find_root(std::vector<int>& parent, int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
    }
    return x;
}

}  // namespace

std::string_view to_string(GateReason r) {
    for (const auto& [value, name] : kGateReasons)
        if (value == r) return name;
    return "unknown";
}

GateReason parse_gate_reason(std::string_view name) {
    for (const auto& [value, n] : kGateReasons)
        if (n == name) return value;
    throw ValidationError("reasons", "unknown gate reason '" + std::string(name) + "'");
}

// --- fixtures -------------------------------------------------------------

void FixtureTable::add(std::string key, CaptionFixture entry) { entries_[std::move(key)] = std::move(entry); }

const CaptionFixture* FixtureTable::find(std::string_view asset_id) const {
    if (auto it = entries_.find(asset_id); it != entries_.end()) return &it->second;
    const CaptionFixture* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, entry] : entries_) {
        if (key.empty() || key.back() != '*') continue;
        const std::string_view prefix(key.data(), key.size() - 1);
        if (asset_id.starts_with(prefix) && (best == nullptr || prefix.size() > best_len)) {
            best = &entry;
            best_len = prefix.size();
        }
    }
    return best;
}

FixtureTable FixtureTable::from_json(const Json& j) {
    FixtureTable table;
    const FieldReader root(j, "");
    if (!j.is_object()) root.fail("", "expected an object of fixtures");
    for (const auto& [key, value] : j.items()) {
        const FieldReader r = root.child(key);
        CaptionFixture f;
        f.category = r.string("category");
        f.color = r.string("color");
        f.material = r.string("material");
        f.shape = r.string("shape");
        f.function = r.string("function");
        if (r.has("longest_axis_m")) {
            f.longest_axis_m = r.number("longest_axis_m");
            if (!(*f.longest_axis_m > 0.0)) r.fail("longest_axis_m", "must be positive");
        }
        table.add(key, std::move(f));
    }
    return table;
}

FixtureTable FixtureTable::load(const std::string& path) {
    return from_json(parse_json_text(read_text_file(path), path));
}

Json FixtureTable::to_json() const {
    Json j = Json::object();
    for (const auto& [key, f] : entries_) {
        Json e{{"category", f.category},
               {"color", f.color},
               {"material", f.material},
               {"shape", f.shape},
               {"function", f.function}};
        if (f.longest_axis_m) e["longest_axis_m"] = *f.longest_axis_m;
        j[key] = std::move(e);
    }
    return j;
}

double friction_for_material(std::string_view material) {
    static const std::array<std::pair<std::string_view, double>, 9> table{{
        {"plastic", 0.3},
        {"rubber", 0.5},
        {"wood", 0.4},
        {"metal", 0.25},
        {"glass", 0.2},
        {"ceramic", 0.35},
        {"fabric", 0.6},
        {"paper", 0.4},
        {"cardboard", 0.45},
    }};
    for (const auto& [name, mu] : table)
        if (name == material) return mu;
    return 0.4;
}

std::string size_bucket(double longest_axis_m) {
    if (longest_axis_m < 0.1) return "small";
    if (longest_axis_m < 0.25) return "medium";
    return "large";
}

// --- geometry helpers ---------------------------------------------------------

std::vector<int> face_components(const TriMesh& mesh, int* count) {
    // Weld vertices by exact position so split-vertex exports still connect.
    std::map<std::array<double, 3>, int> welded;
    std::vector<int> weld_id(static_cast<std::size_t>(mesh.num_vertices()));
    for (Index v = 0; v < mesh.num_vertices(); ++v) {
        const std::array<double, 3> key{mesh.vertices(v, 0), mesh.vertices(v, 1), mesh.vertices(v, 2)};
        weld_id[static_cast<std::size_t>(v)] = welded.emplace(key, static_cast<int>(welded.size())).first->second;
    }
    std::vector<int> parent(welded.size());
    std::iota(parent.begin(), parent.end(), 0);
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const int a = find_root(parent, weld_id[static_cast<std::size_t>(mesh.faces(f, 0))]);
        for (int c = 1; c < 3; ++c) {
            const int b = find_root(parent, weld_id[static_cast<std::size_t>(mesh.faces(f, c))]);
            parent[static_cast<std::size_t>(b)] = a;
        }
    }
    std::map<int, int> label;
    std::vector<int> out(static_cast<std::size_t>(mesh.num_faces()));
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const int root = find_root(parent, weld_id[static_cast<std::size_t>(mesh.faces(f, 0))]);
        out[static_cast<std::size_t>(f)] = label.emplace(root, static_cast<int>(label.size())).first->second;
    }
    if (count) *count = static_cast<int>(label.size());
    return out;
}

Quaterniond grasp_orientation(const Vector3d& jaw_axis, const Vector3d& approach) {
    const Vector3d x = jaw_axis.normalized();
    const Vector3d z = (approach - approach.dot(x) * x).normalized();
    Matrix3d r;
    r.col(0) = x;
    r.col(1) = z.cross(x);
    r.col(2) = z;
    Quaterniond q(r);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    return q;
}

// --- mock client ----------------------------------------------------------------

MockAnnotationClient::MockAnnotationClient(MockConfig config) : config_(std::move(config)) {}

GateResult MockAnnotationClient::quality_gate(const AssetView& asset) {
    const TriMesh& mesh = require_mesh(asset, "quality_gate");
    if (asset.views.empty()) throw ArgumentError("quality_gate: no rendered views");
    if (mesh.num_faces() == 0) throw DegenerateMeshError("quality_gate: mesh has no faces");

    GateResult result;
    int n_components = 0;
    const std::vector<int> component = face_components(mesh, &n_components);
    std::vector<double> volume(static_cast<std::size_t>(n_components), 0.0);
    std::vector<double> area(static_cast<std::size_t>(n_components), 0.0);
    Index degenerate = 0;
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const auto c = static_cast<std::size_t>(component[static_cast<std::size_t>(f)]);
        volume[c] += mesh.corner(f, 0).dot(mesh.corner(f, 1).cross(mesh.corner(f, 2))) / 6.0;
        const double a = face_area(mesh, f);
        area[c] += a;
        if (a < kDegenerateFaceArea) ++degenerate;
    }
    for (double& v : volume) v = std::abs(v);
    const double total_volume = std::accumulate(volume.begin(), volume.end(), 0.0);
    const std::vector<double>& share_of = total_volume > 1e-15 ? volume : area;
    const double total = std::accumulate(share_of.begin(), share_of.end(), 0.0);
    const auto significant = std::count_if(share_of.begin(), share_of.end(),
                                           [&](double x) { return total > 0.0 && x / total > config_.component_share; });
    if (significant > 1) result.reasons.push_back(GateReason::NotSingleObject);

    const double degenerate_ratio = static_cast<double>(degenerate) / static_cast<double>(mesh.num_faces());
    if (degenerate_ratio > config_.degenerate_face_ratio) result.reasons.push_back(GateReason::LowVisualQuality);

    result.passed = result.reasons.empty();
    return result;
}

PropertyEstimate MockAnnotationClient::estimate_properties(const AssetView& asset) {
    const TriMesh& mesh = require_mesh(asset, "estimate_properties");
    const OrientedBoundingBox obb = compute_obb(mesh);
    const CaptionFixture* fixture = config_.fixtures.find(asset.asset_id);

    PropertyEstimate est;
    Vector3d dims = obb.dims();
    if (!(dims(0) > 0.0)) throw DegenerateMeshError("estimate_properties: mesh has zero extent");
    const double scale = fixture && fixture->longest_axis_m ? *fixture->longest_axis_m / dims(0) : 1.0;
    dims *= scale;
    constexpr double kMinThickness = 1e-4;
    if (dims(2) < kMinThickness) {
        dims(2) = kMinThickness;
        if (dims(1) < kMinThickness) dims(1) = kMinThickness;
        est.flags.push_back("obb_thickness_clamped");
    }

    double volume = signed_volume(mesh) * scale * scale * scale;
    if (!(volume > 0.0)) {
        volume = dims.prod() * config_.fill_factor;
        est.flags.push_back("mass_from_obb_fill");
    }
    est.physical.obb_dims = dims;
    est.physical.mass = volume * config_.density;
    if (fixture) {
        est.physical.friction = friction_for_material(fixture->material);
    } else {
        est.physical.friction = friction_for_material("");
        est.flags.push_back("friction_default");
    }
    return est;
}

SemanticCaption MockAnnotationClient::caption(const AssetView& asset) {
    const TriMesh& mesh = require_mesh(asset, "caption");
    const CaptionFixture* f = config_.fixtures.find(asset.asset_id);
    if (!f) throw NotFoundError("caption: no fixture entry for asset '" + asset.asset_id + "'");
    return SemanticCaption{f->category, f->color, f->material, size_bucket(compute_obb(mesh).dims()(0)), f->shape,
                           f->function};
}

PointSelection MockAnnotationClient::select_points(const AssetView& asset, const PointCloud& candidates) {
    const TriMesh& mesh = require_mesh(asset, "select_points");
    const SelectionBounds& b = config_.bounds;
    if (b.min_functional < 0 || b.min_grasp < 0 || b.max_functional < b.min_functional || b.max_grasp < b.min_grasp)
        throw ArgumentError("select_points: inconsistent selection bounds");
    const Index n = candidates.size();
    const Index needed = std::max<Index>(4, b.min_functional + b.min_grasp);
    if (n < needed)
        throw ArgumentError("select_points: " + std::to_string(n) + " candidates, need at least " +
                            std::to_string(needed));

    std::vector<char> used(static_cast<std::size_t>(n), 0);
    PointSelection sel;

    // Functional points: extremes along the asset axes, top first.
    struct Extreme {
        int axis;
        double sign;
        const char* label;
        const char* rationale;
    };
    static constexpr std::array<Extreme, 6> kExtremes{{
        {2, 1.0, "top", "highest candidate along the up axis"},
        {2, -1.0, "bottom", "lowest candidate along the up axis"},
        {0, 1.0, "side", "extreme candidate along +x"},
        {0, -1.0, "side", "extreme candidate along -x"},
        {1, 1.0, "side", "extreme candidate along +y"},
        {1, -1.0, "side", "extreme candidate along -y"},
    }};
    auto add_functional = [&](Index i, const char* label, const char* rationale) {
        used[static_cast<std::size_t>(i)] = 1;
        FunctionalPoint p;
        p.id = static_cast<int>(sel.functional_points.size());
        p.position = candidates.point(i);
        p.function_label = label;
        p.confidence = 1.0 - 0.1 * static_cast<double>(sel.functional_points.size());
        p.rationale = rationale;
        sel.functional_points.push_back(std::move(p));
        sel.functional_candidates.push_back(i);
    };
    // Leave room for the minimum number of grasp points.
    const Index functional_cap = std::min<Index>(b.max_functional, n - b.min_grasp);
    for (const Extreme& e : kExtremes) {
        if (static_cast<Index>(sel.functional_points.size()) >= functional_cap) break;
        Index best = -1;
        for (Index i = 0; i < n; ++i)
            if (best < 0 || e.sign * candidates.points(i, e.axis) > e.sign * candidates.points(best, e.axis)) best = i;
        if (!used[static_cast<std::size_t>(best)]) add_functional(best, e.label, e.rationale);
    }
    for (Index i = 0; i < n && static_cast<int>(sel.functional_points.size()) < b.min_functional; ++i)
        if (!used[static_cast<std::size_t>(i)]) add_functional(i, "surface", "fills the minimum functional count");

    // Grasp points: unused candidates nearest the volume centroid.
    const Vector3d centroid = volume_centroid(mesh);
    std::vector<Index> order;
    for (Index i = 0; i < n; ++i)
        if (!used[static_cast<std::size_t>(i)]) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index c) {
        return (candidates.point(a) - centroid).squaredNorm() < (candidates.point(c) - centroid).squaredNorm();
    });
    static constexpr std::array<GraspType, 3> kTypes{GraspType::ParallelJaw, GraspType::Power, GraspType::Pinch};
    static constexpr std::array<const char*, 3> kScenarios{"pick up and place", "lift and carry", "fine repositioning"};
    const auto n_grasp = std::min<std::size_t>(order.size(), static_cast<std::size_t>(b.max_grasp));
    if (static_cast<int>(n_grasp) < b.min_grasp)
        throw ArgumentError("select_points: not enough candidates left for grasp points");
    for (std::size_t k = 0; k < n_grasp; ++k) {
        GraspPoint g;
        g.id = static_cast<int>(k);
        g.position = candidates.point(order[k]);
        g.grasp_type = kTypes[k % kTypes.size()];
        g.use_scenario = kScenarios[k % kScenarios.size()];
        sel.grasp_points.push_back(std::move(g));
        sel.grasp_candidates.push_back(order[k]);
    }
    return sel;
}

std::vector<AntipodalPair> sample_antipodal_pairs(const PointCloud& cloud, const GripperModel& gripper,
                                                  double angle_deg, int max_n, std::uint64_t budget, Rng& rng) {
    if (!cloud.has_normals()) throw ArgumentError("antipodal sampling needs normals");
    std::vector<AntipodalPair> out;
    const Index n = cloud.size();
    if (n < 2) return out;
    const double cos_limit = std::cos(angle_deg * std::numbers::pi / 180.0);
    for (std::uint64_t trial = 0; trial < budget && static_cast<int>(out.size()) < max_n; ++trial) {
        const auto i = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
        if (i == j) continue;
        const Vector3d d = cloud.point(j) - cloud.point(i);
        const double width = d.norm();
        if (width > gripper.max_opening || width == 0.0) continue;
        const double alignment = std::clamp(-cloud.normal(i).dot(cloud.normal(j)), -1.0, 1.0);
        if (alignment < cos_limit) continue;
        if (!(cloud.normal(i).dot(-d) > 0.0)) continue;
        out.push_back({i, j, alignment});
    }
    return out;
}

std::vector<GraspPose> MockAnnotationClient::propose_grasps(const AssetView& /*asset*/, const PointCloud& cloud,
                                                            const GripperModel& gripper, int max_n,
                                                            std::uint64_t seed) {
    if (max_n < 1) throw ArgumentError("propose_grasps: max_n must be >= 1");
    if (!cloud.has_normals()) throw ArgumentError("propose_grasps: cloud has no normals");
    std::vector<GraspPose> out;
    if (cloud.size() < 2) return out;

    const Vector3d centroid = cloud.points.colwise().mean().transpose();
    const double depth = gripper.finger_length / 2.0 - config_.contact_depth;
    const std::uint64_t budget =
        static_cast<std::uint64_t>(config_.pair_budget_per_grasp) * static_cast<std::uint64_t>(max_n);

    Rng rng(seed);
    const auto pairs = sample_antipodal_pairs(cloud, gripper, config_.antipodal_angle_deg, max_n, budget, rng);
    // Degenerate approach directions draw from their own stream so the pair
    // sequence does not depend on them.
    Rng approach_rng(splitmix64(seed));
    for (const AntipodalPair& pair : pairs) {
        const Vector3d pi = cloud.point(pair.i);
        const Vector3d pj = cloud.point(pair.j);
        // Close along the bisector of the two inward normals rather than the
        // chord, so tilted pairs still squeeze square to the surface.
        const Vector3d x = (cloud.normal(pair.j) - cloud.normal(pair.i)).normalized();
        const Vector3d mid = 0.5 * (pi + pj);
        Vector3d outward = mid - centroid;
        outward -= outward.dot(x) * x;
        if (outward.norm() < 1e-9) {
            const auto [u, v] = detail::complete_basis<double>(x);
            const double theta = 2.0 * std::numbers::pi * uniform01(approach_rng);
            outward = std::cos(theta) * u + std::sin(theta) * v;
        }
        const Vector3d approach = -outward.normalized();

        GraspPose g;
        g.orientation = grasp_orientation(x, approach);
        g.position = mid - depth * approach;
        g.confidence = pair.alignment;
        out.push_back(std::move(g));
    }
    return out;
}

// --- wire format ----------------------------------------------------------------

namespace {

Json triples_json(const auto& m) {
    Json arr = Json::array();
    for (Index i = 0; i < m.rows(); ++i) arr.push_back(Json::array({m(i, 0), m(i, 1), m(i, 2)}));
    return arr;
}

template <typename Matrix>
Matrix triples_from(const FieldReader& r, std::string_view key) {
    const auto rows = r.array(key);
    Matrix m(static_cast<Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Json& e = rows[i].node();
        if (!e.is_array() || e.size() != 3 || !std::all_of(e.begin(), e.end(), [](const Json& x) { return x.is_number(); }))
            rows[i].fail("", "expected an array of 3 numbers");
        for (int c = 0; c < 3; ++c) m(static_cast<Index>(i), c) = e[static_cast<std::size_t>(c)].get<typename Matrix::Scalar>();
    }
    return m;
}

std::vector<Index> indices_from(const FieldReader& r, std::string_view key) {
    std::vector<Index> out;
    for (const auto& e : r.array(key)) {
        if (!e.node().is_number_integer()) e.fail("", "expected an integer");
        out.push_back(e.node().get<Index>());
    }
    return out;
}

}  // namespace

Json to_json(const GateResult& g) {
    Json reasons = Json::array();
    for (GateReason r : g.reasons) reasons.push_back(to_string(r));
    return Json{{"passed", g.passed}, {"reasons", std::move(reasons)}};
}

GateResult gate_result_from(const FieldReader& r) {
    GateResult g;
    g.passed = r.boolean("passed");
    for (const auto& e : r.array("reasons")) {
        if (!e.node().is_string()) e.fail("", "expected a string");
        try {
            g.reasons.push_back(parse_gate_reason(e.node().get<std::string>()));
        } catch (const ValidationError& err) {
            e.fail("", err.what());
        }
    }
    if (g.passed != g.reasons.empty()) r.fail("passed", "must be true exactly when reasons is empty");
    return g;
}

Json to_json(const PropertyEstimate& p) { return Json{{"physical", to_json(p.physical)}, {"flags", p.flags}}; }

PropertyEstimate property_estimate_from(const FieldReader& r) {
    PropertyEstimate p;
    p.physical = physical_from(r.child("physical"));
    for (const auto& e : r.array("flags")) {
        if (!e.node().is_string()) e.fail("", "expected a string");
        p.flags.push_back(e.node().get<std::string>());
    }
    return p;
}

Json to_json(const PointSelection& s) {
    Json j;
    j["functional_points"] = Json::array();
    for (const auto& p : s.functional_points) j["functional_points"].push_back(to_json(p));
    j["grasp_points"] = Json::array();
    for (const auto& p : s.grasp_points) j["grasp_points"].push_back(to_json(p));
    j["functional_candidates"] = s.functional_candidates;
    j["grasp_candidates"] = s.grasp_candidates;
    return j;
}

PointSelection point_selection_from(const FieldReader& r) {
    PointSelection s;
    for (const auto& e : r.array("functional_points")) s.functional_points.push_back(functional_point_from(e));
    for (const auto& e : r.array("grasp_points")) s.grasp_points.push_back(grasp_point_from(e));
    s.functional_candidates = indices_from(r, "functional_candidates");
    s.grasp_candidates = indices_from(r, "grasp_candidates");
    if (s.functional_candidates.size() != s.functional_points.size())
        r.fail("functional_candidates", "length differs from functional_points");
    if (s.grasp_candidates.size() != s.grasp_points.size())
        r.fail("grasp_candidates", "length differs from grasp_points");
    return s;
}

Json mesh_to_json(const TriMesh& mesh) {
    return Json{{"vertices", triples_json(mesh.vertices)}, {"faces", triples_json(mesh.faces)}};
}

TriMesh mesh_from(const FieldReader& r) {
    TriMesh mesh;
    mesh.vertices = triples_from<Points3<double>>(r, "vertices");
    mesh.faces = triples_from<Triangles>(r, "faces");
    try {
        validate_mesh(mesh);
    } catch (const Error& e) {
        r.fail("faces", e.what());
    }
    return mesh;
}

Json cloud_to_json(const PointCloud& cloud) {
    Json j{{"points", triples_json(cloud.points)}};
    if (cloud.has_normals()) j["normals"] = triples_json(cloud.normals);
    return j;
}

PointCloud cloud_from(const FieldReader& r) {
    PointCloud cloud;
    cloud.points = triples_from<Points3<double>>(r, "points");
    if (r.has("normals")) {
        cloud.normals = triples_from<Points3<double>>(r, "normals");
        if (cloud.normals.rows() != cloud.points.rows()) r.fail("normals", "length differs from points");
    }
    return cloud;
}

}  // namespace manitwin
