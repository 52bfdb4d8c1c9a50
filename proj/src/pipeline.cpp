#include "manitwin/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <thread>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/mesh_io.hpp"
#include "manitwin/geometry/obb.hpp"
#include "manitwin/geometry/render.hpp"
#include "manitwin/geometry/sampling.hpp"
#include "manitwin/grasp_filter.hpp"
#include "manitwin/io_util.hpp"
#include "manitwin/manifest.hpp"

namespace manitwin {

namespace {

constexpr std::string_view kManifestFormat = "manitwin.asset/1";

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::size_t stage_index(std::string_view stage) {
    for (std::size_t i = 0; i < kStages.size(); ++i)
        if (kStages[i] == stage) return i;
    throw ArgumentError("unknown stage '" + std::string(stage) + "'");
}

Json fixture_json(const PipelineConfig& c, std::string_view asset_id) {
    const CaptionFixture* f = c.mock.fixtures.find(asset_id);
    if (!f) return nullptr;
    Json j{{"category", f->category}, {"color", f->color},       {"material", f->material},
           {"shape", f->shape},       {"function", f->function}};
    if (f->longest_axis_m) j["longest_axis_m"] = *f->longest_axis_m;
    return j;
}

// Settings each stage depends on, beyond its inputs.
Json stage_params(const PipelineConfig& c, std::size_t stage, std::string_view asset_id,
                  std::string_view source_bytes) {
    const bool mock = c.client_mode == "mock";
    const std::uint64_t seed = derive_seed(c.seed, asset_id);
    switch (stage) {
        case 0: return {{"source", hex64(fnv1a64(source_bytes))}};
        case 1: return {{"views", c.views}, {"size", c.render_size}};
        case 2:
            return {{"client", c.client_mode},
                    {"component_share", mock ? Json(c.mock.component_share) : Json(nullptr)},
                    {"degenerate_face_ratio", mock ? Json(c.mock.degenerate_face_ratio) : Json(nullptr)}};
        case 3:
            return {{"client", c.client_mode},
                    {"density", mock ? Json(c.mock.density) : Json(nullptr)},
                    {"fill_factor", mock ? Json(c.mock.fill_factor) : Json(nullptr)},
                    {"fixture", mock ? fixture_json(c, asset_id) : Json(nullptr)}};
        case 4: return Json::object();
        case 5: return {{"client", c.client_mode}, {"fixture", mock ? fixture_json(c, asset_id) : Json(nullptr)}};
        case 6: return {{"n", c.surface_samples}, {"seed", seed}};
        case 7: return {{"k", c.fps_k}};
        case 8:
            return {{"client", c.client_mode},
                    {"bounds",
                     {c.mock.bounds.min_functional, c.mock.bounds.max_functional, c.mock.bounds.min_grasp,
                      c.mock.bounds.max_grasp}}};
        case 9:
            return {{"client", c.client_mode},
                    {"max_n", c.max_proposals},
                    {"gripper", to_json(c.gripper)},
                    {"angle", mock ? Json(c.mock.antipodal_angle_deg) : Json(nullptr)},
                    {"contact_depth", mock ? Json(c.mock.contact_depth) : Json(nullptr)},
                    {"budget", mock ? Json(c.mock.pair_budget_per_grasp) : Json(nullptr)},
                    {"seed", seed}};
        case 10: return {{"threshold", c.proximity_threshold}};
        case 11: return {{"k", c.grasp_k}, {"rotation_weight", c.rotation_weight}};
        case 12: return Json::object();
        case 13:
            return {{"mu", c.verify.mu ? Json(*c.verify.mu) : Json(nullptr)},
                    {"squeeze_force", c.verify.squeeze_force ? Json(*c.verify.squeeze_force) : Json(nullptr)},
                    {"gravity", c.verify.slide.gravity},
                    {"acceleration", c.verify.slide.test_acceleration},
                    {"displacement_threshold", c.verify.slide.displacement_threshold},
                    {"gripper", to_json(c.gripper)}};
        case 14: return {{"format", kManifestFormat}};
    }
    throw ArgumentError("stage index out of range");
}

// Everything the stages hand to each other.
struct Work {
    std::string id;
    std::uint64_t seed = 0;
    TriMesh raw;
    std::vector<RenderView> views;
    GateResult gate;
    PropertyEstimate props;
    TriMesh mesh;
    double scale = 1.0;
    SemanticCaption caption;
    PointCloud cloud;
    std::vector<Index> fps_indices;
    PointCloud candidates;
    PointSelection selection;
    std::vector<GraspPose> proposals;
    std::vector<GraspPose> near;
    std::vector<GraspPose> chosen;
    std::vector<GraspPose> associated;
    std::vector<GraspPose> outcomes;
    AssetRecord record;

    AssetView view() const { return {id, &mesh_for_view(), views}; }
    // Annotation stages before rescaling look at the source geometry.
    const TriMesh& mesh_for_view() const { return mesh.num_vertices() > 0 ? mesh : raw; }
};

/// Stage not passing: the asset stops here with status `filtered`.
struct Filtered {
    std::string detail;
};

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump() + "\n"); }

Json read_json(const fs::path& path) { return parse_json_text(read_text_file(path), path.string()); }

void write_cloud(const fs::path& path, const PointCloud& cloud) {
    std::string bytes;
    const std::uint64_t n = static_cast<std::uint64_t>(cloud.size());
    bytes.append(reinterpret_cast<const char*>(&n), sizeof n);
    bytes.append(reinterpret_cast<const char*>(cloud.points.data()), sizeof(double) * 3 * n);
    bytes.append(reinterpret_cast<const char*>(cloud.normals.data()), sizeof(double) * 3 * n);
    write_file_atomic(path, bytes);
}

PointCloud read_cloud(const fs::path& path) {
    const std::string bytes = read_text_file(path);
    std::uint64_t n = 0;
    if (bytes.size() < sizeof n) throw ParseError(path.string() + ": truncated point cloud");
    std::memcpy(&n, bytes.data(), sizeof n);
    if (bytes.size() != sizeof n + 2 * 3 * n * sizeof(double))
        throw ParseError(path.string() + ": point cloud size mismatch");
    PointCloud c;
    c.points.resize(static_cast<Index>(n), 3);
    c.normals.resize(static_cast<Index>(n), 3);
    std::memcpy(c.points.data(), bytes.data() + sizeof n, sizeof(double) * 3 * n);
    std::memcpy(c.normals.data(), bytes.data() + sizeof n + sizeof(double) * 3 * n, sizeof(double) * 3 * n);
    return c;
}

std::vector<GraspPose> read_grasps(const fs::path& path) {
    return parse_grasp_list(read_text_file(path), path.string());
}

class AssetRunner {
public:
    AssetRunner(const PipelineConfig& config, const StorePaths& store, AnnotationClient& client, std::string id)
        : c_(config), store_(store), client_(client) {
        w_.id = std::move(id);
        w_.seed = derive_seed(config.seed, w_.id);
    }

    AssetOutcome run() {
        AssetOutcome out;
        out.asset_id = w_.id;
        std::string source;
        try {
            source = read_text_file(store_.source(w_.id));
        } catch (const Error& e) {
            out.status = StageStatus::Error;
            out.stage = "load";
            out.detail = e.what();
            return out;
        }
        hashes_ = stage_hashes(c_, w_.id, source);

        StageLog previous;
        if (fs::exists(store_.stage_log(w_.id))) {
            try {
                previous = load_stage_log(store_.stage_log(w_.id));
            } catch (const Error&) {
                previous = {};
            }
        }
        // Longest prefix of the old log that is still valid.
        std::size_t keep = 0;
        while (keep < previous.entries.size() && keep < kStages.size() &&
               previous.entries[keep].stage == kStages[keep] &&
               previous.entries[keep].params_hash == hashes_[keep] && reusable(previous.entries[keep]))
            ++keep;
        const bool finished = keep > 0 && keep == previous.entries.size() &&
                              (keep == kStages.size() || previous.entries[keep - 1].status != StageStatus::Ok) &&
                              (previous.entries[keep - 1].status != StageStatus::Ok ||
                               fs::exists(store_.manifest(w_.id)));
        if (finished) {
            const StageLogEntry& last = previous.entries[keep - 1];
            out.status = last.status;
            out.stage = last.stage;
            out.detail = last.detail;
            return out;
        }
        // Only fully ok stages can be restored from their checkpoints.
        while (keep > 0 && previous.entries[keep - 1].status != StageStatus::Ok) --keep;

        log_.asset_id = w_.id;
        log_.seed = w_.seed;
        log_.entries.assign(previous.entries.begin(), previous.entries.begin() + static_cast<std::ptrdiff_t>(keep));
        if (keep < kStages.size()) fs::remove(store_.manifest(w_.id));

        std::size_t stage = 0;
        try {
            for (; stage < keep; ++stage) restore(stage);
            for (; stage < kStages.size(); ++stage) {
                execute(stage);
                ++out.executed;
                record(stage, StageStatus::Ok, "");
            }
            out.status = StageStatus::Ok;
            out.stage = "consolidate";
        } catch (const Filtered& f) {
            ++out.executed;
            record(stage, StageStatus::Filtered, f.detail);
            out.status = StageStatus::Filtered;
            out.stage = std::string(kStages[stage]);
            out.detail = f.detail;
        } catch (const std::exception& e) {
            if (stage < keep) {
                // A checkpoint went missing or bad: drop it and everything after.
                log_.entries.resize(stage);
                write_json(store_.stage_log(w_.id), to_json(log_));
                out.status = StageStatus::Error;
                out.stage = std::string(kStages[stage]);
                out.detail = std::string("checkpoint unreadable: ") + e.what();
                return out;
            }
            ++out.executed;
            const bool transient = dynamic_cast<const TransportError*>(&e) != nullptr;
            out.detail = (transient ? "transient: " : "") + std::string(e.what());
            record(stage, StageStatus::Error, out.detail);
            out.status = StageStatus::Error;
            out.stage = std::string(kStages[stage]);
        }
        return out;
    }

private:
    const PipelineConfig& c_;
    const StorePaths& store_;
    AnnotationClient& client_;
    Work w_;
    std::vector<std::string> hashes_;
    StageLog log_;

    // Errors from the remote service may clear up; every other outcome is final.
    static bool reusable(const StageLogEntry& e) {
        return e.status != StageStatus::Error || e.detail.rfind("transient:", 0) != 0;
    }

    fs::path checkpoint(std::string_view stage, std::string_view ext = ".json") const {
        return store_.work(w_.id) / (std::string(stage) + std::string(ext));
    }

    void record(std::size_t stage, StageStatus status, const std::string& detail) {
        log_.entries.push_back({std::string(kStages[stage]), status, utc_timestamp(), hashes_[stage], detail});
        write_json(store_.stage_log(w_.id), to_json(log_));
    }

    void execute(std::size_t stage) {
        switch (stage) {
            case 0:
                w_.raw = load_mesh_file(store_.source(w_.id));
                validate_mesh(w_.raw);
                if (w_.raw.empty()) throw DegenerateMeshError("mesh has no faces");
                return;
            case 1: {
                w_.views = render_views(w_.raw, c_.views, c_.render_size, c_.render_size);
                fs::remove_all(store_.renders(w_.id));
                for (const RenderView& v : w_.views) write_png(v, store_.render(w_.id, v.view_index));
                return;
            }
            case 2: {
                w_.gate = client_.quality_gate(w_.view());
                write_json(checkpoint("gate"), to_json(w_.gate));
                if (!w_.gate.passed) {
                    std::string why;
                    for (GateReason r : w_.gate.reasons) why += (why.empty() ? "" : ",") + std::string(to_string(r));
                    throw Filtered{why};
                }
                return;
            }
            case 3:
                w_.props = client_.estimate_properties(w_.view());
                write_json(checkpoint("properties"), to_json(w_.props));
                return;
            case 4: {
                auto [mesh, factor] = rescale_to_dims(w_.raw, w_.props.physical.obb_dims(0));
                w_.mesh = std::move(mesh);
                w_.scale = factor;
                save_mesh_file(w_.mesh, store_.mesh(w_.id));
                write_json(checkpoint("rescale"), Json{{"scale", w_.scale}});
                return;
            }
            case 5:
                w_.caption = client_.caption(w_.view());
                validate(w_.caption);
                write_json(checkpoint("caption"), to_json(w_.caption));
                return;
            case 6:
                w_.cloud = surface_sample(w_.mesh, c_.surface_samples, derive_seed(w_.seed, "sample"));
                write_cloud(checkpoint("sample", ".bin"), w_.cloud);
                return;
            case 7:
                w_.fps_indices = farthest_point_sampling(w_.cloud, c_.fps_k, farthest_from_centroid(w_.cloud.points));
                w_.candidates = select_points(w_.cloud, w_.fps_indices);
                write_json(checkpoint("fps"), Json{{"indices", w_.fps_indices}});
                return;
            case 8:
                w_.selection = client_.select_points(w_.view(), w_.candidates);
                write_json(checkpoint("select_points"), to_json(w_.selection));
                return;
            case 9:
                w_.proposals = client_.propose_grasps(w_.view(), w_.cloud, c_.gripper, c_.max_proposals,
                                                      derive_seed(w_.seed, "propose_grasps"));
                write_file_atomic(checkpoint("propose_grasps"), grasp_list_text(w_.proposals));
                return;
            case 10: {
                std::vector<Vector3d> points;
                for (const auto& f : w_.selection.functional_points) points.push_back(f.position);
                for (const auto& g : w_.selection.grasp_points) points.push_back(g.position);
                w_.near = proximity_filter(w_.proposals, points, c_.proximity_threshold);
                write_file_atomic(checkpoint("proximity_filter"), grasp_list_text(w_.near));
                return;
            }
            case 11:
                w_.chosen = w_.near.empty() ? std::vector<GraspPose>{}
                                            : fps_7dof(w_.near, c_.grasp_k, c_.rotation_weight);
                write_file_atomic(checkpoint("fps_7dof"), grasp_list_text(w_.chosen));
                return;
            case 12:
                w_.associated =
                    associate_semantics(w_.chosen, w_.selection.functional_points, w_.selection.grasp_points);
                write_file_atomic(checkpoint("associate"), grasp_list_text(w_.associated));
                return;
            case 13:
                w_.outcomes = w_.associated;
                for (GraspPose& g : w_.outcomes)
                    g.verification = verify_grasp(w_.mesh, w_.props.physical, g, c_.gripper, c_.verify);
                write_file_atomic(store_.candidates(w_.id), grasp_list_text(w_.outcomes));
                return;
            case 14:
                consolidate();
                save_manifest(w_.record, store_.manifest(w_.id));
                return;
        }
    }

    void restore(std::size_t stage) {
        switch (stage) {
            case 0: w_.raw = load_mesh_file(store_.source(w_.id)); return;
            case 1:
                w_.views.clear();
                for (int k = 0; k < c_.views; ++k) {
                    RenderView v = decode_png(read_text_file(store_.render(w_.id, k)));
                    v.view_index = k;
                    v.camera = ring_camera(w_.raw, k, c_.views, v.width, v.height);
                    w_.views.push_back(std::move(v));
                }
                return;
            case 2: w_.gate = gate_result_from(FieldReader(read_json(checkpoint("gate")), "")); return;
            case 3:
                w_.props = property_estimate_from(FieldReader(read_json(checkpoint("properties")), ""));
                return;
            case 4:
                w_.mesh = load_mesh_file(store_.mesh(w_.id));
                w_.scale = read_json(checkpoint("rescale")).at("scale").get<double>();
                return;
            case 5: w_.caption = caption_from(FieldReader(read_json(checkpoint("caption")), "")); return;
            case 6: w_.cloud = read_cloud(checkpoint("sample", ".bin")); return;
            case 7:
                w_.fps_indices = read_json(checkpoint("fps")).at("indices").get<std::vector<Index>>();
                for (Index i : w_.fps_indices)
                    if (i < 0 || i >= w_.cloud.size()) throw ParseError("fps checkpoint index out of range");
                w_.candidates = select_points(w_.cloud, w_.fps_indices);
                return;
            case 8:
                w_.selection = point_selection_from(FieldReader(read_json(checkpoint("select_points")), ""));
                return;
            case 9: w_.proposals = read_grasps(checkpoint("propose_grasps")); return;
            case 10: w_.near = read_grasps(checkpoint("proximity_filter")); return;
            case 11: w_.chosen = read_grasps(checkpoint("fps_7dof")); return;
            case 12: w_.associated = read_grasps(checkpoint("associate")); return;
            case 13: w_.outcomes = read_grasps(store_.candidates(w_.id)); return;
            case 14: return;
        }
    }

    void consolidate() {
        AssetRecord& r = w_.record;
        r = {};
        r.asset_id = w_.id;
        r.mesh_ref = "mesh.obj";
        r.physical = w_.props.physical;
        r.caption = w_.caption;
        r.functional_points = w_.selection.functional_points;
        r.grasp_points = w_.selection.grasp_points;

        GraspCounts& counts = r.provenance.counts;
        counts.proposals = static_cast<std::int64_t>(w_.proposals.size());
        counts.after_proximity = static_cast<std::int64_t>(w_.near.size());
        counts.candidates = static_cast<std::int64_t>(w_.outcomes.size());
        for (const GraspPose& g : w_.outcomes) {
            if (g.verification && g.verification->passed)
                r.verified_grasps.push_back(g);
            else if (g.verification)
                ++counts.failures[std::string(to_string(g.verification->failure_reason))];
        }
        counts.verified = static_cast<std::int64_t>(r.verified_grasps.size());

        const Vector3d center = projected_centroid(w_.mesh, kWorldUp);
        r.placement.placement_position = Vector3d(center.x(), center.y(), w_.mesh.vertices.col(2).minCoeff());
        r.placement.placement_orientation = Quaterniond::Identity();
        r.placement.collision_radius = collision_radius(w_.mesh, kWorldUp);

        r.provenance.seed = w_.seed;
        for (std::size_t k = 0; k < kStages.size(); ++k)
            r.provenance.stages.push_back({std::string(kStages[k]), StageStatus::Ok, hashes_[k]});
        r.provenance.flags = w_.props.flags;
        r.provenance.flags.push_back("collision_center:projected_centroid");
        r.provenance.flags.push_back("quasi_static_verification");
        if (c_.client_mode == "mock") r.provenance.flags.push_back("mock_annotation");
        validate_against_mesh(r, w_.mesh);
    }
};

}  // namespace

void validate(const PipelineConfig& c) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ArgumentError("pipeline config: " + what);
    };
    require(!c.store_dir.empty(), "store directory is required");
    require(c.input_dir.empty() || fs::is_directory(c.input_dir),
            "input directory '" + c.input_dir.string() + "' does not exist");
    require(c.client_mode == "mock" || c.client_mode == "remote", "client mode must be mock or remote");
    require(c.workers >= 1, "workers must be >= 1");
    require(c.views >= 1, "views must be >= 1");
    require(c.render_size >= 8, "render size must be >= 8");
    require(c.fps_k >= 1, "fps k must be >= 1");
    require(c.surface_samples >= c.fps_k, "surface samples must be >= fps k");
    require(c.max_proposals >= 1, "max proposals must be >= 1");
    require(c.proximity_threshold > 0.0, "proximity threshold must be > 0");
    require(c.grasp_k >= 1, "grasp k must be >= 1");
    require(c.rotation_weight >= 0.0, "rotation weight must be >= 0");
    require(!c.verify.mu || *c.verify.mu >= 0.0, "mu must be >= 0");
    require(!c.verify.squeeze_force || *c.verify.squeeze_force > 0.0, "squeeze force must be > 0");
    require(c.verify.slide.displacement_threshold > 0.0, "displacement threshold must be > 0");
    try {
        validate(c.gripper);
    } catch (const ValidationError& e) {
        throw ArgumentError(std::string("pipeline config: ") + e.what());
    }
}

bool valid_asset_id(std::string_view id) {
    if (id.empty() || id.front() == '.' || id.size() > 128) return false;
    return std::all_of(id.begin(), id.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
               ch == '-' || ch == '.';
    });
}

std::optional<StageStatus> StageLog::terminal() const {
    if (entries.empty()) return std::nullopt;
    return entries.back().status;
}

const StageLogEntry* StageLog::find(std::string_view stage) const {
    for (const auto& e : entries)
        if (e.stage == stage) return &e;
    return nullptr;
}

Json to_json(const StageLog& log) {
    Json entries = Json::array();
    for (const auto& e : log.entries) {
        Json j{{"stage", e.stage},
               {"status", to_string(e.status)},
               {"timestamp", e.timestamp},
               {"params_hash", e.params_hash}};
        if (!e.detail.empty()) j["detail"] = e.detail;
        entries.push_back(std::move(j));
    }
    return Json{{"asset_id", log.asset_id}, {"seed", log.seed}, {"entries", std::move(entries)}};
}

StageLog stage_log_from(const FieldReader& r) {
    StageLog log;
    log.asset_id = r.string("asset_id");
    log.seed = r.unsigned_integer("seed");
    std::size_t last = 0;
    for (const FieldReader& e : r.array("entries")) {
        StageLogEntry entry;
        entry.stage = e.string("stage");
        std::size_t idx = 0;
        try {
            idx = stage_index(entry.stage);
        } catch (const ArgumentError& err) {
            e.fail("stage", err.what());
        }
        if (!log.entries.empty() && idx <= last) e.fail("stage", "stages out of pipeline order");
        if (!log.entries.empty() && log.entries.back().status != StageStatus::Ok)
            e.fail("stage", "entry after a terminal status");
        last = idx;
        try {
            entry.status = parse_stage_status(e.string("status"));
        } catch (const ValidationError& err) {
            e.fail("status", err.what());
        }
        entry.timestamp = e.string("timestamp");
        entry.params_hash = e.string("params_hash");
        if (e.has("detail")) entry.detail = e.string("detail");
        log.entries.push_back(std::move(entry));
    }
    return log;
}

StageLog load_stage_log(const fs::path& path) {
    return stage_log_from(FieldReader(parse_json_text(read_text_file(path), path.string()), ""));
}

std::vector<std::string> stage_hashes(const PipelineConfig& config, std::string_view asset_id,
                                      std::string_view source_bytes) {
    std::vector<std::string> out;
    std::uint64_t h = fnv1a64(asset_id);
    for (std::size_t k = 0; k < kStages.size(); ++k) {
        h = fnv1a64(std::string(kStages[k]) + "|" + stage_params(config, k, asset_id, source_bytes).dump(), h);
        out.push_back(hex64(h));
    }
    return out;
}

std::vector<std::string> ingest(const fs::path& input_dir, const fs::path& store_dir,
                                std::vector<std::string>* rejected) {
    if (!fs::is_directory(input_dir))
        throw ArgumentError("ingest: '" + input_dir.string() + "' is not a directory");
    const StorePaths store{store_dir};
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".obj") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<std::string> ids;
    for (const fs::path& f : files) {
        const std::string id = f.stem().string();
        if (!valid_asset_id(id)) {
            if (rejected) rejected->push_back(f.string());
            continue;
        }
        std::string bytes;
        try {
            bytes = read_text_file(f);
        } catch (const Error&) {
            if (rejected) rejected->push_back(f.string());
            continue;
        }
        const fs::path dst = store.source(id);
        bool same = false;
        if (fs::exists(dst)) {
            try {
                same = read_text_file(dst) == bytes;
            } catch (const Error&) {
            }
        }
        if (!same) write_file_atomic(dst, bytes);
        ids.push_back(id);
    }
    return ids;
}

std::vector<std::string> list_assets(const fs::path& store_dir) {
    const StorePaths store{store_dir};
    std::vector<std::string> ids;
    if (!fs::is_directory(store.assets())) return ids;
    for (const auto& entry : fs::directory_iterator(store.assets())) {
        const std::string id = entry.path().filename().string();
        if (entry.is_directory() && valid_asset_id(id) && fs::exists(store.source(id))) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

RunReport run_pipeline(const PipelineConfig& config) {
    validate(config);
    const std::shared_ptr<AnnotationClient> client = make_client(config.client_mode, config.mock, config.remote);
    const StorePaths store{config.store_dir};
    fs::create_directories(store.assets());

    if (!config.input_dir.empty()) ingest(config.input_dir, config.store_dir);
    const std::vector<std::string> ids = list_assets(config.store_dir);

    RunReport report;
    report.assets.resize(ids.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < ids.size(); i = next++)
            report.assets[i] = AssetRunner(config, store, *client, ids[i]).run();
    };
    const int n_threads = std::min<int>(config.workers, static_cast<int>(std::max<std::size_t>(ids.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& a : report.assets) report.executed += a.executed;
    report.stats = compute_stats(config.store_dir, &ids);
    return report;
}

PipelineStats compute_stats(const fs::path& store_dir, const std::vector<std::string>* ids) {
    const StorePaths store{store_dir};
    const std::vector<std::string> all = ids ? *ids : list_assets(store_dir);
    PipelineStats s;
    for (const std::string& id : all) {
        ++s.ingested;
        StageLog log;
        if (fs::exists(store.stage_log(id))) log = load_stage_log(store.stage_log(id));
        const StageLogEntry* gate = log.find("gate");
        if (gate && gate->status == StageStatus::Ok) ++s.gated;
        if (log.terminal() == StageStatus::Error) ++s.errors;
        if (log.terminal() != StageStatus::Ok || !log.find("consolidate") || !fs::exists(store.manifest(id)))
            continue;

        // Raw counts, so an inconsistent manifest is reported rather than rejected by the parser.
        const Json m = parse_json_text(read_text_file(store.manifest(id)), store.manifest(id).string());
        const FieldReader counts = FieldReader(m, "").child("provenance").child("counts");
        const std::int64_t candidates = counts.integer("candidates");
        const std::int64_t verified = counts.integer("verified");
        if (verified > candidates)
            throw IntegrityError(id + ": " + std::to_string(verified) + " verified grasps but only " +
                                 std::to_string(candidates) + " candidates");
        const auto listed = static_cast<std::int64_t>(m.contains("verified_grasps") ? m["verified_grasps"].size() : 0);
        if (listed != verified)
            throw IntegrityError(id + ": manifest lists " + std::to_string(listed) + " verified grasps but counts " +
                                 std::to_string(verified));
        ++s.annotated;
        s.proposals += counts.integer("proposals");
        s.after_proximity += counts.integer("after_proximity");
        s.candidates += candidates;
        s.verified += verified;
    }
    return s;
}

}  // namespace manitwin
