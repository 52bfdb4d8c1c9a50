#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manitwin/annotation.hpp"
#include "manitwin/asset.hpp"
#include "manitwin/geometry/sampling.hpp"
#include "manitwin/grasp_filter.hpp"
#include "manitwin/grasp_verify.hpp"
#include "manitwin/remote.hpp"

namespace manitwin {

namespace fs = std::filesystem;

/// Pipeline stages in execution order.
inline constexpr std::array<std::string_view, 15> kStages{
    "load",   "render", "gate",          "properties",     "rescale",          "caption",  "sample",
    "fps",    "select_points", "propose_grasps", "proximity_filter", "fps_7dof", "associate", "verify",
    "consolidate"};

inline constexpr int kDefaultRenderSize = 256;

struct PipelineConfig {
    fs::path input_dir;  // *.obj files; empty processes what the store already holds
    fs::path store_dir;
    std::string client_mode = "mock";
    MockConfig mock;
    RemoteConfig remote;
    std::uint64_t seed = 0;
    int workers = 1;

    int views = kDefaultViewCount;
    int render_size = kDefaultRenderSize;
    int surface_samples = static_cast<int>(kDefaultSurfaceSamples);
    int fps_k = static_cast<int>(kDefaultFpsCandidates);
    int max_proposals = kDefaultMaxProposals;
    double proximity_threshold = kDefaultProximityThreshold;
    int grasp_k = static_cast<int>(kDefaultGraspK);
    double rotation_weight = kDefaultRotationWeight;
    GripperModel gripper;
    VerifyParams verify;
};

/// Throws ArgumentError naming the first bad setting.
void validate(const PipelineConfig& config);

/// Layout of the file-tree store.
struct StorePaths {
    fs::path root;

    fs::path assets() const { return root / "assets"; }
    fs::path asset(const std::string& id) const { return assets() / id; }
    fs::path source(const std::string& id) const { return asset(id) / "source.obj"; }
    fs::path mesh(const std::string& id) const { return asset(id) / "mesh.obj"; }
    fs::path manifest(const std::string& id) const { return asset(id) / "manifest.json"; }
    fs::path stage_log(const std::string& id) const { return asset(id) / "stage_log.json"; }
    fs::path renders(const std::string& id) const { return asset(id) / "renders"; }
    fs::path render(const std::string& id, int k) const {
        return renders(id) / ("view_" + std::to_string(k) + ".png");
    }
    fs::path candidates(const std::string& id) const { return asset(id) / "candidates.json"; }
    fs::path verdicts(const std::string& id) const { return asset(id) / "verdicts.jsonl"; }
    fs::path work(const std::string& id) const { return asset(id) / "work"; }
};

/// Asset ids are file stems limited to [A-Za-z0-9_.-], not starting with '.'.
bool valid_asset_id(std::string_view id);

struct StageLogEntry {
    std::string stage;
    StageStatus status = StageStatus::Ok;
    std::string timestamp;  // UTC, ISO 8601
    std::string params_hash;
    std::string detail;  // reason for filtered/error

    bool operator==(const StageLogEntry&) const = default;
};

struct StageLog {
    std::string asset_id;
    std::uint64_t seed = 0;
    std::vector<StageLogEntry> entries;

    /// Status of the last entry, or nullopt for an empty log.
    std::optional<StageStatus> terminal() const;
    const StageLogEntry* find(std::string_view stage) const;
};

Json to_json(const StageLog& log);
StageLog stage_log_from(const FieldReader& r);
StageLog load_stage_log(const fs::path& path);

/// Per-stage parameter hashes, chained so that changing one stage's settings
/// (or the source mesh) invalidates it and everything after it.
std::vector<std::string> stage_hashes(const PipelineConfig& config, std::string_view asset_id,
                                      std::string_view source_bytes);

struct AssetOutcome {
    std::string asset_id;
    StageStatus status = StageStatus::Ok;
    std::string stage;   // last stage reached
    std::string detail;  // reason when not ok
    int executed = 0;    // stages run (not restored) this time
};

struct RunReport {
    std::vector<AssetOutcome> assets;  // sorted by id
    PipelineStats stats;
    int executed = 0;
};

/// Copies every *.obj under `input_dir` into the store as assets/<stem>/source.obj.
/// Unchanged files are left alone. Returns the ids seen, sorted; files with
/// invalid ids are skipped and reported through `rejected`.
std::vector<std::string> ingest(const fs::path& input_dir, const fs::path& store_dir,
                                std::vector<std::string>* rejected = nullptr);

/// Ids of every asset directory holding a source mesh, sorted.
std::vector<std::string> list_assets(const fs::path& store_dir);

/// Ingests (when an input directory is given), then runs every store asset
/// through the stages. Per-asset failures are recorded and the run continues;
/// a bad configuration throws before any work starts.
RunReport run_pipeline(const PipelineConfig& config);

/// Recounts statistics from persisted stage logs and manifests. Limits the
/// count to `ids` when given. Throws IntegrityError when a manifest claims
/// more verified grasps than candidates or its counts disagree with its
/// verified grasp list.
PipelineStats compute_stats(const fs::path& store_dir, const std::vector<std::string>* ids = nullptr);

}  // namespace manitwin
