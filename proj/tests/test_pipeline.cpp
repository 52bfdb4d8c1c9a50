#include <doctest.h>

#include <fstream>
#include <map>

#include <unistd.h>

#include "manitwin/errors.hpp"
#include "manitwin/fixtures.hpp"
#include "manitwin/geometry/mesh_io.hpp"
#include "manitwin/io_util.hpp"
#include "manitwin/manifest.hpp"
#include "manitwin/pipeline.hpp"
#include "support.hpp"

using namespace manitwin;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("manitwin_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

PipelineConfig config_for(const fs::path& root, const FixtureBatch& batch, std::uint64_t seed = 7) {
    PipelineConfig c;
    c.input_dir = root / "in";
    c.store_dir = root / "store";
    c.mock.fixtures = batch.table;
    c.seed = seed;
    c.render_size = 64;
    return c;
}

std::map<std::string, std::string> manifests(const fs::path& store) {
    std::map<std::string, std::string> out;
    for (const auto& id : list_assets(store)) {
        const fs::path p = StorePaths{store}.manifest(id);
        if (fs::exists(p)) out[id] = read_text_file(p);
    }
    return out;
}

// Recount straight from the manifest text, sharing nothing with compute_stats.
struct Recount {
    long ingested = 0, annotated = 0, proposals = 0, after = 0, candidates = 0, verified = 0;
};

Recount recount(const fs::path& store) {
    Recount r;
    for (const auto& entry : fs::directory_iterator(store / "assets")) {
        if (!fs::exists(entry.path() / "source.obj")) continue;
        ++r.ingested;
        if (!fs::exists(entry.path() / "manifest.json")) continue;
        std::ifstream in(entry.path() / "manifest.json");
        const Json m = Json::parse(in);
        const Json& c = m["provenance"]["counts"];
        ++r.annotated;
        r.proposals += c["proposals"].get<long>();
        r.after += c["after_proximity"].get<long>();
        r.candidates += c["candidates"].get<long>();
        r.verified += static_cast<long>(m["verified_grasps"].size());
    }
    return r;
}

}  // namespace

TEST_CASE("fifty fixture assets: gate counts, rates, invariants, idempotent re-run") {
    TempDir tmp("batch50");
    const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 50, 10, 3);
    PipelineConfig cfg = config_for(tmp.path, batch);
    cfg.workers = 2;
    const RunReport first = run_pipeline(cfg);

    CHECK(first.stats.ingested == 50);
    CHECK(first.stats.gated == 40);
    CHECK(first.stats.annotated == 40);
    CHECK(first.stats.errors == 0);
    for (const AssetOutcome& a : first.assets) {
        const bool should_fail =
            std::find(batch.gate_failures.begin(), batch.gate_failures.end(), a.asset_id) != batch.gate_failures.end();
        CHECK(a.status == (should_fail ? StageStatus::Filtered : StageStatus::Ok));
        if (should_fail) CHECK(a.detail == "not_single_object");
    }

    const Recount r = recount(cfg.store_dir);
    CHECK(r.ingested == first.stats.ingested);
    CHECK(r.annotated == first.stats.annotated);
    CHECK(r.proposals == first.stats.proposals);
    CHECK(r.after == first.stats.after_proximity);
    CHECK(r.candidates == first.stats.candidates);
    CHECK(r.verified == first.stats.verified);
    REQUIRE(first.stats.verification_rate());
    CHECK(*first.stats.verification_rate() == doctest::Approx(static_cast<double>(r.verified) / r.candidates).epsilon(1e-12));
    CHECK(*first.stats.avg_candidates_per_object() ==
          doctest::Approx(static_cast<double>(r.candidates) / r.annotated).epsilon(1e-12));
    CHECK(compute_stats(cfg.store_dir) == first.stats);

    const StorePaths store{cfg.store_dir};
    for (const auto& [id, text] : manifests(cfg.store_dir)) {
        const AssetRecord rec = parse_manifest(text, id);
        CHECK(rec.provenance.counts.verified <= rec.provenance.counts.candidates);
        CHECK(rec.provenance.stages.size() == kStages.size());
        CHECK(std::find(rec.provenance.flags.begin(), rec.provenance.flags.end(),
                        "collision_center:projected_centroid") != rec.provenance.flags.end());
        CHECK_NOTHROW(validate_against_mesh(rec, load_mesh_file(store.asset(id) / rec.mesh_ref)));
        const CaptionFixture* f = batch.table.find(id);
        REQUIRE(f);
        CHECK(rec.physical.obb_dims(0) == doctest::Approx(*f->longest_axis_m));
        CHECK(rec.caption.category == f->category);
        for (int k = 0; k < kDefaultViewCount; ++k) CHECK(fs::exists(store.render(id, k)));
        // Stage log holds the time stamps; the manifest never does.
        CHECK(text.find("timestamp") == std::string::npos);
        const StageLog log = load_stage_log(store.stage_log(id));
        REQUIRE(log.entries.size() == kStages.size());
        for (std::size_t k = 0; k < kStages.size(); ++k) {
            CHECK(log.entries[k].stage == kStages[k]);
            CHECK(log.entries[k].params_hash == rec.provenance.stages[k].params_hash);
        }
    }
    for (const auto& id : batch.gate_failures) {
        const StageLog log = load_stage_log(store.stage_log(id));
        CHECK(log.terminal() == StageStatus::Filtered);
        CHECK(log.entries.back().stage == "gate");
        CHECK_FALSE(fs::exists(store.manifest(id)));
    }

    const auto before = manifests(cfg.store_dir);
    const std::string log_before = read_text_file(store.stage_log(batch.ids[0]));
    const RunReport second = run_pipeline(cfg);
    CHECK(second.executed == 0);
    CHECK(second.stats == first.stats);
    CHECK(manifests(cfg.store_dir) == before);
    CHECK(read_text_file(store.stage_log(batch.ids[0])) == log_before);
}

TEST_CASE("two runs with the same seed give byte-identical manifests") {
    TempDir a("det_a"), b("det_b");
    const FixtureBatch ba = make_fixture_batch(a.path / "in", 12, 2, 5);
    const FixtureBatch bb = make_fixture_batch(b.path / "in", 12, 2, 5);
    PipelineConfig ca = config_for(a.path, ba), cb = config_for(b.path, bb);
    cb.workers = 3;
    run_pipeline(ca);
    run_pipeline(cb);
    const auto ma = manifests(ca.store_dir);
    CHECK(ma.size() == 10);
    CHECK(ma == manifests(cb.store_dir));

    TempDir c("det_c");
    const FixtureBatch bc = make_fixture_batch(c.path / "in", 12, 2, 5);
    run_pipeline(config_for(c.path, bc, 8));
    CHECK(ma != manifests(c.path / "store"));
}

TEST_CASE("changing a late parameter re-runs only the stages after it") {
    TempDir tmp("partial"), fresh("partial_fresh");
    const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 6, 1, 9);
    PipelineConfig cfg = config_for(tmp.path, batch);
    run_pipeline(cfg);

    cfg.proximity_threshold = 0.02;
    const RunReport again = run_pipeline(cfg);
    for (const AssetOutcome& a : again.assets) CHECK(a.executed == (a.status == StageStatus::Ok ? 5 : 0));

    // Restored checkpoints reproduce a from-scratch run exactly.
    make_fixture_batch(fresh.path / "in", 6, 1, 9);
    PipelineConfig fresh_cfg = config_for(fresh.path, batch);
    fresh_cfg.proximity_threshold = 0.02;
    run_pipeline(fresh_cfg);
    CHECK(manifests(cfg.store_dir) == manifests(fresh_cfg.store_dir));

    // A changed source mesh starts that asset over.
    const auto ok = std::find_if(again.assets.begin(), again.assets.end(),
                                 [](const AssetOutcome& a) { return a.status == StageStatus::Ok; });
    REQUIRE(ok != again.assets.end());
    const std::string id = ok->asset_id;
    TriMesh m = load_mesh_file(cfg.input_dir / (id + ".obj"));
    m.vertices *= 1.5;
    save_mesh_file(m, cfg.input_dir / (id + ".obj"));
    const RunReport third = run_pipeline(cfg);
    for (const AssetOutcome& a : third.assets)
        CHECK(a.executed == (a.asset_id == id ? static_cast<int>(kStages.size()) : 0));
}

TEST_CASE("a lost checkpoint is rebuilt on the next run") {
    TempDir tmp("lost");
    const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 2, 0, 2);
    PipelineConfig cfg = config_for(tmp.path, batch);
    run_pipeline(cfg);
    const auto before = manifests(cfg.store_dir);
    const StorePaths store{cfg.store_dir};
    fs::remove(store.work(batch.ids[0]) / "caption.json");
    cfg.grasp_k = 50;
    const RunReport r = run_pipeline(cfg);
    CHECK(r.assets[0].status == StageStatus::Error);
    CHECK(r.assets[0].detail.find("checkpoint") != std::string::npos);
    const RunReport again = run_pipeline(cfg);
    CHECK(again.assets[0].status == StageStatus::Ok);
    CHECK(again.assets[0].executed == static_cast<int>(kStages.size()) - 5);
    cfg.grasp_k = 100;
    run_pipeline(cfg);
    CHECK(manifests(cfg.store_dir) == before);
}

TEST_CASE("unreadable and degenerate inputs are recorded, the run continues") {
    TempDir tmp("errors");
    const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 3, 0, 4);
    write_file_atomic(tmp.path / "in" / "broken.obj", "v 0 0 0\nv 1 0 0\nf 1 2 7\n");
    write_file_atomic(tmp.path / "in" / "garbage.obj", "this is not a mesh\n");
    write_file_atomic(tmp.path / "in" / "bad name!.obj", "v 0 0 0\n");
    PipelineConfig cfg = config_for(tmp.path, batch);
    const RunReport r = run_pipeline(cfg);
    CHECK(r.stats.ingested == 5);
    CHECK(r.stats.errors == 2);
    CHECK(r.stats.annotated == 3);
    for (const AssetOutcome& a : r.assets)
        if (a.asset_id == "broken" || a.asset_id == "garbage") {
            CHECK(a.status == StageStatus::Error);
            CHECK(a.stage == "load");
            CHECK_FALSE(a.detail.empty());
        }
    std::vector<std::string> rejected;
    ingest(cfg.input_dir, cfg.store_dir, &rejected);
    CHECK(rejected.size() == 1);
    // Deterministic failures are final: nothing re-executes.
    CHECK(run_pipeline(cfg).executed == 0);
}

TEST_CASE("configuration errors abort before any work") {
    TempDir tmp("config");
    PipelineConfig c;
    c.store_dir = tmp.path / "store";
    c.client_mode = "oracle";
    CHECK_THROWS_AS(run_pipeline(c), ArgumentError);
    c.client_mode = "mock";
    c.workers = 0;
    CHECK_THROWS_AS(run_pipeline(c), ArgumentError);
    c.workers = 1;
    c.input_dir = tmp.path / "missing";
    CHECK_THROWS_AS(run_pipeline(c), ArgumentError);
    c.input_dir.clear();
    c.fps_k = 0;
    CHECK_THROWS_AS(run_pipeline(c), ArgumentError);
    c.fps_k = 42;
    c.surface_samples = 10;
    CHECK_THROWS_AS(run_pipeline(c), ArgumentError);
    CHECK_FALSE(fs::exists(c.store_dir / "assets"));
}

TEST_CASE("stats: undefined rates, integrity, and table arithmetic") {
    PipelineStats empty;
    CHECK_FALSE(empty.verification_rate());
    CHECK_FALSE(empty.avg_candidates_per_object());

    PipelineStats s;
    s.candidates = 100;
    s.verified = 76;
    CHECK(100.0 * *s.verification_rate() == doctest::Approx(76.0));

    // Per-object averages of 81.63 candidates and 62.14 verified.
    PipelineStats t;
    t.annotated = 100;
    t.candidates = 8163;
    t.verified = 6214;
    CHECK(*t.avg_candidates_per_object() == doctest::Approx(81.63));
    CHECK(std::abs(100.0 * *t.verification_rate() - 76.13) < 0.01);

    TempDir tmp("integrity");
    const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 2, 0, 6);
    PipelineConfig cfg = config_for(tmp.path, batch);
    run_pipeline(cfg);
    const fs::path p = StorePaths{cfg.store_dir}.manifest(batch.ids[0]);
    Json m = parse_json_text(read_text_file(p), "m");
    m["provenance"]["counts"]["verified"] = m["provenance"]["counts"]["candidates"].get<long>() + 1;
    write_file_atomic(p, m.dump(2));
    CHECK_THROWS_AS(compute_stats(cfg.store_dir), IntegrityError);
}

TEST_CASE("stage logs reject out-of-order entries") {
    StageLog log;
    log.asset_id = "a";
    log.entries = {{"load", StageStatus::Ok, "t", "h", ""}, {"render", StageStatus::Ok, "t", "h", ""}};
    CHECK(stage_log_from(FieldReader(to_json(log), "")).entries == log.entries);
    std::swap(log.entries[0], log.entries[1]);
    CHECK_THROWS_AS(stage_log_from(FieldReader(to_json(log), "")), ParseError);
    log.entries = {{"load", StageStatus::Error, "t", "h", "x"}, {"render", StageStatus::Ok, "t", "h", ""}};
    CHECK_THROWS_AS(stage_log_from(FieldReader(to_json(log), "")), ParseError);
}

TEST_CASE("remote annotation matches mock annotation") {
    TempDir a("remote_a"), b("remote_b");
    const FixtureBatch batch = make_fixture_batch(a.path / "in", 3, 1, 12);
    make_fixture_batch(b.path / "in", 3, 1, 12);
    MockConfig mock;
    mock.fixtures = batch.table;
    StubAnnotationServer server(std::make_shared<MockAnnotationClient>(mock));
    server.start();

    PipelineConfig local = config_for(a.path, batch);
    PipelineConfig remote = config_for(b.path, batch);
    remote.client_mode = "remote";
    remote.remote.base_url = server.base_url();
    remote.workers = 2;
    run_pipeline(local);
    const RunReport r = run_pipeline(remote);
    CHECK(r.stats.gated == 2);
    for (const auto& [id, text] : manifests(local.store_dir)) {
        AssetRecord x = parse_manifest(text, id);
        AssetRecord y = load_manifest(StorePaths{remote.store_dir}.manifest(id));
        x.provenance = {};
        y.provenance = {};
        CHECK(x == y);
    }
    server.stop();
}
