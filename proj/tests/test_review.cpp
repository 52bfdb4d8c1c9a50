#include <doctest.h>

#include <thread>

#include "manitwin/errors.hpp"
#include "manitwin/fixtures.hpp"
#include "manitwin/geometry/mesh_io.hpp"
#include "manitwin/geometry/shapes.hpp"
#include "manitwin/io_util.hpp"
#include "manitwin/pipeline.hpp"
#include "manitwin/review.hpp"
#include "support.hpp"

// After Eigen: the resolver headers pulled in here define macros Eigen trips on.
#include <httplib.h>
#include <unistd.h>

using namespace manitwin;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("manitwin_review_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Store entries without running the pipeline.
void fake_store(const fs::path& root, int n) {
    Rng rng(5);
    const StorePaths store{root};
    for (int i = 0; i < n; ++i) {
        AssetRecord r = testing::random_record(rng, i);
        save_mesh_file(shapes::box(Vector3d(0.05, 0.05, 0.05)), store.source(r.asset_id));
        save_manifest(r, store.manifest(r.asset_id));
        StageLog log;
        log.asset_id = r.asset_id;
        write_file_atomic(store.stage_log(r.asset_id), to_json(log).dump());
    }
}

ReviewVerdict verdict(const std::string& asset, const std::string& reviewer, bool grasp_ok) {
    ReviewVerdict v;
    v.asset_id = asset;
    v.reviewer_id = reviewer;
    v.correct = {true, true, true, true, grasp_ok};
    v.accept = grasp_ok;
    return v;
}

Json verdict_body(bool with_grasp = true) {
    Json r{{"category_classification", "correct"},
           {"language_descriptions", "correct"},
           {"functional_point_labels", "incorrect"},
           {"physical_property_estimation", "correct"}};
    if (with_grasp) r["grasp_point_selection"] = "correct";
    return Json{{"ratings", r}, {"overall", "accept"}};
}

}  // namespace

TEST_CASE("verdict wire format and rules") {
    ReviewVerdict v = verdict("a", "r", false);
    v.timestamp = "2026-01-01T00:00:00.000Z";
    v.note = "grasp points on the lid";
    CHECK(verdict_from(FieldReader(to_json(v), "")) == v);

    Json missing = to_json(v);
    missing["ratings"].erase("grasp_point_selection");
    CHECK_THROWS_AS(verdict_from(FieldReader(missing, "")), ValidationError);
    Json bad_value = to_json(v);
    bad_value["ratings"]["language_descriptions"] = "meh";
    CHECK_THROWS_AS(verdict_from(FieldReader(bad_value, "")), ValidationError);
    Json extra = to_json(v);
    extra["ratings"]["vibes"] = "correct";
    CHECK_THROWS_AS(verdict_from(FieldReader(extra, "")), ValidationError);

    ReviewVerdict reject = verdict("a", "r", true);
    reject.accept = false;
    CHECK_THROWS_AS(validate(reject), ValidationError);
    reject.note = "mesh has holes";
    CHECK_NOTHROW(validate(reject));
    reject.note.clear();
    reject.correct[2] = false;
    CHECK_NOTHROW(validate(reject));
}

TEST_CASE("500 verdicts with 424 correct grasp points give 84.8 percent") {
    TempDir tmp("acc");
    fake_store(tmp.path, 20);
    ReviewStore store(tmp.path);
    const AccuracyReport none = store.accuracy();
    CHECK(none.verdicts == 0);
    for (const auto& p : none.percent) CHECK_FALSE(p);
    CHECK_FALSE(none.accept_percent);

    int k = 0;
    for (int reviewer = 0; reviewer < 25; ++reviewer)
        for (int a = 0; a < 20; ++a, ++k) store.submit(verdict("asset_" + std::to_string(a), "r" + std::to_string(reviewer), k < 424));
    const AccuracyReport acc = store.accuracy();
    CHECK(acc.verdicts == 500);
    REQUIRE(acc.percent[4]);
    CHECK(*acc.percent[4] == doctest::Approx(84.8).epsilon(1e-12));
    CHECK(*acc.percent[0] == doctest::Approx(100.0));
    // Mean of indicators, recomputed after a reload from the files.
    ReviewStore reread(tmp.path);
    CHECK(*reread.accuracy().percent[4] == *acc.percent[4]);
    CHECK(reread.verdicts("asset_3").size() == 25);
}

TEST_CASE("queue paging, pending removal, conflicts") {
    TempDir tmp("queue");
    fake_store(tmp.path, 50);
    ReviewStore store(tmp.path);
    const QueuePage p1 = store.pending(1, 20);
    CHECK(p1.total == 50);
    CHECK(p1.pages == 3);
    CHECK(p1.items.size() == 20);
    CHECK(store.pending(3, 20).items.size() == 10);
    CHECK(store.pending(4, 20).items.empty());
    CHECK_THROWS_AS(store.pending(0, 20), ArgumentError);

    const std::string id = p1.items[0].asset_id;
    store.submit(verdict(id, "alice", true));
    CHECK(store.pending(1, 100).total == 49);
    CHECK_THROWS_AS(store.submit(verdict(id, "alice", false)), ConflictError);
    CHECK_NOTHROW(store.submit(verdict(id, "bob", false)));
    CHECK_THROWS_AS(store.submit(verdict("nope", "alice", true)), NotFoundError);
    // The file only ever grows.
    CHECK(read_text_file(StorePaths{tmp.path}.verdicts(id)).find("alice") < read_text_file(StorePaths{tmp.path}.verdicts(id)).find("bob"));
}

TEST_CASE("review sample rate picks a deterministic subset") {
    TempDir tmp("sample");
    fake_store(tmp.path, 40);
    CHECK(ReviewStore(tmp.path, 0.0).pending(1, 100).total == 0);
    const auto half = ReviewStore(tmp.path, 0.5, 3).pending(1, 100);
    CHECK(half.total > 5);
    CHECK(half.total < 35);
    CHECK(ReviewStore(tmp.path, 0.5, 3).pending(1, 100).total == half.total);
    CHECK_THROWS_AS(ReviewStore(tmp.path, 1.5), ArgumentError);
}

TEST_CASE("concurrent submissions are all kept") {
    TempDir tmp("concurrent");
    fake_store(tmp.path, 4);
    ReviewStore store(tmp.path);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
            for (int a = 0; a < 4; ++a) store.submit(verdict("asset_" + std::to_string(a), "r" + std::to_string(t), true));
        });
    for (auto& th : threads) th.join();
    CHECK(store.accuracy().verdicts == 32);
    CHECK(ReviewStore(tmp.path).accuracy().verdicts == 32);
}

TEST_CASE("HTTP API over a pipeline store") {
    TempDir tmp("http");
    const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 4, 1, 2);
    PipelineConfig cfg;
    cfg.input_dir = tmp.path / "in";
    cfg.store_dir = tmp.path / "store";
    cfg.mock.fixtures = batch.table;
    cfg.render_size = 64;
    run_pipeline(cfg);

    auto store = std::make_shared<ReviewStore>(cfg.store_dir);
    ReviewServer server(store);
    const int port = server.start();
    httplib::Client cli("127.0.0.1", port);

    auto queue = cli.Get("/api/v1/assets?page_size=2");
    REQUIRE(queue);
    CHECK(queue->status == 200);
    CHECK(queue->get_header_value("Access-Control-Allow-Origin") == "*");
    const Json q = Json::parse(queue->body);
    CHECK(q["total"] == 3);
    CHECK(q["pages"] == 2);
    const std::string id = q["items"][0]["asset_id"];
    CHECK(cli.Get("/api/v1/assets?page=zero")->status == 400);

    auto detail = cli.Get("/api/v1/assets/" + id);
    REQUIRE(detail);
    CHECK(detail->status == 200);
    const Json d = Json::parse(detail->body);
    CHECK(d["renders"].size() == 8);
    CHECK(d["manifest"]["asset_id"] == id);
    CHECK(d["grasp_outcomes"].size() == d["manifest"]["provenance"]["counts"]["candidates"].get<std::size_t>());
    CHECK(d["pending"] == true);

    auto png = cli.Get(d["renders"][0].get<std::string>());
    REQUIRE(png);
    CHECK(png->status == 200);
    CHECK(png->get_header_value("Content-Type") == "image/png");
    CHECK(png->body.substr(1, 3) == "PNG");
    CHECK(cli.Get("/api/v1/assets/" + id + "/renders/99.png")->status == 404);
    CHECK(cli.Get("/api/v1/assets/unknown")->status == 404);
    CHECK(cli.Get("/api/v1/assets/" + batch.gate_failures[0])->status == 404);

    auto empty = Json::parse(cli.Get("/api/v1/stats/accuracy")->body);
    CHECK(empty["accuracy_percent"]["grasp_point_selection"].is_null());

    const httplib::Headers alice{{"X-Reviewer-Id", "alice"}};
    const std::string path = "/api/v1/assets/" + id + "/verdicts";
    auto ok = cli.Post(path, alice, verdict_body().dump(), "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 201);
    CHECK_FALSE(Json::parse(ok->body)["timestamp"].get<std::string>().empty());
    CHECK(cli.Post(path, alice, verdict_body().dump(), "application/json")->status == 409);
    CHECK(cli.Post(path, {{"X-Reviewer-Id", "bob"}}, verdict_body(false).dump(), "application/json")->status == 422);
    CHECK(cli.Post(path, {{"X-Reviewer-Id", "bob"}}, "{not json", "application/json")->status == 400);
    CHECK(cli.Post(path, verdict_body().dump(), "application/json")->status == 422);  // no reviewer
    CHECK(cli.Post("/api/v1/assets/ghost/verdicts", alice, verdict_body().dump(), "application/json")->status == 404);
    Json reject = verdict_body();
    reject["overall"] = "reject";
    reject["ratings"]["functional_point_labels"] = "correct";
    CHECK(cli.Post(path, {{"X-Reviewer-Id", "carol"}}, reject.dump(), "application/json")->status == 422);

    CHECK(Json::parse(cli.Get("/api/v1/assets")->body)["total"] == 2);
    const Json acc = Json::parse(cli.Get("/api/v1/stats/accuracy")->body);
    CHECK(acc["verdicts"] == 1);
    CHECK(acc["accuracy_percent"]["functional_point_labels"] == 0.0);
    CHECK(acc["accuracy_percent"]["grasp_point_selection"] == 100.0);

    const Json stats = Json::parse(cli.Get("/api/v1/stats/pipeline")->body);
    CHECK(stats["counts"]["gated"] == 3);
    CHECK(stats["counts"]["ingested"] == 4);

    auto pre = cli.Options("/api/v1/assets");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    server.stop();
}
