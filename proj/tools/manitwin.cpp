#include <algorithm>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "manitwin/errors.hpp"
#include "manitwin/fixtures.hpp"
#include "manitwin/geometry/mesh_io.hpp"
#include "manitwin/io_util.hpp"
#include "manitwin/layout.hpp"
#include "manitwin/manifest.hpp"
#include "manitwin/pipeline.hpp"
#include "manitwin/review.hpp"
#include "manitwin/vqa.hpp"

using namespace manitwin;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string clients = "mock";
    double proximity_threshold = kDefaultProximityThreshold;
    int fps_k = static_cast<int>(kDefaultFpsCandidates);
    int grasp_k = static_cast<int>(kDefaultGraspK);
    int workers = 1;
    int port = 8080;
    std::string store = "store";
    std::string fixtures;
    std::string annotation_url;
};

// The caption table travels with the store so later runs without --input
// see the same captions.
MockConfig mock_config(const Globals& g, const fs::path& input_dir) {
    MockConfig m;
    const fs::path kept = fs::path(g.store) / "fixtures.json";
    if (!g.fixtures.empty())
        m.fixtures = FixtureTable::load(g.fixtures);
    else if (!input_dir.empty() && fs::exists(input_dir / "fixtures.json"))
        m.fixtures = FixtureTable::load((input_dir / "fixtures.json").string());
    else if (fs::exists(kept))
        m.fixtures = FixtureTable::load(kept.string());
    return m;
}

void keep_fixture_table(const Globals& g, const fs::path& input_dir) {
    const fs::path src = input_dir / "fixtures.json";
    if (input_dir.empty() || !fs::exists(src)) return;
    write_file_atomic(fs::path(g.store) / "fixtures.json", read_text_file(src));
}

std::vector<AssetRecord> annotated_records(const fs::path& store_dir) {
    const StorePaths store{store_dir};
    std::vector<AssetRecord> out;
    for (const std::string& id : list_assets(store_dir))
        if (fs::exists(store.manifest(id))) out.push_back(load_manifest(store.manifest(id)));
    return out;
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

void write_or_print(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        write_file_atomic(out, text);
}

Json outcome_summary(const RunReport& r) {
    Json assets = Json::array();
    for (const auto& a : r.assets) {
        Json j{{"asset_id", a.asset_id}, {"status", to_string(a.status)}, {"stage", a.stage}, {"executed", a.executed}};
        if (!a.detail.empty()) j["detail"] = a.detail;
        assets.push_back(std::move(j));
    }
    Json out = to_json(r.stats);
    out["executed_stages"] = r.executed;
    out["assets"] = std::move(assets);
    return out;
}

std::pair<double, double> parse_table_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) {
            const double v = std::stod(s);
            return {v, v};
        }
        return {std::stod(s.substr(0, x)), std::stod(s.substr(x + 1))};
    } catch (const std::exception&) {
        throw ArgumentError("--table-size expects W or WxD in meters, got '" + s + "'");
    }
}

ReviewServer* g_server = nullptr;
StubAnnotationServer* g_stub = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
    if (g_stub) g_stub->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation-ready asset pipeline: annotation, grasp verification, layouts, VQA and review."};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Global seed; per-asset seeds derive from it");
    app.add_option("--clients", g.clients, "Annotation clients")->check(CLI::IsMember({"mock", "remote"}));
    app.add_option("--proximity-threshold", g.proximity_threshold, "Grasp-to-point distance cutoff (m)");
    app.add_option("--fps-k", g.fps_k, "Candidate points kept by farthest point sampling");
    app.add_option("--grasp-k", g.grasp_k, "Grasps kept by 7-DoF farthest point sampling");
    app.add_option("--workers", g.workers, "Parallel asset workers")->check(CLI::PositiveNumber);
    app.add_option("--port", g.port, "HTTP port for serve / stub-annotator");
    app.add_option("--store", g.store, "Store directory");
    app.add_option("--fixtures", g.fixtures, "Mock caption table (default: <input>/fixtures.json)");
    app.add_option("--annotation-url", g.annotation_url,
                   "Remote annotation service (default: $MANITWIN_ANNOTATION_URL)");
    app.fallthrough();

    auto* fixtures = app.add_subcommand("make-fixtures", "Write procedural test meshes and their caption table");
    std::string fixture_dir = "fixtures";
    int fixture_count = 50, fixture_failures = 0;
    fixtures->add_option("--out", fixture_dir, "Output directory");
    fixtures->add_option("--count", fixture_count, "Number of meshes");
    fixtures->add_option("--gate-failures", fixture_failures, "Meshes built to fail the quality gate");

    auto* ingest_cmd = app.add_subcommand("ingest", "Copy *.obj meshes into the store");
    std::string input_dir;
    ingest_cmd->add_option("--input", input_dir, "Directory of .obj files")->required();

    auto* run = app.add_subcommand("run", "Run every store asset through the pipeline");
    std::string run_input;
    double mu = -1.0, squeeze = -1.0;
    run->add_option("--input", run_input, "Ingest this directory first");
    run->add_option("--mu", mu, "Override asset friction during verification");
    run->add_option("--squeeze-force", squeeze, "Override gripper squeeze force (N)");

    auto* verify = app.add_subcommand("verify", "Re-run grasp verification for one stored asset");
    std::string verify_asset, verify_grasps;
    double displacement = kDisplacementThreshold;
    verify->add_option("--asset", verify_asset, "Asset id")->required();
    verify->add_option("--grasps", verify_grasps, "Grasp list file (default: the asset's candidates)");
    verify->add_option("--mu", mu, "Friction coefficient (default: the asset's)");
    verify->add_option("--squeeze-force", squeeze, "Squeeze force per finger (N)");
    verify->add_option("--displacement-threshold", displacement, "Slide displacement limit (m)");

    auto* layout = app.add_subcommand("layout", "Sample a collision-free tabletop layout of stored assets");
    int num_objects = 5;
    std::string table_size = "1.2x0.8", layout_out, scene_id;
    std::vector<std::string> layout_assets;
    double table_height = 0.75;
    layout->add_option("--assets", layout_assets, "Explicit asset ids (default: sample --num-objects at random)")
        ->delimiter(',');
    layout->add_option("--num-objects", num_objects, "Objects on the table");
    layout->add_option("--table-size", table_size, "Table W or WxD (m)");
    layout->add_option("--table-height", table_height, "Table surface height (m)");
    layout->add_option("--scene-id", scene_id, "Scene id (default: scene_<seed>)");
    layout->add_option("-o,--out", layout_out, "Output file (default: stdout)");

    auto* vqa = app.add_subcommand("vqa", "Generate grounded question-answer pairs for a layout");
    std::string layout_file, vqa_out;
    int per_category = kDefaultPerCategory;
    vqa->add_option("--layout", layout_file, "Layout file from the layout command")->required();
    vqa->add_option("--per-category", per_category, "Pairs per category");
    vqa->add_option("-o,--out", vqa_out, "Output JSONL file (default: stdout)");

    auto* stats = app.add_subcommand("stats", "Recount statistics from the store");

    auto* serve = app.add_subcommand("serve", "Serve the review API over the store");
    std::string host = "127.0.0.1";
    double sample_rate = 1.0;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--review-sample-rate", sample_rate, "Share of annotated assets queued for review")
        ->check(CLI::Range(0.0, 1.0));

    auto* stub = app.add_subcommand("stub-annotator", "Serve the mock annotator over the remote protocol");
    stub->add_option("--host", host, "Bind address");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*fixtures) {
            const FixtureBatch b = make_fixture_batch(fixture_dir, fixture_count, fixture_failures, g.seed);
            print(Json{{"out", fixture_dir}, {"ids", b.ids.size()}, {"gate_failures", b.gate_failures}});
        } else if (*ingest_cmd) {
            std::vector<std::string> rejected;
            const auto ids = ingest(input_dir, g.store, &rejected);
            keep_fixture_table(g, input_dir);
            print(Json{{"ingested", ids}, {"rejected", rejected}});
        } else if (*run) {
            PipelineConfig c;
            c.input_dir = run_input;
            c.store_dir = g.store;
            c.client_mode = g.clients;
            c.mock = mock_config(g, run_input);
            c.remote.base_url = g.annotation_url;
            c.seed = g.seed;
            c.workers = g.workers;
            c.fps_k = g.fps_k;
            c.grasp_k = g.grasp_k;
            c.proximity_threshold = g.proximity_threshold;
            if (mu >= 0.0) c.verify.mu = mu;
            if (squeeze > 0.0) c.verify.squeeze_force = squeeze;
            const RunReport report = run_pipeline(c);
            keep_fixture_table(g, run_input);
            print(outcome_summary(report));
        } else if (*verify) {
            const StorePaths store{g.store};
            if (!fs::exists(store.manifest(verify_asset)))
                throw NotFoundError("no manifest for asset '" + verify_asset + "'");
            const AssetRecord rec = load_manifest(store.manifest(verify_asset));
            const TriMesh mesh = load_mesh_file(store.asset(verify_asset) / rec.mesh_ref);
            const fs::path gp = verify_grasps.empty() ? store.candidates(verify_asset) : fs::path(verify_grasps);
            const auto grasps = parse_grasp_list(read_text_file(gp), gp.string());
            VerifyParams params;
            if (mu >= 0.0) params.mu = mu;
            if (squeeze > 0.0) params.squeeze_force = squeeze;
            params.slide.displacement_threshold = displacement;
            GripperModel gripper;
            Json results = Json::array();
            std::map<std::string, int> failures;
            int passed = 0;
            for (const GraspPose& gr : grasps) {
                const VerificationOutcome o = verify_grasp(mesh, rec.physical, gr, gripper, params);
                passed += o.passed ? 1 : 0;
                if (!o.passed) ++failures[std::string(to_string(o.failure_reason))];
                results.push_back(to_json(o));
            }
            print(Json{{"asset_id", verify_asset},
                       {"candidates", grasps.size()},
                       {"verified", passed},
                       {"failures", failures},
                       {"outcomes", results}});
        } else if (*layout) {
            const auto [w, d] = parse_table_size(table_size);
            const Table table{0.0, 0.0, w, d, table_height};
            const auto records = annotated_records(g.store);
            std::vector<AssetRecord> chosen;
            if (layout_assets.empty()) {
                chosen = choose_assets(records, static_cast<std::size_t>(num_objects), g.seed);
            } else {
                for (const std::string& id : layout_assets) {
                    const auto it = std::find_if(records.begin(), records.end(),
                                                 [&](const AssetRecord& r) { return r.asset_id == id; });
                    if (it == records.end()) throw NotFoundError("no annotated asset '" + id + "'");
                    chosen.push_back(*it);
                }
            }
            SceneLayout l = sample_layout(chosen, table, g.seed);
            l.scene_id = scene_id.empty() ? "scene_" + std::to_string(g.seed) : scene_id;
            l.selection = layout_assets.empty() ? "random:" + std::to_string(num_objects) : "explicit";
            write_or_print(layout_out, layout_to_json(l, chosen).dump(2) + "\n");
        } else if (*vqa) {
            const SceneLayout l = layout_from_json(parse_json_text(read_text_file(layout_file), layout_file));
            const auto records = annotated_records(g.store);
            std::string text;
            for (const VQAPair& p : generate_vqa(l, records, per_category, g.seed)) text += to_json(p).dump() + "\n";
            write_or_print(vqa_out, text);
        } else if (*stats) {
            print(to_json(compute_stats(g.store)));
        } else if (*serve) {
            auto store = std::make_shared<ReviewStore>(g.store, sample_rate, g.seed);
            ReviewServer server(store);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "review API on http://" << host << ":" << g.port << "/api/v1\n";
            server.listen(host, g.port);
        } else if (*stub) {
            StubAnnotationServer server(std::make_shared<MockAnnotationClient>(mock_config(g, {})));
            g_stub = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "stub annotator on http://" << host << ":" << g.port << "\n";
            server.listen(host, g.port);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
