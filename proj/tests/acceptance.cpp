// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "manitwin/annotation.hpp"
#include "manitwin/errors.hpp"
#include "manitwin/fixtures.hpp"
#include "manitwin/geometry/obb.hpp"
#include "manitwin/geometry/sampling.hpp"
#include "manitwin/geometry/shapes.hpp"
#include "manitwin/grasp_filter.hpp"
#include "manitwin/grasp_verify.hpp"
#include "manitwin/io_util.hpp"
#include "manitwin/layout.hpp"
#include "manitwin/manifest.hpp"
#include "manitwin/pipeline.hpp"
#include "manitwin/vqa.hpp"
#include "support.hpp"
#include "vqa_oracle.hpp"

using namespace manitwin;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("manitwin_acceptance_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

GraspPose top_down(const Vector3d& position) {
    GraspPose g;
    g.position = position;
    g.orientation = grasp_orientation(Vector3d::UnitX(), -Vector3d::UnitZ());
    g.confidence = 1.0;
    return g;
}

PhysicalProperties props_for(const TriMesh& mesh, double mu) {
    return {compute_obb(mesh).dims(), signed_volume(mesh) * 500.0, mu};
}

std::vector<GraspPose> mock_proposals(const TriMesh& mesh, std::uint64_t seed) {
    MockAnnotationClient mock;
    const PointCloud cloud = surface_sample(mesh, kDefaultSurfaceSamples, seed);
    return mock.propose_grasps({"fixture", &mesh, {}}, cloud, GripperModel{}, kDefaultMaxProposals, seed + 1);
}

Result fps_equivalence() {
    Rng rng(2024);
    double lib_time = 0.0;
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + static_cast<Index>(uniform_index(rng, 64));
        Points3<double> pts(n, 3);
        for (Index i = 0; i < n; ++i) pts.row(i) = testing::random_vec(rng, -1.0, 1.0).transpose();
        const Index k = 1 + static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n)));
        const Index seed = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n)));
        const auto t = Clock::now();
        const auto sel = farthest_point_sampling(pts, k, seed);
        lib_time += seconds_since(t);
        mismatches += sel != testing::fps_oracle(pts, k, seed);
    }
    return {mismatches == 0 && lib_time < 1.0, fmt("100 clouds, %d mismatches, %.4f s", mismatches, lib_time)};
}

Result fps7_equivalence() {
    Rng rng(77);
    int mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 32);
        const auto poses = testing::random_poses(rng, n);
        const Index k = 1 + static_cast<Index>(uniform_index(rng, n));
        const double w = uniform(rng, 0.0, 0.2);
        mismatches += fps_7dof_indices(poses, k, w) != testing::fps7_oracle(poses, k, w);
    }
    return {mismatches == 0, fmt("50 pose sets, %d mismatches", mismatches)};
}

Result sampling_proportionality() {
    // Areas 1 and 3, the second far along +x so its samples are easy to spot.
    TriMesh m;
    m.vertices.resize(6, 3);
    m.vertices << 0, 0, 0, 1, 0, 0, 0, 2, 0, 10, 0, 0, 11, 0, 0, 10, 6, 0;
    m.faces.resize(2, 3);
    m.faces << 0, 1, 2, 3, 4, 5;
    const PointCloud c = surface_sample(m, kDefaultSurfaceSamples, 1234);
    Index large = 0;
    for (Index i = 0; i < c.size(); ++i) large += c.points(i, 0) > 5.0;
    const double share = static_cast<double>(large) / static_cast<double>(c.size());
    return {c.size() == 20000 && share >= 0.73 && share <= 0.77, fmt("n = %ld, share %.4f", long(c.size()), share)};
}

Result grasp_fixtures() {
    const GripperModel g;
    std::vector<std::string> failed;

    // (a) box
    const TriMesh cube = shapes::box(Vector3d(0.06, 0.06, 0.06));
    const auto box_grasps = mock_proposals(cube, 5);
    std::vector<GraspPose> held;
    for (const GraspPose& gr : box_grasps)
        if (verify_grasp(cube, props_for(cube, 0.5), gr, g).passed) held.push_back(gr);
    if (g.max_opening != 0.08 || held.empty()) failed.push_back("a");

    // (b) sphere: no proposals, and no top-down pose through it holds either
    const TriMesh ball = shapes::uv_sphere(0.06, 24, 48);
    int ball_verified = 0;
    std::vector<GraspPose> ball_grasps = mock_proposals(ball, 6);
    const std::size_t ball_proposals = ball_grasps.size();
    Rng rng(9);
    for (int i = 0; i < 50; ++i) ball_grasps.push_back(top_down(testing::random_vec(rng, -0.03, 0.03)));
    for (const GraspPose& gr : ball_grasps) ball_verified += verify_grasp(ball, props_for(ball, 0.5), gr, g).passed;
    if (ball_verified != 0 || ball_proposals != 0) failed.push_back("b");

    // (c) frictionless: nothing passes, and every grasp that held at 0.5
    // now stops at force closure
    int c_bad = 0;
    for (const GraspPose& gr : box_grasps) c_bad += verify_grasp(cube, props_for(cube, 0.0), gr, g).passed;
    for (const GraspPose& gr : held)
        c_bad += verify_grasp(cube, props_for(cube, 0.0), gr, g).failure_reason != FailureReason::NotForceClosure;
    if (c_bad) failed.push_back("c");

    // (d) 45 degree wedge faces against a cone of half angle atan(0.5)
    const TriMesh wedge = shapes::wedge(0.03, 0.03, 0.1);
    GraspPose side;
    side.position = Vector3d(0, 0.04, 0.012);
    side.orientation = grasp_orientation(Vector3d::UnitX(), -Vector3d::UnitY());
    const ContactSet wc = close_fingers(g, side, wedge);
    bool d_ok = wc.size() == 2;
    if (d_ok) {
        const Vector3d line = (wc[1].position - wc[0].position).normalized();
        const double half_angle = std::atan(0.5);
        const bool in_cones = std::acos(std::abs(line.dot(wc[0].normal))) <= half_angle &&
                              std::acos(std::abs(line.dot(wc[1].normal))) <= half_angle;
        d_ok = !in_cones && !force_closure(wc, 0.5) &&
               verify_grasp(wedge, props_for(wedge, 0.5), side, g).failure_reason == FailureReason::NotForceClosure;
    }
    if (!d_ok) failed.push_back("d");

    // Property suites over 200 jittered grasps.
    const auto grasps = testing::jittered_grasps(cube, 200, 31);
    int order_bad = 0, mono_bad = 0, scale_bad = 0;
    for (const GraspPose& gr : grasps) {
        const VerificationOutcome o = verify_grasp(cube, props_for(cube, 0.5), gr, g);
        const bool pen = check_penetration(g, gr, cube);
        order_bad += pen != (o.failure_reason == FailureReason::Penetration);
        ContactSet c;
        if (!pen) {
            c = close_fingers(g, gr, cube);
            order_bad += c.empty() != (o.failure_reason == FailureReason::NoContact);
            if (!c.empty()) order_bad += !force_closure(c, 0.5) != (o.failure_reason == FailureReason::NotForceClosure);
        }
        for (double mu : {0.05, 0.2, 0.5}) {
            VerifyParams lo, hi;
            lo.mu = mu;
            hi.mu = 2.0 * mu;
            if (verify_grasp(cube, props_for(cube, 0.5), gr, g, lo).passed)
                mono_bad += !verify_grasp(cube, props_for(cube, 0.5), gr, g, hi).passed;
        }
        if (c.size() == 2) {
            for (double mu : {0.1, 0.5, 1.0}) {
                ContactSet scaled = c;
                const double s = uniform(rng, 0.1, 10.0);
                for (Contact& x : scaled) x.position *= s;
                scale_bad += force_closure(scaled, mu) != force_closure(c, mu);
            }
        }
    }
    if (grasps.size() != 200 || order_bad || mono_bad || scale_bad) failed.push_back("properties");

    std::string which;
    for (const auto& f : failed) which += " " + f;
    return {failed.empty(),
            fmt("box %zu/%zu verified, sphere %d verified, wedge closure %s; 200 grasps: order %d, mu %d, scale %d bad",
                held.size(), box_grasps.size(), ball_verified, d_ok ? "false" : "?", order_bad, mono_bad, scale_bad) +
                (which.empty() ? "" : "; failed:" + which)};
}

Result layout_safety() {
    Rng rng(1);
    const Table table{0, 0, 1.2, 0.8, 0.75};
    int violations = 0, out_of_bounds = 0, nondeterministic = 0;
    const auto start = Clock::now();
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<AssetRecord> assets;
        for (int k = 0; k < 5; ++k) {
            AssetRecord a;
            a.asset_id = "obj" + std::to_string(k);
            a.placement.collision_radius = uniform(rng, 0.03, 0.15);
            assets.push_back(a);
        }
        const SceneLayout l = sample_layout(assets, table, static_cast<std::uint64_t>(trial));
        violations += static_cast<int>(validate_layout(l, assets).size());
        for (std::size_t i = 0; i < l.placements.size(); ++i) {
            const Vector2d p = l.placements[i].position;
            const double r = assets[i].placement.collision_radius;
            out_of_bounds += p.x() - r < table.x_min || p.x() + r > table.x_max || p.y() - r < table.y_min ||
                             p.y() + r > table.y_max;
            for (std::size_t j = 0; j < i; ++j)
                violations += (p - l.placements[j].position).norm() < r + assets[j].placement.collision_radius;
        }
        nondeterministic += !(sample_layout(assets, table, static_cast<std::uint64_t>(trial)) == l);
    }
    const double t = seconds_since(start);
    return {violations == 0 && out_of_bounds == 0 && nondeterministic == 0 && t < 10.0,
            fmt("1000 layouts x 5: %d violations, %d out of bounds, %d nondeterministic, %.2f s", violations,
                out_of_bounds, nondeterministic, t)};
}

PipelineConfig fixture_config(const fs::path& root, const FixtureBatch& batch, int workers) {
    PipelineConfig c;
    c.input_dir = root / "in";
    c.store_dir = root / ("store_" + std::to_string(workers));
    c.mock.fixtures = batch.table;
    c.seed = 11;
    c.workers = workers;
    return c;
}

Result stats_arithmetic(const fs::path& store) {
    // Recount from raw JSON on disk.
    std::int64_t ingested = 0, gated = 0, annotated = 0, proposals = 0, after = 0, candidates = 0, verified = 0;
    for (const auto& entry : fs::directory_iterator(store / "assets")) {
        if (!fs::exists(entry.path() / "source.obj")) continue;
        ++ingested;
        std::ifstream log_in(entry.path() / "stage_log.json");
        const Json log = Json::parse(log_in);
        for (const Json& e : log["entries"])
            gated += e["stage"] == "gate" && e["status"] == "ok";
        if (!fs::exists(entry.path() / "manifest.json")) continue;
        std::ifstream in(entry.path() / "manifest.json");
        const Json m = Json::parse(in);
        const Json& c = m["provenance"]["counts"];
        ++annotated;
        proposals += c["proposals"].get<std::int64_t>();
        after += c["after_proximity"].get<std::int64_t>();
        candidates += c["candidates"].get<std::int64_t>();
        verified += static_cast<std::int64_t>(m["verified_grasps"].size());
    }
    const PipelineStats s = compute_stats(store);
    auto same = [](std::optional<double> r, std::int64_t num, std::int64_t den) {
        return den > 0 && r && *r == static_cast<double>(num) / static_cast<double>(den);
    };
    const bool counts = s.ingested == ingested && s.gated == gated && s.annotated == annotated &&
                        s.proposals == proposals && s.after_proximity == after && s.candidates == candidates &&
                        s.verified == verified;
    const bool rates = same(s.gate_pass_rate(), gated, ingested) && same(s.verification_rate(), verified, candidates) &&
                       same(s.avg_proposals_per_object(), proposals, annotated) &&
                       same(s.avg_candidates_per_object(), candidates, annotated) &&
                       same(s.avg_verified_per_object(), verified, annotated);

    PipelineStats synthetic;
    synthetic.annotated = 100;
    synthetic.candidates = 8163;
    synthetic.verified = 6214;
    const double pct = 100.0 * *synthetic.verification_rate();
    const bool table_ok = std::abs(pct - 76.13) < 0.01;
    return {ingested == 50 && counts && rates && table_ok,
            fmt("50 assets: %ld gated, %ld/%ld verified (%.2f%%), counts %s, rates %s; 62.14/81.63 -> %.3f%%",
                long(gated), long(verified), long(candidates), 100.0 * s.verification_rate().value_or(0.0),
                counts ? "match" : "differ", rates ? "exact" : "off", pct)};
}

Result manifest_round_trip() {
    Rng rng(7);
    int bad = 0;
    for (int i = 0; i < 200; ++i) {
        const AssetRecord r = testing::random_record(rng, i);
        validate(r);
        const AssetRecord back = parse_manifest(manifest_text(r));
        bad += !(back == r) || manifest_text(back) != manifest_text(r);
    }
    return {bad == 0, fmt("200 records, %d differ", bad)};
}

Result vqa_groundedness() {
    std::size_t pairs = 0, bad = 0;
    std::map<VqaCategory, std::size_t> per;
    std::string first_error;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const testing::Scene s = testing::random_scene(seed);
        const testing::VqaOracle oracle(s.layout, s.records);
        for (const VQAPair& p : generate_vqa(s.layout, s.records, kDefaultPerCategory, seed)) {
            ++pairs;
            ++per[p.category];
            if (const auto err = oracle.check(p)) {
                if (!bad) first_error = *err;
                ++bad;
            }
        }
    }
    return {bad == 0 && pairs > 0 && per.size() == kVqaCategories.size(),
            fmt("100 scenes, %zu pairs over %zu categories, %zu fail", pairs, per.size(), bad) +
                (first_error.empty() ? "" : "; " + first_error)};
}

Result determinism(const fs::path& a, const fs::path& b) {
    const auto ids = list_assets(a);
    int compared = 0, differ = 0;
    for (const auto& id : ids) {
        const fs::path pa = StorePaths{a}.manifest(id), pb = StorePaths{b}.manifest(id);
        if (fs::exists(pa) != fs::exists(pb)) {
            ++differ;
            continue;
        }
        if (!fs::exists(pa)) continue;
        ++compared;
        differ += read_text_file(pa) != read_text_file(pb);
    }
    return {compared > 0 && differ == 0 && list_assets(b) == ids,
            fmt("%d manifests compared, %d differ", compared, differ)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](const char* name, const std::function<Result()>& f) {
        Result r;
        try {
            r = f();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        failures += !r.pass;
        std::cout << (r.pass ? "PASS " : "FAIL ") << name << ": " << r.detail << std::endl;
    };

    report("fps_oracle_equivalence", fps_equivalence);
    report("fps_7dof_oracle_equivalence", fps7_equivalence);
    report("surface_sampling_proportionality", sampling_proportionality);
    report("grasp_verification_fixtures", grasp_fixtures);
    report("layout_safety", layout_safety);

    // Two full mock runs over the same 50 fixture meshes, one serial and one
    // with three workers.
    TempDir tmp("e2e");
    std::optional<PipelineConfig> first, second;
    std::string run_error;
    try {
        const FixtureBatch batch = make_fixture_batch(tmp.path / "in", 50, 10, 3);
        first = fixture_config(tmp.path, batch, 1);
        second = fixture_config(tmp.path, batch, 3);
        run_pipeline(*first);
        run_pipeline(*second);
    } catch (const std::exception& e) {
        run_error = e.what();
    }
    auto needs_runs = [&](auto f) {
        return [&, f]() -> Result {
            if (!run_error.empty()) return {false, "pipeline run failed: " + run_error};
            return f();
        };
    };
    report("stats_arithmetic", needs_runs([&] { return stats_arithmetic(first->store_dir); }));
    report("manifest_round_trip", manifest_round_trip);
    report("vqa_groundedness", vqa_groundedness);
    report("end_to_end_determinism", needs_runs([&] { return determinism(first->store_dir, second->store_dir); }));

    std::cout << (failures ? "FAILED " : "ALL PASSED ") << "(" << failures << " failing)" << std::endl;
    return failures ? 1 : 0;
}
