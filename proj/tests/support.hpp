#pragma once

// Randomized fixtures and brute-force oracles shared by the unit tests and the
// acceptance runner. Oracles here are written independently of the library
// code they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "manitwin/asset.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/geometry/types.hpp"

namespace manitwin::testing {

inline Quaterniond random_rotation(Rng& rng) {
    // Shoemake's uniform quaternion.
    const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t1 = 2.0 * std::numbers::pi * u2, t2 = 2.0 * std::numbers::pi * u3;
    Quaterniond q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
    q.normalize();
    return q;
}

inline Vector3d random_vec(Rng& rng, double lo, double hi) {
    return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline std::string random_word(Rng& rng) {
    static const char* words[] = {"mug", "red", "ceramic", "small", "cylindrical", "drinking", "kettle", "blue",
                                  "plastic", "medium", "boxy", "pouring", "tape", "rubber", "large", "ring",
                                  "with \"quotes\"", "unicode été", "tab\there"};
    return words[uniform_index(rng, std::size(words))];
}

/// A well-formed AssetRecord with random contents.
inline AssetRecord random_record(Rng& rng, int index) {
    AssetRecord r;
    r.asset_id = "asset_" + std::to_string(index);
    r.mesh_ref = "assets/" + r.asset_id + "/mesh.obj";
    r.physical.obb_dims = random_vec(rng, 0.01, 0.5);
    r.physical.mass = uniform(rng, 0.001, 20.0);
    r.physical.friction = uniform(rng, 0.0, 2.0);
    r.caption = {random_word(rng), random_word(rng), random_word(rng),
                 random_word(rng), random_word(rng), random_word(rng)};

    const auto n_fp = uniform_index(rng, 5);
    for (std::size_t i = 0; i < n_fp; ++i) {
        FunctionalPoint p;
        p.id = static_cast<int>(i * 3 + uniform_index(rng, 3));
        p.position = random_vec(rng, -0.3, 0.3);
        p.function_label = random_word(rng);
        p.confidence = uniform01(rng);
        p.rationale = random_word(rng);
        r.functional_points.push_back(p);
    }
    const auto n_gp = uniform_index(rng, 4);
    for (std::size_t i = 0; i < n_gp; ++i) {
        GraspPoint g;
        g.id = static_cast<int>(10 + i);
        g.position = random_vec(rng, -0.3, 0.3);
        g.grasp_type = static_cast<GraspType>(uniform_index(rng, 5));
        g.use_scenario = random_word(rng);
        r.grasp_points.push_back(g);
    }
    const auto n_v = uniform_index(rng, 12);
    for (std::size_t i = 0; i < n_v; ++i) {
        GraspPose g;
        g.position = random_vec(rng, -0.3, 0.3);
        g.orientation = random_rotation(rng);
        g.confidence = uniform01(rng);
        if (!r.functional_points.empty() && uniform01(rng) < 0.7)
            g.associated_functional_point = r.functional_points[uniform_index(rng, r.functional_points.size())].id;
        if (!r.grasp_points.empty() && uniform01(rng) < 0.7)
            g.associated_grasp_point = r.grasp_points[uniform_index(rng, r.grasp_points.size())].id;
        g.verification = VerificationOutcome{true, FailureReason::None, 3 + static_cast<int>(uniform_index(rng, 5)),
                                             uniform(rng, 0.0, 0.0099)};
        r.verified_grasps.push_back(g);
    }
    r.placement.placement_position = random_vec(rng, -1.0, 1.0);
    r.placement.placement_orientation = random_rotation(rng);
    r.placement.collision_radius = uniform(rng, 0.01, 0.4);

    r.provenance.seed = rng();
    for (const char* s : {"load", "gate", "properties", "rescale", "caption"})
        r.provenance.stages.push_back({s, StageStatus::Ok, std::to_string(rng())});
    auto& c = r.provenance.counts;
    c.verified = static_cast<std::int64_t>(n_v);
    c.candidates = c.verified + static_cast<std::int64_t>(uniform_index(rng, 50));
    c.after_proximity = c.candidates + static_cast<std::int64_t>(uniform_index(rng, 500));
    c.proposals = c.after_proximity + static_cast<std::int64_t>(uniform_index(rng, 4000));
    if (c.candidates > c.verified) c.failures["penetration"] = c.candidates - c.verified;
    if (uniform01(rng) < 0.5) r.provenance.flags.push_back("collision_center:projected_centroid");
    if (uniform01(rng) < 0.3) r.extra["x_future_field"] = Json{{"nested", Json::array({1, 2.5, "three"})}};
    return r;
}

// --- brute-force oracles ---------------------------------------------------------

/// Greedy FPS straight from the definition: recompute every min distance to
/// the full selected set at every step.
template <typename Matrix>
std::vector<Index> fps_oracle(const Matrix& pts, Index k, Index seed) {
    std::vector<Index> sel{seed};
    while (static_cast<Index>(sel.size()) < k) {
        Index best = -1;
        double best_d = -1.0;
        for (Index i = 0; i < pts.rows(); ++i) {
            if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
            double d = std::numeric_limits<double>::infinity();
            for (Index s : sel) d = std::min(d, (pts.row(i) - pts.row(s)).norm());
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

/// Pose distance written out from rotation matrices rather than quaternions.
inline double pose_distance_oracle(const GraspPose& a, const GraspPose& b, double w) {
    const Matrix3d rel = a.orientation.toRotationMatrix().transpose() * b.orientation.toRotationMatrix();
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    return (a.position - b.position).norm() + w * std::acos(c);
}

inline std::vector<Index> fps7_oracle(const std::vector<GraspPose>& g, Index k, double w) {
    if (g.empty()) return {};
    Index seed = 0;
    for (Index i = 0; i < static_cast<Index>(g.size()); ++i)
        if (g[static_cast<std::size_t>(i)].confidence > g[static_cast<std::size_t>(seed)].confidence) seed = i;
    std::vector<Index> sel{seed};
    const Index n = std::min<Index>(k, static_cast<Index>(g.size()));
    while (static_cast<Index>(sel.size()) < n) {
        Index best = -1;
        double best_d = -1.0;
        for (Index i = 0; i < static_cast<Index>(g.size()); ++i) {
            if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
            double d = std::numeric_limits<double>::infinity();
            for (Index s : sel)
                d = std::min(d, pose_distance_oracle(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(s)], w));
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

inline std::vector<GraspPose> random_poses(Rng& rng, std::size_t n) {
    std::vector<GraspPose> out(n);
    for (auto& g : out) {
        g.position = random_vec(rng, -0.2, 0.2);
        g.orientation = random_rotation(rng);
        g.confidence = uniform01(rng);
    }
    return out;
}

}  // namespace manitwin::testing

#include "manitwin/annotation.hpp"
#include "manitwin/geometry/sampling.hpp"

namespace manitwin::testing {

/// Mock proposals on `mesh`, jittered so that every failure mode shows up.
inline std::vector<GraspPose> jittered_grasps(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
    MockAnnotationClient mock;
    const PointCloud cloud = surface_sample(mesh, 4000, seed);
    const AssetView view{"jitter", &mesh, {}};
    std::vector<GraspPose> base = mock.propose_grasps(view, cloud, GripperModel{}, static_cast<int>(n), seed + 1);
    Rng rng(seed + 2);
    std::vector<GraspPose> out;
    for (std::size_t i = 0; i < n && !base.empty(); ++i) {
        GraspPose g = base[i % base.size()];
        if (i % 3 != 0) {
            g.position += random_vec(rng, -0.02, 0.02);
            const Quaterniond tilt(Eigen::AngleAxisd(uniform(rng, 0.0, 0.6), random_vec(rng, -1, 1).normalized()));
            g.orientation = (tilt * g.orientation).normalized();
        }
        out.push_back(g);
    }
    return out;
}

}  // namespace manitwin::testing

#include "manitwin/layout.hpp"

namespace manitwin::testing {

struct Scene {
    SceneLayout layout;
    std::vector<AssetRecord> records;
};

/// Small caption vocabulary so attribute collisions and duplicate
/// descriptions show up often.
inline Scene random_scene(std::uint64_t seed, int objects = 5) {
    static const std::vector<std::string> categories{"container", "mug", "bottle", "tool"};
    static const std::vector<std::string> colors{"red", "blue", "white"};
    static const std::vector<std::string> materials{"plastic", "metal", "ceramic"};
    static const std::vector<std::string> shapes{"cylindrical", "boxy", "round"};
    static const std::vector<std::string> sizes{"small", "medium", "large"};
    Rng rng(seed);
    Scene s;
    for (int i = 0; i < objects; ++i) {
        AssetRecord r = random_record(rng, i);
        auto pick = [&](const std::vector<std::string>& v) { return v[uniform_index(rng, v.size())]; };
        r.caption.category = pick(categories);
        r.caption.color = pick(colors);
        r.caption.material = pick(materials);
        r.caption.shape = pick(shapes);
        r.caption.size = pick(sizes);
        r.placement.collision_radius = uniform(rng, 0.03, 0.12);
        s.records.push_back(std::move(r));
    }
    s.layout = sample_layout(s.records, Table{0.0, 0.0, 1.2, 0.8, 0.75}, seed);
    s.layout.scene_id = "scene_" + std::to_string(seed);
    return s;
}

}  // namespace manitwin::testing
