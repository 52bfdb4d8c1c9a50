#include <doctest.h>

#include <numbers>

#include "manitwin/errors.hpp"
#include "manitwin/grasp_filter.hpp"
#include "support.hpp"

using namespace manitwin;

namespace {

GraspPose at(double x, double y, double z, double confidence = 0.5) {
    GraspPose g;
    g.position = Vector3d(x, y, z);
    g.confidence = confidence;
    return g;
}

}  // namespace

TEST_CASE("proximity threshold is inclusive") {
    const std::vector<Vector3d> points{Vector3d::Zero()};
    const std::vector<GraspPose> grasps{at(0.025, 0, 0), at(0.035, 0, 0), at(0.03, 0, 0), at(0, 0, -0.0299)};
    const auto kept = proximity_filter(grasps, points, kDefaultProximityThreshold);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0] == grasps[0]);
    CHECK(kept[1] == grasps[2]);
    CHECK(kept[2] == grasps[3]);
    CHECK(kDefaultProximityThreshold == 0.03);
}

TEST_CASE("proximity filter with no points or a bad threshold") {
    const std::vector<GraspPose> grasps{at(0, 0, 0)};
    CHECK(proximity_filter(grasps, {}, 0.03).empty());
    CHECK_THROWS_AS(proximity_filter(grasps, std::vector<Vector3d>{Vector3d::Zero()}, 0.0), ArgumentError);
}

TEST_CASE("proximity filter matches all-pairs distances and is monotone in the threshold") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto grasps = testing::random_poses(rng, 60);
        std::vector<Vector3d> points;
        for (int i = 0; i < 5; ++i) points.push_back(testing::random_vec(rng, -0.2, 0.2));
        const double t = uniform(rng, 0.01, 0.15);

        std::vector<GraspPose> expected;
        for (const auto& g : grasps) {
            double nearest = 1e9;
            for (const auto& p : points) nearest = std::min(nearest, (g.position - p).norm());
            if (nearest <= t) expected.push_back(g);
        }
        const auto kept = proximity_filter(grasps, points, t);
        CHECK(kept == expected);

        const auto wider = proximity_filter(grasps, points, t * 1.5);
        for (const auto& g : kept) CHECK(std::find(wider.begin(), wider.end(), g) != wider.end());
    }
}

TEST_CASE("quaternion angle") {
    const Quaterniond a = Quaterniond::Identity();
    const Quaterniond flip(Eigen::AngleAxisd(std::numbers::pi, Vector3d::UnitX()));
    CHECK(quaternion_angle(a, flip) == doctest::Approx(std::numbers::pi));
    CHECK(quaternion_angle(flip, Quaterniond(-flip.coeffs())) == doctest::Approx(0.0));
    // The default weight turns a half-turn into roughly 0.157 m.
    GraspPose g, h;
    h.orientation = flip;
    CHECK(pose_distance(g, h, kDefaultRotationWeight) == doctest::Approx(0.05 * std::numbers::pi));
}

TEST_CASE("fps_7dof seeds with the most confident grasp") {
    const std::vector<GraspPose> grasps{at(0, 0, 0, 0.2), at(1, 0, 0, 0.9), at(0.5, 0, 0, 0.9)};
    const auto idx = fps_7dof_indices(grasps, 3, 0.05);
    REQUIRE(idx.size() == 3);
    CHECK(idx[0] == 1);  // first of the tied maxima
    CHECK(idx[1] == 0);
    CHECK(idx[2] == 2);
}

TEST_CASE("fps_7dof keeps duplicates when k covers them") {
    const std::vector<GraspPose> grasps{at(0.1, 0, 0, 0.5), at(0.1, 0, 0, 0.5)};
    const auto out = fps_7dof(grasps, 2);
    CHECK(out.size() == 2);
    CHECK(fps_7dof(grasps, 10).size() == 2);
    CHECK(fps_7dof({}, 5).empty());
    CHECK_THROWS_AS(fps_7dof(grasps, 0), ArgumentError);
    CHECK_THROWS_AS(fps_7dof(grasps, 1, -1.0), ArgumentError);
    CHECK(kDefaultGraspK == 100);
}

TEST_CASE("fps_7dof matches the brute-force greedy oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = 1 + uniform_index(rng, 32);
        const auto grasps = testing::random_poses(rng, n);
        const Index k = 1 + static_cast<Index>(uniform_index(rng, n + 3));
        const double w = uniform(rng, 0.0, 0.2);
        CHECK(fps_7dof_indices(grasps, k, w) == testing::fps7_oracle(grasps, k, w));
        CHECK(fps_7dof_indices(grasps, k, w).size() == std::min<std::size_t>(k, n));
    }
}

TEST_CASE("fps_7dof with zero rotation weight reduces to positional FPS") {
    Rng rng(5);
    auto grasps = testing::random_poses(rng, 30);
    Index seed = 0;
    Points3<double> pts(30, 3);
    for (Index i = 0; i < 30; ++i) {
        pts.row(i) = grasps[static_cast<std::size_t>(i)].position.transpose();
        if (grasps[static_cast<std::size_t>(i)].confidence > grasps[static_cast<std::size_t>(seed)].confidence) seed = i;
    }
    CHECK(fps_7dof_indices(grasps, 12, 0.0) == testing::fps_oracle(pts, 12, seed));
}

TEST_CASE("associate_semantics") {
    std::vector<FunctionalPoint> fps{{5, Vector3d(1, 0, 0), "a", 1, ""}, {2, Vector3d(-1, 0, 0), "b", 1, ""}};
    std::vector<GraspPoint> gps;
    const std::vector<GraspPose> grasps{at(0, 0, 0), at(0.9, 0, 0)};
    const auto out = associate_semantics(grasps, fps, gps);
    CHECK(out[0].associated_functional_point == 2);  // equidistant: lower id wins
    CHECK(out[1].associated_functional_point == 5);
    CHECK_FALSE(out[0].associated_grasp_point.has_value());

    gps.push_back({7, Vector3d(0, 1, 0), GraspType::Pinch, ""});
    const auto one = associate_semantics(std::vector<GraspPose>{at(0, 0, 0)}, {}, gps);
    CHECK(one[0].associated_grasp_point == 7);
    CHECK_FALSE(one[0].associated_functional_point.has_value());

    CHECK_THROWS_AS(associate_semantics(grasps, {}, {}), ArgumentError);
}

TEST_CASE("associate_semantics matches brute-force nearest neighbours") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<FunctionalPoint> fps;
        std::vector<GraspPoint> gps;
        for (int i = 0; i < 4; ++i) fps.push_back({10 + i, testing::random_vec(rng, -0.1, 0.1), "f", 0.5, ""});
        for (int i = 0; i < 3; ++i) gps.push_back({i, testing::random_vec(rng, -0.1, 0.1), GraspType::Power, ""});
        const auto grasps = testing::random_poses(rng, 25);
        const auto out = associate_semantics(grasps, fps, gps);
        for (std::size_t g = 0; g < grasps.size(); ++g) {
            int best_f = -1, best_g = -1;
            double df = 1e9, dg = 1e9;
            for (const auto& p : fps)
                if ((grasps[g].position - p.position).norm() < df) df = (grasps[g].position - p.position).norm(), best_f = p.id;
            for (const auto& p : gps)
                if ((grasps[g].position - p.position).norm() < dg) dg = (grasps[g].position - p.position).norm(), best_g = p.id;
            CHECK(out[g].associated_functional_point == best_f);
            CHECK(out[g].associated_grasp_point == best_g);
            CHECK(out[g].position == grasps[g].position);
        }
    }
}
