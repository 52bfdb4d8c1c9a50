#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "manitwin/annotation.hpp"

namespace manitwin {

struct FixtureBatch {
    std::vector<std::string> ids;
    std::vector<std::string> gate_failures;  // ids built to fail the quality gate
    FixtureTable table;
};

/// Writes `count` procedural meshes as <dir>/<id>.obj plus the matching mock
/// caption table as <dir>/fixtures.json. The first `gate_failures` ids (in a
/// seeded shuffle) are two disjoint parts and fail the single-object check.
/// Meshes come in arbitrary units; the table holds their real-world size.
FixtureBatch make_fixture_batch(const std::filesystem::path& dir, int count, int gate_failures, std::uint64_t seed);

}  // namespace manitwin
