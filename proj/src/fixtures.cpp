#include "manitwin/fixtures.hpp"

#include <algorithm>
#include <cstdio>

#include "manitwin/errors.hpp"
#include "manitwin/geometry/mesh_io.hpp"
#include "manitwin/geometry/random.hpp"
#include "manitwin/geometry/shapes.hpp"
#include "manitwin/io_util.hpp"

namespace manitwin {

namespace {

struct Kind {
    const char* category;
    const char* shape;
    const char* function;
    double min_size;  // real-world longest axis range, m
    double max_size;
};

constexpr Kind kKinds[] = {
    {"box", "boxy", "holds small items", 0.05, 0.09},
    {"mug", "cylindrical", "holds liquid", 0.07, 0.11},
    {"ball", "round", "rolls", 0.05, 0.14},
    {"doorstop", "wedge", "holds a door open", 0.06, 0.12},
    {"bracket", "l-shaped", "joins two parts", 0.08, 0.15},
};

constexpr const char* kColors[] = {"red", "blue", "green", "white", "black", "yellow"};
constexpr const char* kMaterials[] = {"plastic", "rubber", "wood", "metal", "ceramic"};

TriMesh build(std::size_t kind, Rng& rng) {
    const double s = uniform(rng, 0.5, 3.0);  // arbitrary source units
    switch (kind) {
        case 0: return shapes::box(s * Vector3d(1.0, uniform(rng, 0.5, 0.9), uniform(rng, 0.4, 0.9)));
        case 1: return shapes::cylinder(s * uniform(rng, 0.3, 0.45), s, 24);
        case 2: return shapes::uv_sphere(s, 10, 20);
        case 3: return shapes::wedge(s * 0.5, s * uniform(rng, 0.3, 0.5), s * uniform(rng, 0.3, 0.6));
        default: return shapes::l_shape(s, s * 0.6, s * 0.2, s * uniform(rng, 0.15, 0.3));
    }
}

}  // namespace

FixtureBatch make_fixture_batch(const std::filesystem::path& dir, int count, int gate_failures, std::uint64_t seed) {
    if (count < 0 || gate_failures < 0 || gate_failures > count)
        throw ArgumentError("make_fixture_batch: need 0 <= gate_failures <= count");
    std::filesystem::create_directories(dir);
    Rng rng(seed);

    std::vector<int> order(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> fails(static_cast<std::size_t>(count), false);
    for (int k = 0; k < gate_failures; ++k) fails[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

    FixtureBatch batch;
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "obj_%03d", i);
        const std::string id = name;
        const std::size_t kind = static_cast<std::size_t>(i) % std::size(kKinds);
        TriMesh mesh = build(kind, rng);
        if (fails[static_cast<std::size_t>(i)]) {
            // A second, equally large part well clear of the first.
            TriMesh other = mesh;
            other.vertices.col(0).array() += 4.0 * (mesh.vertices.col(0).maxCoeff() - mesh.vertices.col(0).minCoeff());
            mesh = shapes::merge(mesh, other);
            batch.gate_failures.push_back(id);
        }
        save_mesh_file(mesh, dir / (id + ".obj"));

        const Kind& k = kKinds[kind];
        CaptionFixture f;
        f.category = k.category;
        f.shape = k.shape;
        f.function = k.function;
        f.color = kColors[uniform_index(rng, std::size(kColors))];
        f.material = kMaterials[uniform_index(rng, std::size(kMaterials))];
        f.longest_axis_m = uniform(rng, k.min_size, k.max_size);
        batch.table.add(id, f);
        batch.ids.push_back(id);
    }
    write_file_atomic(dir / "fixtures.json", batch.table.to_json().dump(2) + "\n");
    return batch;
}

}  // namespace manitwin
