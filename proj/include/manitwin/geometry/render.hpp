#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "manitwin/geometry/types.hpp"

namespace manitwin {

/// Orthographic camera. `direction` points from the camera into the scene.
struct OrthoCamera {
    Vector3d direction{-1.0, 0.0, 0.0};
    Vector3d up = kWorldUp;
    Vector3d target = Vector3d::Zero();
    double pixels_per_meter = 100.0;

    Vector3d right() const { return direction.cross(up).normalized(); }
    Vector3d screen_up() const { return right().cross(direction).normalized(); }
};

struct RenderView {
    int width = 0;
    int height = 0;
    int view_index = 0;
    // Row-major RGB, row 0 at the top.
    std::vector<std::uint8_t> pixels;
    OrthoCamera camera;

    std::array<std::uint8_t, 3> at(int x, int y) const {
        const auto i = static_cast<std::size_t>(3 * (y * width + x));
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
};

inline constexpr std::uint8_t kBackground = 255;
inline constexpr int kDefaultViewCount = 8;
inline constexpr double kRingElevationDeg = 30.0;

/// Continuous pixel coordinates of `p`; pixel (i, j) spans [i, i+1) x [j, j+1).
Eigen::Vector2d project_to_pixels(const OrthoCamera& camera, const Vector3d& p, int width, int height);

/// Flat-shaded z-buffered rasterization sampled at pixel centers.
RenderView render_view(const TriMesh& mesh, const OrthoCamera& camera, int width, int height,
                       int view_index = 0);

/// Camera `index` of `count` on a ring 30 degrees above the horizon, framed
/// so the whole mesh fits the image.
OrthoCamera ring_camera(const TriMesh& mesh, int index, int count, int width, int height);

std::vector<RenderView> render_views(const TriMesh& mesh, int n_views, int width, int height);

std::string encode_png(const RenderView& view);
void write_png(const RenderView& view, const std::filesystem::path& path);
/// Pixels and size of an 8-bit PNG, converted to RGB. The camera is left at
/// its default. Throws ParseError on malformed data.
RenderView decode_png(std::string_view bytes);

}  // namespace manitwin
