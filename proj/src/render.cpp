#include "manitwin/geometry/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <png.h>

#include "manitwin/errors.hpp"
#include "manitwin/io_util.hpp"

namespace manitwin {

Eigen::Vector2d project_to_pixels(const OrthoCamera& camera, const Vector3d& p, int width, int height) {
    const Vector3d rel = p - camera.target;
    return {0.5 * width + camera.pixels_per_meter * camera.right().dot(rel),
            0.5 * height - camera.pixels_per_meter * camera.screen_up().dot(rel)};
}

RenderView render_view(const TriMesh& mesh, const OrthoCamera& camera, int width, int height, int view_index) {
    if (mesh.empty()) throw DegenerateMeshError("render_view: mesh has no faces");
    if (width < 1 || height < 1) throw ArgumentError("render_view: image must be at least 1x1");

    RenderView view;
    view.width = width;
    view.height = height;
    view.view_index = view_index;
    view.camera = camera;
    view.pixels.assign(static_cast<std::size_t>(3 * width * height), kBackground);
    std::vector<double> depth(static_cast<std::size_t>(width * height), std::numeric_limits<double>::infinity());

    const Vector3d dir = camera.direction.normalized();
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        std::array<Eigen::Vector2d, 3> s;
        std::array<double, 3> z;
        for (int c = 0; c < 3; ++c) {
            const Vector3d p = mesh.corner(f, c);
            s[static_cast<std::size_t>(c)] = project_to_pixels(camera, p, width, height);
            z[static_cast<std::size_t>(c)] = dir.dot(p - camera.target);
        }
        const auto edge = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
            return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
        };
        const double area = edge(s[0], s[1], s[2]);
        if (area == 0.0) continue;

        const Vector3d n = (mesh.corner(f, 1) - mesh.corner(f, 0)).cross(mesh.corner(f, 2) - mesh.corner(f, 0));
        const double shade = 0.25 + 0.75 * std::abs(n.normalized().dot(dir));
        const auto value = static_cast<std::uint8_t>(std::lround(200.0 * shade));

        const double min_x = std::min({s[0].x(), s[1].x(), s[2].x()});
        const double max_x = std::max({s[0].x(), s[1].x(), s[2].x()});
        const double min_y = std::min({s[0].y(), s[1].y(), s[2].y()});
        const double max_y = std::max({s[0].y(), s[1].y(), s[2].y()});
        const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y - 0.5)));

        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Eigen::Vector2d p(x + 0.5, y + 0.5);
                const double w0 = edge(s[1], s[2], p) / area;
                const double w1 = edge(s[2], s[0], p) / area;
                const double w2 = edge(s[0], s[1], p) / area;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double d = w0 * z[0] + w1 * z[1] + w2 * z[2];
                const auto idx = static_cast<std::size_t>(y * width + x);
                if (d >= depth[idx]) continue;
                depth[idx] = d;
                view.pixels[3 * idx] = view.pixels[3 * idx + 1] = view.pixels[3 * idx + 2] = value;
            }
        }
    }
    return view;
}

OrthoCamera ring_camera(const TriMesh& mesh, int index, int count, int width, int height) {
    const Vector3d lo = mesh.vertices.colwise().minCoeff().transpose();
    const Vector3d hi = mesh.vertices.colwise().maxCoeff().transpose();
    const Vector3d center = 0.5 * (lo + hi);
    double radius = 0.0;
    for (Index i = 0; i < mesh.num_vertices(); ++i) radius = std::max(radius, (mesh.vertex(i) - center).norm());
    if (!(radius > 0.0)) radius = 1.0;

    const double elevation = kRingElevationDeg * std::numbers::pi / 180.0;
    const double azimuth = 2.0 * std::numbers::pi * index / count;
    const Vector3d eye(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                       std::sin(elevation));

    OrthoCamera cam;
    cam.direction = -eye;
    cam.up = kWorldUp;
    cam.target = center;
    cam.pixels_per_meter = std::min(width, height) / (2.2 * radius);
    return cam;
}

std::vector<RenderView> render_views(const TriMesh& mesh, int n_views, int width, int height) {
    if (n_views < 1) throw ArgumentError("render_views: need at least one view");
    if (mesh.empty()) throw DegenerateMeshError("render_views: mesh has no faces");
    std::vector<RenderView> views;
    views.reserve(static_cast<std::size_t>(n_views));
    for (int i = 0; i < n_views; ++i)
        views.push_back(render_view(mesh, ring_camera(mesh, i, n_views, width, height), width, height, i));
    return views;
}

std::string encode_png(const RenderView& view) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("png: cannot create write struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png: cannot create info struct");
    }

    std::string out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("png: encoding failed");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t len) {
            static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), len);
        },
        nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(view.width), static_cast<png_uint_32>(view.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < view.height; ++y) {
        auto row = const_cast<png_bytep>(view.pixels.data() + static_cast<std::size_t>(3 * y * view.width));
        png_write_row(png, row);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const RenderView& view, const std::filesystem::path& path) {
    write_file_atomic(path, encode_png(view));
}


RenderView decode_png(std::string_view bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw ParseError(std::string("png: ") + image.message);
    image.format = PNG_FORMAT_RGB;
    RenderView view;
    view.width = static_cast<int>(image.width);
    view.height = static_cast<int>(image.height);
    view.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, view.pixels.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ParseError(std::string("png: ") + image.message);
    }
    return view;
}

}  // namespace manitwin
