#include "synth/render.hpp"
#include "synth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace synth {

Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    require(n > 0.0, ErrorKind::invalid_argument, "cannot normalize zero vector");
    return {v.x / n, v.y / n, v.z / n};
}

double normalize_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    Mesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ss >> v.x >> v.y >> v.z) ||
                !std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
                fail(ErrorKind::corrupt_data,
                     path + ":" + std::to_string(lineno) + ": malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ss >> token) {
                // accept "i", "i/t", "i/t/n" forms; the leading index is used
                size_t pos = 0;
                long v = 0;
                try {
                    v = std::stol(token, &pos);
                } catch (const std::exception&) {
                    fail(ErrorKind::corrupt_data,
                         path + ":" + std::to_string(lineno) + ": malformed face");
                }
                if (pos != token.size() && token[pos] != '/')
                    fail(ErrorKind::corrupt_data,
                         path + ":" + std::to_string(lineno) + ": malformed face");
                if (v < 1 || v > static_cast<long>(mesh.vertices.size()))
                    fail(ErrorKind::corrupt_data,
                         path + ":" + std::to_string(lineno) +
                             ": face index out of range");
                idx.push_back(static_cast<int>(v - 1));
            }
            if (idx.size() < 3)
                fail(ErrorKind::corrupt_data,
                     path + ":" + std::to_string(lineno) + ": face needs 3+ vertices");
            for (size_t i = 1; i + 1 < idx.size(); ++i)
                mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
        }
        // all other line types ignored
    }
    require(!mesh.faces.empty(), ErrorKind::corrupt_data,
            path + ": mesh has no faces");
    return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    out.precision(17);
    for (const Vec3& v : mesh.vertices)
        out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& f : mesh.faces)
        out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

namespace {

struct ScreenVertex {
    double x, y, z;
};

Vec3 rotate(const Vec3& v, double alpha, double beta, double gamma) {
    // Rx
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    Vec3 a{v.x, ca * v.y - sa * v.z, sa * v.y + ca * v.z};
    // Ry
    const double cb = std::cos(beta), sb = std::sin(beta);
    Vec3 b{cb * a.x + sb * a.z, a.y, -sb * a.x + cb * a.z};
    // Rz
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    return {cg * b.x - sg * b.y, sg * b.x + cg * b.y, b.z};
}

inline double edge_function(double ax, double ay, double bx, double by,
                            double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// With the E >= 0 interior convention used here (y grows downward), a
// boundary pixel belongs to the triangle iff its edge is horizontal going
// +x ("top") or going upward in y ("left").
inline bool is_top_left(double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

} // namespace

RenderResult render_object(const Mesh& mesh, const Pose& pose,
                           double diffuse_weight, const RenderConfig& cfg) {
    require(cfg.ortho_scale > 0.0, ErrorKind::invalid_argument,
            "render_object: ortho_scale must be positive");
    require(!mesh.faces.empty(), ErrorKind::invalid_argument,
            "render_object: mesh has no faces");

    const Vec3 light = normalized(cfg.light_dir);
    RenderResult res{Image(cfg.width, cfg.height, 1, 0.0),
                     Mask(cfg.width, cfg.height)};
    std::vector<double> depth(static_cast<size_t>(cfg.width) * cfg.height,
                              std::numeric_limits<double>::infinity());

    std::vector<ScreenVertex> sv(mesh.vertices.size());
    std::vector<Vec3> rv(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        rv[i] = rotate(mesh.vertices[i], pose.alpha, pose.beta, pose.gamma);
        sv[i] = {cfg.ortho_scale * rv[i].x + pose.tx,
                 cfg.ortho_scale * rv[i].y + pose.ty, rv[i].z};
    }

    for (const auto& face : mesh.faces) {
        ScreenVertex v0 = sv[face[0]], v1 = sv[face[1]], v2 = sv[face[2]];

        // face normal in rotated space, oriented toward the camera (which
        // looks along +z, so camera-facing normals have z <= 0)
        const Vec3 e1{rv[face[1]].x - rv[face[0]].x,
                      rv[face[1]].y - rv[face[0]].y,
                      rv[face[1]].z - rv[face[0]].z};
        const Vec3 e2{rv[face[2]].x - rv[face[0]].x,
                      rv[face[2]].y - rv[face[0]].y,
                      rv[face[2]].z - rv[face[0]].z};
        Vec3 n{e1.y * e2.z - e1.z * e2.y, e1.z * e2.x - e1.x * e2.z,
               e1.x * e2.y - e1.y * e2.x};
        const double nlen = std::sqrt(n.x * n.x + n.y * n.y + n.z * n.z);
        if (nlen == 0.0) continue; // degenerate face
        n = {n.x / nlen, n.y / nlen, n.z / nlen};
        if (n.z > 0.0) n = {-n.x, -n.y, -n.z};

        const double shade = Image::clamp01(
            cfg.ambient +
            diffuse_weight *
                std::max(0.0, n.x * light.x + n.y * light.y + n.z * light.z));

        double area2 = edge_function(v0.x, v0.y, v1.x, v1.y, v2.x, v2.y);
        if (area2 == 0.0) continue;
        if (area2 < 0.0) {
            std::swap(v1, v2);
            area2 = -area2;
        }

        const int min_x = std::max(
            0, static_cast<int>(std::floor(std::min({v0.x, v1.x, v2.x}) - 0.5)));
        const int max_x = std::min(
            cfg.width - 1,
            static_cast<int>(std::ceil(std::max({v0.x, v1.x, v2.x}))));
        const int min_y = std::max(
            0, static_cast<int>(std::floor(std::min({v0.y, v1.y, v2.y}) - 0.5)));
        const int max_y = std::min(
            cfg.height - 1,
            static_cast<int>(std::ceil(std::max({v0.y, v1.y, v2.y}))));

        for (int py = min_y; py <= max_y; ++py) {
            for (int px = min_x; px <= max_x; ++px) {
                const double cx = px + 0.5, cy = py + 0.5;
                const double e0 = edge_function(v0.x, v0.y, v1.x, v1.y, cx, cy);
                const double e1f = edge_function(v1.x, v1.y, v2.x, v2.y, cx, cy);
                const double e2f = edge_function(v2.x, v2.y, v0.x, v0.y, cx, cy);
                const bool in0 =
                    e0 > 0.0 || (e0 == 0.0 && is_top_left(v0.x, v0.y, v1.x, v1.y));
                const bool in1 =
                    e1f > 0.0 || (e1f == 0.0 && is_top_left(v1.x, v1.y, v2.x, v2.y));
                const bool in2 =
                    e2f > 0.0 || (e2f == 0.0 && is_top_left(v2.x, v2.y, v0.x, v0.y));
                if (!in0 || !in1 || !in2) continue;

                // barycentric depth (weights opposite each vertex)
                const double z =
                    (e1f * v0.z + e2f * v1.z + e0 * v2.z) / area2;
                const size_t idx = static_cast<size_t>(py) * cfg.width + px;
                if (z < depth[idx]) {
                    depth[idx] = z;
                    res.layer.set(px, py, shade);
                    res.mask.set(px, py, true);
                }
            }
        }
    }
    return res;
}

Image composite(const Image& layer, const Mask& mask, const Image& background) {
    require(layer.same_shape(background), ErrorKind::dimension_mismatch,
            "composite: layer and background dimensions differ");
    require(mask.matches(layer), ErrorKind::dimension_mismatch,
            "composite: mask dimensions differ");
    Image out = background;
    for (int y = 0; y < layer.height(); ++y)
        for (int x = 0; x < layer.width(); ++x)
            if (mask.at(x, y))
                for (int c = 0; c < layer.channels(); ++c)
                    out.set(x, y, layer.at(x, y, c), c);
    return out;
}

} // namespace synth
