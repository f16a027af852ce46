#pragma once

#include "synth/image.hpp"

#include <array>
#include <string>
#include <vector>

namespace synth {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

Vec3 normalized(const Vec3& v);

/// Coarse triangle model of the target object.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces; // 0-based vertex indices
};

/// OBJ subset: `v x y z` and `f i j k` lines (1-based indices, polygon
/// faces fan-triangulated, other line types ignored).
Mesh load_mesh(const std::string& path);
void save_mesh(const Mesh& mesh, const std::string& path);

/// 5-parameter pose: rotations about x, y, z applied in that order plus an
/// image-plane translation in pixels. No scale (detection is multi-scale).
struct Pose {
    double alpha = 0, beta = 0, gamma = 0; // radians
    double tx = 0, ty = 0;                 // pixels
};

double normalize_angle(double a); // into (-pi, pi]

struct RenderConfig {
    int width = 40;
    int height = 40;
    double ortho_scale = 1.0;               // pixels per model unit
    Vec3 light_dir{0.30, -0.25, -0.92};     // unit vector, toward the light
    double ambient = 0.2;

    RenderConfig() { light_dir = normalized(light_dir); }
};

struct RenderResult {
    Image layer; // shaded object, zero outside the mask
    Mask mask;   // covered pixels
};

/// Orthographic flat-shaded rasterization with a depth buffer. Vertices are
/// rotated by Rz(gamma)*Ry(beta)*Rx(alpha), scaled by ortho_scale and
/// translated by (tx, ty). Pixel intensity under the mask is
/// clamp(ambient + w_d * max(0, n . light_dir)) with n the face normal
/// oriented toward the camera. Coverage uses pixel centers with the
/// top-left tie rule, so adjacent triangles partition shared edges.
RenderResult render_object(const Mesh& mesh, const Pose& pose,
                           double diffuse_weight, const RenderConfig& cfg);

/// layer where mask, background elsewhere.
Image composite(const Image& layer, const Mask& mask, const Image& background);

} // namespace synth
