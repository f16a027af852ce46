#pragma once

#include "synth/image.hpp"
#include "synth/render.hpp"
#include "synth/rng.hpp"

#include <array>
#include <string>
#include <vector>

namespace synth {

/// The six non-pose components of Theta: boundary blur, motion blur axes
/// and direction, additive noise level, diffuse weight.
struct CaptureParams {
    double sigma_s = 0;  // boundary blur, pixels
    double sigma_mu = 0; // motion blur major axis, pixels
    double sigma_mv = 0; // motion blur minor axis, pixels
    double alpha_m = 0;  // motion direction, radians
    double sigma_n = 0;  // noise std, intensity units
    double w_d = 0.5;    // diffuse weight in [0,1]
};

/// Full 11-parameter rendering vector: 5 pose + 6 capture.
struct Theta {
    Pose pose;
    CaptureParams capture;

    static constexpr int kDim = 11;
    static const std::array<const char*, kDim> kNames;

    std::array<double, kDim> to_array() const;
    static Theta from_array(const std::array<double, kDim>& a);
    double coordinate(const std::string& name) const;
};

/// Anisotropic Gaussian blur of the masked pixels along the motion
/// direction; unmasked pixels are untouched.
Image motion_blur(const Image& img, const Mask& mask, double sigma_mu,
                  double sigma_mv, double alpha_m);

/// Isotropic Gaussian blur applied to the band of pixels within Chebyshev
/// distance ceil(3*sigma_s) of the mask boundary. The blur is computed over
/// the full composite so object and background intensities mix.
Image boundary_blur(const Image& img, const Mask& mask, double sigma_s);

/// Independent N(0, sigma_n^2) increments on masked pixels, clamped to
/// [0,1]. sigma_n == 0 leaves the image and the generator untouched.
Image add_object_noise(const Image& img, const Mask& mask, double sigma_n,
                       Rng& rng);

struct SynthResult {
    Image image;
    Mask mask; // silhouette before any blurring
};

/// The full synthesis pipeline S(theta, background): shaded render ->
/// motion blur on the object layer -> composite -> boundary blur ->
/// object noise. With all capture parameters zero this equals the plain
/// composite bitwise.
SynthResult synthesize(const Theta& theta, const Image& background,
                       const Mesh& mesh, const RenderConfig& cfg, Rng& rng);

/// Per-channel synthesis for RGB work: channel i of the output is the
/// grayscale pipeline run with thetas[i] on channel i of the background.
Image synthesize_rgb(const std::array<Theta, 3>& thetas,
                     const Image& background,
                     const Mesh& mesh, const RenderConfig& cfg,
                     const std::array<uint64_t, 3>& noise_seeds);

// ---------------------------------------------------------------------------
// Theta record file: one record per line,
//   seed_id alpha beta gamma tx ty sigma_s sigma_mu sigma_mv alpha_m sigma_n w_d
// '#' starts a comment. Values round-trip bit-exactly.
// ---------------------------------------------------------------------------

struct ThetaRecord {
    std::string seed_id;
    Theta theta;
};

void save_theta_records(const std::vector<ThetaRecord>& records,
                        const std::string& path);
void append_theta_records(const std::vector<ThetaRecord>& records,
                          const std::string& path);
std::vector<ThetaRecord> load_theta_records(const std::string& path);

} // namespace synth
