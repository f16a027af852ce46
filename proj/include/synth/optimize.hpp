#pragma once

#include "synth/effects.hpp"
#include "synth/similarity.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace synth {

/// Annealing schedule and the per-coordinate proposal scales / bounds for
/// the 11 theta coordinates (ordered as Theta::kNames).
struct SAConfig {
    double initial_temperature = 0.0; // <= 0: start at the initial objective
    double cooling = 0.93;
    int steps_per_temperature = 50;
    int max_iterations = 7500;
    std::array<double, Theta::kDim> proposal_std{};
    std::array<double, Theta::kDim> lower{};
    std::array<double, Theta::kDim> upper{};
};

/// Defaults sized for 40x40 patches: angles +-pi, translations across the
/// image, sigma_s / sigma_m in [0,5] px, sigma_n in [0,0.2], w_d in [0,1].
SAConfig default_sa_config(int image_width, int image_height);

struct FitResult {
    Theta theta;
    double objective = 0.0;
    std::vector<double> trace; // best objective so far, one entry per iteration
    std::string seed_id;
};

using SaObserver = std::function<void(int iteration, const Theta& proposal,
                                      double value, bool accepted)>;

/// Single-coordinate Gaussian-proposal simulated annealing with geometric
/// cooling. Proposals are clamped to the configured bounds; a move is
/// accepted when it does not increase the objective, otherwise with
/// probability exp(-delta/T). Stops at the iteration cap or once T falls
/// below 1e-6 of the starting temperature. Returns the best theta ever
/// visited; deterministic for a fixed generator seed.
FitResult simulated_annealing(const std::function<double(const Theta&)>& objective,
                              const Theta& theta0, const SAConfig& cfg,
                              Rng& rng, const SaObserver& observer = nullptr);

/// Fits theta to one real image (Eq. of one seed): pose starts at the
/// provided object center with zero angles, capture parameters start at a
/// uniform random point within bounds, and the objective is
/// dist(real, synthesize(theta, background)) with the synthesis noise
/// stream held fixed across evaluations (derived from seed_id).
FitResult fit_theta(const Image& real, const Image& background,
                    const Mesh& mesh, double center_x, double center_y,
                    const DistanceSpec& dist, const SAConfig& cfg,
                    const RenderConfig& render_cfg, const std::string& seed_id,
                    Rng& rng);

/// Per-channel variant for RGB inputs: each channel is fitted
/// independently on its grayscale pair, all three from the same generator
/// seed. Result seed ids get '#r', '#g', '#b' suffixes.
std::array<FitResult, 3> fit_theta_rgb(const Image& real,
                                       const Image& background,
                                       const Mesh& mesh, double center_x,
                                       double center_y,
                                       const DistanceSpec& dist,
                                       const SAConfig& cfg,
                                       const RenderConfig& render_cfg,
                                       const std::string& seed_id, Rng& rng);

/// Noise stream id shared by fitting and dataset generation: image `index`
/// generated for seed `seed_id` always uses this stream, and index 0 is
/// the stream the fit itself was scored with.
uint64_t noise_seed_for(const std::string& seed_id, uint64_t index);

} // namespace synth
