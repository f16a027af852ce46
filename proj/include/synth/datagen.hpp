#pragma once

#include "synth/learn.hpp"
#include "synth/optimize.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace synth {

enum class Alignment { none, translation };

/// Per-pixel median over the (optionally translation-aligned) frames; the
/// transient foreground object drops out wherever it covers a pixel in
/// fewer than half of them. Alignment searches integer offsets in +-8 px
/// maximizing normalized correlation with the first frame.
Image extract_background(const std::vector<Image>& frames, Alignment align);

/// Uniform sampling intervals per pose coordinate
/// (alpha, beta, gamma, tx, ty).
struct PoseRanges {
    std::array<std::pair<double, double>, 5> range;

    static PoseRanges around(double tx_lo, double tx_hi, double ty_lo,
                             double ty_hi);
};

Pose sample_pose(const PoseRanges& ranges, Rng& rng);

struct ManifestRow {
    std::string path;              // relative to the manifest file
    std::string label;             // "pos" | "neg"
    std::string source;            // "real" | "synthetic" | "perturbed"
    std::string seed_id;           // empty when not applicable
    std::optional<Theta> theta;    // empty for real/negative rows
};

/// CSV index of a generated dataset:
/// path,label,source,seed_id,alpha,...,w_d (theta columns empty when absent)
struct DatasetManifest {
    std::vector<ManifestRow> rows;

    void save(const std::string& path) const;
    static DatasetManifest load(const std::string& path);
};

/// Mass-generates synthetic positives: for every fit, `per_seed` images
/// with the fitted capture parameters retained verbatim and the pose drawn
/// uniformly from `ranges`. Backgrounds are cycled across outputs; image
/// `index` of a fit reuses the noise stream noise_seed_for(seed_id, index),
/// so index 0 under degenerate ranges regenerates the fitted image
/// bitwise. Files are written under out_dir as PGM.
DatasetManifest synthesize_dataset(const std::vector<FitResult>& fits,
                                   const Mesh& mesh,
                                   const std::vector<Image>& backgrounds,
                                   int per_seed, const PoseRanges& ranges,
                                   const RenderConfig& cfg, Rng& rng,
                                   const std::string& out_dir, int jobs = 1);

/// One image per given theta (pose included), fresh noise stream each;
/// used for the uniform-random-parameter baseline.
DatasetManifest synthesize_dataset_from_thetas(
    const std::vector<Theta>& thetas, const Mesh& mesh,
    const std::vector<Image>& backgrounds, const RenderConfig& cfg, Rng& rng,
    const std::string& out_dir, int jobs = 1);

/// One draw of the classical augmentation baseline, applied in order:
/// rotation, translation, mirroring, blur, additive noise.
struct Perturbation {
    double angle = 0;       // radians
    double dx = 0, dy = 0;  // pixels
    bool mirror = false;
    double blur_sigma = 0;
    double noise_sigma = 0;
};

Perturbation sample_perturbation(Rng& rng);
Image apply_perturbation(const Image& img, const Perturbation& p, Rng& rng);

/// Perturbed copies of real images (rotation +-15deg, translation +-3 px,
/// mirroring p=1/2, blur sigma in [0,1], noise sigma in [0,0.03]).
DatasetManifest perturb_real(const std::vector<Image>& images, int per_image,
                             Rng& rng, const std::string& out_dir);

/// n square crops at uniform in-bounds positions of randomly chosen
/// backgrounds, labeled -1.
LabeledPatchSet sample_negatives(const std::vector<Image>& backgrounds, int n,
                                 int size, Rng& rng);

/// Capture parameters sampled coordinate-wise uniformly between the
/// minimum and maximum fitted values; poses drawn from `ranges`.
std::vector<Theta> sample_theta_uniform(const std::vector<FitResult>& fits,
                                        int n, const PoseRanges& ranges,
                                        Rng& rng);

} // namespace synth
