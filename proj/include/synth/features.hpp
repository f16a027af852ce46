#pragma once

#include "synth/image.hpp"

#include <string>
#include <vector>

namespace synth {

struct HogConfig {
    int cell = 8;         // pixels
    int block = 2;        // cells per block side
    int bins = 9;         // unsigned orientation bins
    int block_stride = 1; // cells
};

/// HoG descriptor: centered-difference gradients, magnitude votes split
/// linearly between the two nearest unsigned-orientation bins, cell
/// histograms grouped into blocks, each block L2-normalized with eps=1e-5
/// in quadrature, concatenated in row-major block order.
std::vector<double> compute_hog(const Image& img, const HogConfig& cfg);

struct PixelRect {
    int x = 0, y = 0, w = 0, h = 0;
};

/// Fraction of the region's gradient magnitude falling in orientation bin
/// `orientation` out of `num_bins` equal sectors of unsigned gradient
/// direction (hard assignment): E = mass_o / (total + 1e-9).
double gradient_energy(const Image& img, const PixelRect& region,
                       int orientation, int num_bins);

/// Gradient-energy threshold unit; fires when E(X, R, o) > tau.
struct WeakLearner {
    PixelRect region;
    int orientation = 0;
    double tau = 0.5;
    double alpha = 1.0;
};

bool eval_weak(const WeakLearner& h, const Image& img, int num_bins);

enum class EnsembleProvenance { random, adaboost };

struct WeakLearnerEnsemble {
    std::vector<WeakLearner> learners;
    EnsembleProvenance provenance = EnsembleProvenance::random;
    int num_bins = 8;
};

/// Integral images over orientation-binned gradient magnitude. Lets a
/// region's gradient energy be evaluated in O(1); agrees with
/// gradient_energy up to summation order.
class OrientedEnergyMap {
public:
    OrientedEnergyMap(const Image& img, int num_bins);

    int width() const { return width_; }
    int height() const { return height_; }
    int num_bins() const { return num_bins_; }

    /// gradient energy of `region` translated by (x_offset, y_offset)
    double energy(const PixelRect& region, int orientation, int x_offset = 0,
                  int y_offset = 0) const;

private:
    double rect_sum(const std::vector<double>& integral, int x0, int y0,
                    int x1, int y1) const;

    int width_ = 0;
    int height_ = 0;
    int num_bins_ = 0;
    std::vector<std::vector<double>> bin_integrals_;
    std::vector<double> total_integral_;
};

} // namespace synth
