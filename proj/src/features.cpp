#include "synth/features.hpp"
#include "synth/errors.hpp"

#include <cmath>

namespace synth {

namespace {

constexpr double kEnergyEps = 1e-9;

inline void pixel_gradient(const Image& img, int x, int y, double& gx,
                           double& gy) {
    gx = img.at_clamped(x + 1, y) - img.at_clamped(x - 1, y);
    gy = img.at_clamped(x, y + 1) - img.at_clamped(x, y - 1);
}

/// unsigned gradient direction in [0, pi)
inline double unsigned_angle(double gx, double gy) {
    double a = std::atan2(gy, gx);
    if (a < 0.0) a += M_PI;
    if (a >= M_PI) a -= M_PI;
    return a;
}

inline int hard_bin(double angle, int num_bins) {
    const int b = static_cast<int>(angle / (M_PI / num_bins));
    return b >= num_bins ? num_bins - 1 : b;
}

} // namespace

std::vector<double> compute_hog(const Image& img, const HogConfig& cfg) {
    require(img.channels() == 1, ErrorKind::invalid_argument,
            "compute_hog: grayscale input required");
    require(cfg.cell >= 1 && cfg.bins >= 1 && cfg.block >= 1 &&
                cfg.block_stride >= 1,
            ErrorKind::invalid_argument, "compute_hog: bad config");
    require(img.width() % cfg.cell == 0 && img.height() % cfg.cell == 0,
            ErrorKind::invalid_argument,
            "compute_hog: image dimensions must be divisible by cell size");

    const int cells_x = img.width() / cfg.cell;
    const int cells_y = img.height() / cfg.cell;
    std::vector<double> hist(
        static_cast<size_t>(cells_x) * cells_y * cfg.bins, 0.0);

    const double bin_width = M_PI / cfg.bins;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double gx, gy;
            pixel_gradient(img, x, y, gx, gy);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            // linear split between the two nearest bin centers (centers at
            // i * bin_width)
            const double b = unsigned_angle(gx, gy) / bin_width;
            const int i0 = static_cast<int>(std::floor(b));
            const double frac = b - i0;
            const int bin0 = i0 % cfg.bins;
            const int bin1 = (i0 + 1) % cfg.bins;
            const size_t cell_base =
                (static_cast<size_t>(y / cfg.cell) * cells_x + x / cfg.cell) *
                cfg.bins;
            hist[cell_base + bin0] += mag * (1.0 - frac);
            hist[cell_base + bin1] += mag * frac;
        }
    }

    const int blocks_x =
        cells_x >= cfg.block ? (cells_x - cfg.block) / cfg.block_stride + 1 : 0;
    const int blocks_y =
        cells_y >= cfg.block ? (cells_y - cfg.block) / cfg.block_stride + 1 : 0;
    const int block_len = cfg.block * cfg.block * cfg.bins;

    std::vector<double> feature;
    feature.reserve(static_cast<size_t>(blocks_x) * blocks_y * block_len);
    constexpr double kNormEps = 1e-5;
    std::vector<double> block(block_len);
    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            int k = 0;
            double sq = 0.0;
            for (int cy = 0; cy < cfg.block; ++cy)
                for (int cx = 0; cx < cfg.block; ++cx) {
                    const size_t cell_base =
                        (static_cast<size_t>(by * cfg.block_stride + cy) *
                             cells_x +
                         bx * cfg.block_stride + cx) *
                        cfg.bins;
                    for (int o = 0; o < cfg.bins; ++o) {
                        block[k] = hist[cell_base + o];
                        sq += block[k] * block[k];
                        ++k;
                    }
                }
            const double norm = std::sqrt(sq + kNormEps * kNormEps);
            for (int i = 0; i < block_len; ++i)
                feature.push_back(block[i] / norm);
        }
    }
    return feature;
}

double gradient_energy(const Image& img, const PixelRect& region,
                       int orientation, int num_bins) {
    require(img.channels() == 1, ErrorKind::invalid_argument,
            "gradient_energy: grayscale input required");
    require(region.w > 0 && region.h > 0, ErrorKind::invalid_argument,
            "gradient_energy: empty region");
    require(region.x >= 0 && region.y >= 0 &&
                region.x + region.w <= img.width() &&
                region.y + region.h <= img.height(),
            ErrorKind::invalid_argument, "gradient_energy: region out of bounds");
    require(orientation >= 0 && orientation < num_bins,
            ErrorKind::invalid_argument, "gradient_energy: bad orientation bin");

    double in_bin = 0.0, total = 0.0;
    for (int y = region.y; y < region.y + region.h; ++y)
        for (int x = region.x; x < region.x + region.w; ++x) {
            double gx, gy;
            pixel_gradient(img, x, y, gx, gy);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            total += mag;
            if (hard_bin(unsigned_angle(gx, gy), num_bins) == orientation)
                in_bin += mag;
        }
    return in_bin / (total + kEnergyEps);
}

bool eval_weak(const WeakLearner& h, const Image& img, int num_bins) {
    return gradient_energy(img, h.region, h.orientation, num_bins) > h.tau;
}

OrientedEnergyMap::OrientedEnergyMap(const Image& img, int num_bins)
    : width_(img.width()), height_(img.height()), num_bins_(num_bins) {
    require(img.channels() == 1, ErrorKind::invalid_argument,
            "OrientedEnergyMap: grayscale input required");
    require(num_bins >= 1, ErrorKind::invalid_argument,
            "OrientedEnergyMap: need at least one bin");

    const size_t stride = static_cast<size_t>(width_ + 1);
    const size_t plane = stride * (height_ + 1);
    bin_integrals_.assign(num_bins_, std::vector<double>(plane, 0.0));
    total_integral_.assign(plane, 0.0);

    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            double gx, gy;
            pixel_gradient(img, x, y, gx, gy);
            const double mag = std::sqrt(gx * gx + gy * gy);
            const int bin =
                mag == 0.0 ? 0 : hard_bin(unsigned_angle(gx, gy), num_bins_);
            const size_t i = (y + 1) * stride + (x + 1);
            for (int o = 0; o < num_bins_; ++o) {
                const double v = (o == bin) ? mag : 0.0;
                bin_integrals_[o][i] = v + bin_integrals_[o][i - 1] +
                                       bin_integrals_[o][i - stride] -
                                       bin_integrals_[o][i - stride - 1];
            }
            total_integral_[i] = mag + total_integral_[i - 1] +
                                 total_integral_[i - stride] -
                                 total_integral_[i - stride - 1];
        }
    }
}

double OrientedEnergyMap::rect_sum(const std::vector<double>& integral, int x0,
                                   int y0, int x1, int y1) const {
    const size_t stride = static_cast<size_t>(width_ + 1);
    return integral[static_cast<size_t>(y1) * stride + x1] -
           integral[static_cast<size_t>(y0) * stride + x1] -
           integral[static_cast<size_t>(y1) * stride + x0] +
           integral[static_cast<size_t>(y0) * stride + x0];
}

double OrientedEnergyMap::energy(const PixelRect& region, int orientation,
                                 int x_offset, int y_offset) const {
    const int x0 = region.x + x_offset, y0 = region.y + y_offset;
    const int x1 = x0 + region.w, y1 = y0 + region.h;
    require(x0 >= 0 && y0 >= 0 && x1 <= width_ && y1 <= height_,
            ErrorKind::invalid_argument, "energy: region out of bounds");
    require(orientation >= 0 && orientation < num_bins_,
            ErrorKind::invalid_argument, "energy: bad orientation bin");
    const double in_bin =
        rect_sum(bin_integrals_[orientation], x0, y0, x1, y1);
    const double total = rect_sum(total_integral_, x0, y0, x1, y1);
    return in_bin / (total + kEnergyEps);
}

} // namespace synth
