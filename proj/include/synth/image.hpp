#pragma once

#include <string>
#include <vector>

namespace synth {

/// Dense raster with float intensities in [0,1], row-major and
/// channel-interleaved. Every public operation clamps on write, so a
/// constructed Image always satisfies the [0,1] invariant.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels = 1, double fill = 0.0);

    static Image from_pixels(int width, int height, int channels,
                             std::vector<double> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double at(int x, int y, int c = 0) const {
        return pixels_[index(x, y, c)];
    }

    /// Edge-replicated read: coordinates are clamped into bounds.
    double at_clamped(int x, int y, int c = 0) const;

    void set(int x, int y, double v, int c = 0) {
        pixels_[index(x, y, c)] = clamp01(v);
    }

    const std::vector<double>& pixels() const { return pixels_; }

    /// Single channel extracted as a grayscale image.
    Image channel(int c) const;

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               channels_ == other.channels_;
    }

    static double clamp01(double v) {
        return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }

private:
    size_t index(int x, int y, int c) const {
        return (static_cast<size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<double> pixels_;
};

Image stack_channels(const Image& r, const Image& g, const Image& b);

/// Per-pixel boolean annotation; dimensions must match the annotated image.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    Mask() = default;
    Mask(int w, int h, bool fill = false)
        : width(w), height(h),
          bits(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const {
        return bits[static_cast<size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
    }
    bool any() const;
    bool matches(const Image& img) const {
        return width == img.width() && height == img.height();
    }
};

/// Chebyshev dilation by `radius` (separable box max).
Mask dilate(const Mask& mask, int radius);

/// Normalized convolution kernel; height == 1 marks a separable 1D kernel.
/// Taps sum to 1 within 1e-9 and side lengths are odd.
struct Kernel {
    int width = 1;
    int height = 1;
    std::vector<double> taps{1.0};

    bool is_1d() const { return height == 1; }
    double at(int x, int y = 0) const {
        return taps[static_cast<size_t>(y) * width + x];
    }
};

/// 1D Gaussian, radius ceil(3*sigma); sigma == 0 gives the single-tap
/// identity.
Kernel gaussian_kernel(double sigma);

/// 2D anisotropic Gaussian on a square grid of half-side
/// ceil(3*max(sigma_u, sigma_v)), axes rotated by `alpha`. A zero sigma
/// collapses that axis to a delta. Equal sigmas produce a kernel that is
/// bitwise independent of alpha.
Kernel oriented_gaussian_kernel(double sigma_u, double sigma_v, double alpha);

/// Convolution with edge replication. 1D kernels are applied separably
/// (horizontal then vertical), equivalent to their outer product.
Image convolve(const Image& img, const Kernel& kernel);

/// Masked variant: only masked pixels are rewritten and only masked source
/// pixels contribute; contributions are renormalized by the in-mask tap
/// weight. 1D kernels are expanded to their outer product here.
Image convolve(const Image& img, const Kernel& kernel, const Mask& support);

Image resize_bilinear(const Image& img, int new_width, int new_height);

/// Loads an 8-bit grayscale PGM (P5) or an 8-bit gray / 24-bit RGB PNG,
/// mapping intensities linearly from [0,255] to [0,1].
Image load_image(const std::string& path);

/// Writes 8-bit output, intensity v stored as round(v*255) (half-up).
/// Format chosen by extension: .pgm (single channel) or .png.
void save_image(const Image& img, const std::string& path);

} // namespace synth
