#include "synth/image.hpp"
#include "synth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <png.h>

namespace synth {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels),
      pixels_(static_cast<size_t>(width) * height * channels,
              clamp01(fill)) {
    require(width > 0 && height > 0, ErrorKind::invalid_argument,
            "image dimensions must be positive");
    require(channels == 1 || channels == 3, ErrorKind::invalid_argument,
            "image must have 1 or 3 channels");
}

Image Image::from_pixels(int width, int height, int channels,
                         std::vector<double> pixels) {
    Image img(width, height, channels);
    require(pixels.size() == img.pixels_.size(), ErrorKind::invalid_argument,
            "pixel buffer size does not match dimensions");
    for (double& v : pixels) v = clamp01(v);
    img.pixels_ = std::move(pixels);
    return img;
}

double Image::at_clamped(int x, int y, int c) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return pixels_[index(x, y, c)];
}

Image Image::channel(int c) const {
    require(c >= 0 && c < channels_, ErrorKind::invalid_argument,
            "channel index out of range");
    Image out(width_, height_, 1);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            out.set(x, y, at(x, y, c));
    return out;
}

Image stack_channels(const Image& r, const Image& g, const Image& b) {
    require(r.channels() == 1 && g.channels() == 1 && b.channels() == 1,
            ErrorKind::dimension_mismatch, "stack_channels wants grayscale inputs");
    require(r.same_shape(g) && r.same_shape(b),
            ErrorKind::dimension_mismatch, "stack_channels dimension mismatch");
    Image out(r.width(), r.height(), 3);
    for (int y = 0; y < r.height(); ++y)
        for (int x = 0; x < r.width(); ++x) {
            out.set(x, y, r.at(x, y), 0);
            out.set(x, y, g.at(x, y), 1);
            out.set(x, y, b.at(x, y), 2);
        }
    return out;
}

bool Mask::any() const {
    return std::any_of(bits.begin(), bits.end(),
                       [](uint8_t b) { return b != 0; });
}

Mask dilate(const Mask& mask, int radius) {
    if (radius <= 0) return mask;
    Mask tmp(mask.width, mask.height);
    // horizontal pass
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            bool on = false;
            for (int dx = -radius; dx <= radius && !on; ++dx) {
                const int xx = x + dx;
                if (xx >= 0 && xx < mask.width && mask.at(xx, y)) on = true;
            }
            tmp.set(x, y, on);
        }
    Mask out(mask.width, mask.height);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            bool on = false;
            for (int dy = -radius; dy <= radius && !on; ++dy) {
                const int yy = y + dy;
                if (yy >= 0 && yy < mask.height && tmp.at(x, yy)) on = true;
            }
            out.set(x, y, on);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

Kernel gaussian_kernel(double sigma) {
    require(sigma >= 0.0, ErrorKind::invalid_argument,
            "gaussian_kernel: sigma must be nonnegative");
    if (sigma == 0.0) return Kernel{};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    Kernel k;
    k.width = 2 * radius + 1;
    k.height = 1;
    k.taps.assign(k.width, 0.0);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double t = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
        k.taps[i + radius] = t;
        sum += t;
    }
    for (double& t : k.taps) t /= sum;
    return k;
}

Kernel oriented_gaussian_kernel(double sigma_u, double sigma_v, double alpha) {
    require(sigma_u >= 0.0 && sigma_v >= 0.0, ErrorKind::invalid_argument,
            "oriented_gaussian_kernel: sigmas must be nonnegative");
    if (sigma_u == 0.0 && sigma_v == 0.0) return Kernel{};

    const int radius =
        static_cast<int>(std::ceil(3.0 * std::max(sigma_u, sigma_v)));
    const int side = 2 * radius + 1;
    Kernel k;
    k.width = side;
    k.height = side;
    k.taps.assign(static_cast<size_t>(side) * side, 0.0);

    const bool isotropic = sigma_u == sigma_v;
    const double c = std::cos(alpha);
    const double s = std::sin(alpha);
    // A zero-sigma axis keeps only grid points whose rotated coordinate
    // rounds to zero (a one-pixel-wide line along the other axis).
    auto axis_weight = [](double coord, double sigma) {
        if (sigma > 0.0)
            return std::exp(-coord * coord / (2.0 * sigma * sigma));
        return std::abs(coord) <= 0.5 ? 1.0 : 0.0;
    };

    double sum = 0.0;
    for (int y = -radius; y <= radius; ++y) {
        for (int x = -radius; x <= radius; ++x) {
            double t;
            if (isotropic) {
                // independent of alpha, bitwise
                t = std::exp(-(double(x) * x + double(y) * y) /
                             (2.0 * sigma_u * sigma_u));
            } else {
                const double u = c * x + s * y;   // (x,y) rotated by -alpha
                const double v = -s * x + c * y;
                t = axis_weight(u, sigma_u) * axis_weight(v, sigma_v);
            }
            k.taps[static_cast<size_t>(y + radius) * side + (x + radius)] = t;
            sum += t;
        }
    }
    for (double& t : k.taps) t /= sum;
    return k;
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

namespace {

Image convolve_1d_separable(const Image& img, const Kernel& k) {
    const int radius = k.width / 2;
    const int w = img.width(), h = img.height(), ch = img.channels();
    std::vector<double> tmp(img.pixels().size());
    // horizontal
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k.taps[i + radius] * img.at_clamped(x + i, y, c);
                tmp[(static_cast<size_t>(y) * w + x) * ch + c] = acc;
            }
    auto tmp_at = [&](int x, int y, int c) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return tmp[(static_cast<size_t>(y) * w + x) * ch + c];
    };
    // vertical
    std::vector<double> out(img.pixels().size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k.taps[i + radius] * tmp_at(x, y + i, c);
                out[(static_cast<size_t>(y) * w + x) * ch + c] = acc;
            }
    return Image::from_pixels(w, h, ch, std::move(out));
}

Image convolve_2d(const Image& img, const Kernel& k) {
    const int rx = k.width / 2, ry = k.height / 2;
    const int w = img.width(), h = img.height(), ch = img.channels();
    std::vector<double> out(img.pixels().size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int ky = -ry; ky <= ry; ++ky)
                    for (int kx = -rx; kx <= rx; ++kx)
                        acc += k.at(kx + rx, ky + ry) *
                               img.at_clamped(x + kx, y + ky, c);
                out[(static_cast<size_t>(y) * w + x) * ch + c] = acc;
            }
    return Image::from_pixels(w, h, ch, std::move(out));
}

Kernel outer_product(const Kernel& k1d) {
    Kernel k;
    k.width = k.height = k1d.width;
    k.taps.assign(static_cast<size_t>(k.width) * k.height, 0.0);
    for (int y = 0; y < k.height; ++y)
        for (int x = 0; x < k.width; ++x)
            k.taps[static_cast<size_t>(y) * k.width + x] =
                k1d.taps[y] * k1d.taps[x];
    return k;
}

} // namespace

Image convolve(const Image& img, const Kernel& kernel) {
    if (kernel.is_1d()) {
        if (kernel.width == 1) return img; // identity
        return convolve_1d_separable(img, kernel);
    }
    return convolve_2d(img, kernel);
}

Image convolve(const Image& img, const Kernel& kernel, const Mask& support) {
    require(support.matches(img), ErrorKind::dimension_mismatch,
            "convolve: mask dimensions do not match image");
    const Kernel k = kernel.is_1d() ? outer_product(kernel) : kernel;
    const int rx = k.width / 2, ry = k.height / 2;
    const int w = img.width(), h = img.height(), ch = img.channels();
    Image out = img;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!support.at(x, y)) continue;
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0, weight = 0.0;
                for (int ky = -ry; ky <= ry; ++ky)
                    for (int kx = -rx; kx <= rx; ++kx) {
                        const int sx = std::clamp(x + kx, 0, w - 1);
                        const int sy = std::clamp(y + ky, 0, h - 1);
                        if (!support.at(sx, sy)) continue;
                        const double t = k.at(kx + rx, ky + ry);
                        acc += t * img.at(sx, sy, c);
                        weight += t;
                    }
                out.set(x, y, acc / weight, c);
            }
        }
    return out;
}

Image resize_bilinear(const Image& img, int new_width, int new_height) {
    require(new_width > 0 && new_height > 0, ErrorKind::invalid_argument,
            "resize_bilinear: target dimensions must be positive");
    Image out(new_width, new_height, img.channels());
    const double sx = static_cast<double>(img.width()) / new_width;
    const double sy = static_cast<double>(img.height()) / new_height;
    for (int y = 0; y < new_height; ++y)
        for (int x = 0; x < new_width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const double fy = (y + 0.5) * sy - 0.5;
            const int x0 = static_cast<int>(std::floor(fx));
            const int y0 = static_cast<int>(std::floor(fy));
            const double ax = fx - x0, ay = fy - y0;
            for (int c = 0; c < img.channels(); ++c) {
                const double v =
                    (1 - ax) * (1 - ay) * img.at_clamped(x0, y0, c) +
                    ax * (1 - ay) * img.at_clamped(x0 + 1, y0, c) +
                    (1 - ax) * ay * img.at_clamped(x0, y0 + 1, c) +
                    ax * ay * img.at_clamped(x0 + 1, y0 + 1, c);
                out.set(x, y, v, c);
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    std::string tail = s.substr(s.size() - suffix.size());
    std::transform(tail.begin(), tail.end(), tail.begin(), ::tolower);
    return tail == suffix;
}

int read_pnm_token(std::istream& in, const std::string& path) {
    // skips whitespace and '#' comments
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        } else {
            c = in.get();
        }
    }
    require(c != EOF && std::isdigit(c), ErrorKind::corrupt_data,
            path + ": corrupt PGM header");
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        require(value <= 1 << 20, ErrorKind::corrupt_data,
                path + ": absurd value in PGM header");
        c = in.get();
    }
    return static_cast<int>(value);
}

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    require(in.good() && magic[0] == 'P' && magic[1] == '5',
            ErrorKind::corrupt_data, path + ": not a P5 PGM");
    const int w = read_pnm_token(in, path);
    const int h = read_pnm_token(in, path);
    const int maxval = read_pnm_token(in, path);
    require(w > 0 && h > 0, ErrorKind::corrupt_data,
            path + ": bad PGM dimensions");
    require(maxval == 255, ErrorKind::unsupported_format,
            path + ": only 8-bit PGM supported (maxval 255)");
    std::vector<unsigned char> bytes(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    require(static_cast<size_t>(in.gcount()) == bytes.size(),
            ErrorKind::corrupt_data, path + ": truncated PGM pixel data");
    std::vector<double> pixels(bytes.size());
    for (size_t i = 0; i < bytes.size(); ++i) pixels[i] = bytes[i] / 255.0;
    return Image::from_pixels(w, h, 1, std::move(pixels));
}

void save_pgm(const Image& img, const std::string& path) {
    require(img.channels() == 1, ErrorKind::unsupported_format,
            path + ": PGM stores single-channel images only");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    const auto& px = img.pixels();
    for (size_t i = 0; i < px.size(); ++i)
        bytes[i] = static_cast<unsigned char>(std::floor(px[i] * 255.0 + 0.5));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

Image load_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    require(ctx.fp != nullptr, ErrorKind::missing_file, path + ": cannot open");

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        fail(ErrorKind::corrupt_data, path + ": not a PNG file");

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                     nullptr);
    require(ctx.png != nullptr, ErrorKind::corrupt_data, path + ": libpng init");
    ctx.info = png_create_info_struct(ctx.png);
    require(ctx.info != nullptr, ErrorKind::corrupt_data, path + ": libpng init");
    if (setjmp(png_jmpbuf(ctx.png)))
        fail(ErrorKind::corrupt_data, path + ": corrupt PNG data");

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    const int depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    require(depth == 8, ErrorKind::unsupported_format,
            path + ": only 8-bit PNG supported");
    require(color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_RGB,
            ErrorKind::unsupported_format,
            path + ": only grayscale or RGB PNG supported");
    const int ch = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;

    std::vector<unsigned char> bytes(static_cast<size_t>(w) * h * ch);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = bytes.data() + static_cast<size_t>(y) * w * ch;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    std::vector<double> pixels(bytes.size());
    for (size_t i = 0; i < bytes.size(); ++i) pixels[i] = bytes[i] / 255.0;
    return Image::from_pixels(w, h, ch, std::move(pixels));
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void save_png(const Image& img, const std::string& path) {
    PngWriteCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    require(ctx.fp != nullptr, ErrorKind::unwritable_path,
            path + ": cannot write");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                      nullptr);
    require(ctx.png != nullptr, ErrorKind::unwritable_path, path + ": libpng init");
    ctx.info = png_create_info_struct(ctx.png);
    require(ctx.info != nullptr, ErrorKind::unwritable_path, path + ": libpng init");
    if (setjmp(png_jmpbuf(ctx.png)))
        fail(ErrorKind::unwritable_path, path + ": PNG write failed");

    png_init_io(ctx.png, ctx.fp);
    const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY
                                          : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(ctx.png, ctx.info, img.width(), img.height(), 8, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    const int ch = img.channels();
    std::vector<unsigned char> row(static_cast<size_t>(img.width()) * ch);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < ch; ++c)
                row[static_cast<size_t>(x) * ch + c] =
                    static_cast<unsigned char>(
                        std::floor(img.at(x, y, c) * 255.0 + 0.5));
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

} // namespace

Image load_image(const std::string& path) {
    require(std::filesystem::exists(path), ErrorKind::missing_file,
            path + ": no such file");
    if (has_suffix(path, ".pgm")) return load_pgm(path);
    if (has_suffix(path, ".png")) return load_png(path);
    fail(ErrorKind::unsupported_format,
         path + ": unsupported image format (want .pgm or .png)");
}

void save_image(const Image& img, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    require(parent.empty() || std::filesystem::exists(parent),
            ErrorKind::unwritable_path,
            path + ": parent directory does not exist");
    if (has_suffix(path, ".pgm")) {
        save_pgm(img, path);
    } else if (has_suffix(path, ".png")) {
        save_png(img, path);
    } else {
        fail(ErrorKind::unsupported_format,
             path + ": unsupported image format (want .pgm or .png)");
    }
}

} // namespace synth
