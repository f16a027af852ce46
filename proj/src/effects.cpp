#include "synth/effects.hpp"
#include "synth/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace synth {

const std::array<const char*, Theta::kDim> Theta::kNames = {
    "alpha", "beta", "gamma", "tx", "ty",
    "sigma_s", "sigma_mu", "sigma_mv", "alpha_m", "sigma_n", "w_d"};

std::array<double, Theta::kDim> Theta::to_array() const {
    return {pose.alpha,      pose.beta,        pose.gamma,      pose.tx,
            pose.ty,         capture.sigma_s,  capture.sigma_mu,
            capture.sigma_mv, capture.alpha_m, capture.sigma_n, capture.w_d};
}

Theta Theta::from_array(const std::array<double, kDim>& a) {
    Theta t;
    t.pose = {a[0], a[1], a[2], a[3], a[4]};
    t.capture = {a[5], a[6], a[7], a[8], a[9], a[10]};
    return t;
}

double Theta::coordinate(const std::string& name) const {
    const auto arr = to_array();
    for (int i = 0; i < kDim; ++i)
        if (name == kNames[i]) return arr[i];
    fail(ErrorKind::invalid_argument, "unknown theta coordinate: " + name);
}

Image motion_blur(const Image& img, const Mask& mask, double sigma_mu,
                  double sigma_mv, double alpha_m) {
    require(mask.matches(img), ErrorKind::dimension_mismatch,
            "motion_blur: mask dimensions differ");
    if (sigma_mu == 0.0 && sigma_mv == 0.0) return img;
    return convolve(img, oriented_gaussian_kernel(sigma_mu, sigma_mv, alpha_m),
                    mask);
}

Image boundary_blur(const Image& img, const Mask& mask, double sigma_s) {
    require(mask.matches(img), ErrorKind::dimension_mismatch,
            "boundary_blur: mask dimensions differ");
    require(sigma_s >= 0.0, ErrorKind::invalid_argument,
            "boundary_blur: sigma must be nonnegative");
    if (sigma_s == 0.0) return img;

    const int radius = static_cast<int>(std::ceil(3.0 * sigma_s));
    // band = pixels with both object and background within Chebyshev radius
    Mask inverse(mask.width, mask.height);
    for (size_t i = 0; i < mask.bits.size(); ++i)
        inverse.bits[i] = mask.bits[i] ? 0 : 1;
    const Mask near_object = dilate(mask, radius);
    const Mask near_background = dilate(inverse, radius);

    const Image blurred = convolve(img, gaussian_kernel(sigma_s));
    Image out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (near_object.at(x, y) && near_background.at(x, y))
                for (int c = 0; c < img.channels(); ++c)
                    out.set(x, y, blurred.at(x, y, c), c);
    return out;
}

Image add_object_noise(const Image& img, const Mask& mask, double sigma_n,
                       Rng& rng) {
    require(mask.matches(img), ErrorKind::dimension_mismatch,
            "add_object_noise: mask dimensions differ");
    require(sigma_n >= 0.0, ErrorKind::invalid_argument,
            "add_object_noise: sigma must be nonnegative");
    if (sigma_n == 0.0) return img;
    Image out = img;
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (mask.at(x, y))
                for (int c = 0; c < img.channels(); ++c)
                    out.set(x, y, img.at(x, y, c) + rng.normal(0.0, sigma_n), c);
    return out;
}

SynthResult synthesize(const Theta& theta, const Image& background,
                       const Mesh& mesh, const RenderConfig& cfg, Rng& rng) {
    require(background.width() == cfg.width &&
                background.height() == cfg.height,
            ErrorKind::dimension_mismatch,
            "synthesize: background does not match render dimensions");
    require(background.channels() == 1, ErrorKind::dimension_mismatch,
            "synthesize: background must be grayscale (see synthesize_rgb)");

    RenderResult rendered = render_object(mesh, theta.pose, theta.capture.w_d, cfg);
    Image layer = motion_blur(rendered.layer, rendered.mask,
                              theta.capture.sigma_mu, theta.capture.sigma_mv,
                              theta.capture.alpha_m);
    Image img = composite(layer, rendered.mask, background);
    img = boundary_blur(img, rendered.mask, theta.capture.sigma_s);
    img = add_object_noise(img, rendered.mask, theta.capture.sigma_n, rng);
    return {std::move(img), std::move(rendered.mask)};
}

Image synthesize_rgb(const std::array<Theta, 3>& thetas,
                     const Image& background,
                     const Mesh& mesh, const RenderConfig& cfg,
                     const std::array<uint64_t, 3>& noise_seeds) {
    require(background.channels() == 3, ErrorKind::dimension_mismatch,
            "synthesize_rgb: background must have 3 channels");
    std::array<Image, 3> channels;
    for (int c = 0; c < 3; ++c) {
        Rng rng(noise_seeds[c]);
        channels[c] =
            synthesize(thetas[c], background.channel(c), mesh, cfg, rng).image;
    }
    return stack_channels(channels[0], channels[1], channels[2]);
}

// ---------------------------------------------------------------------------
// Theta records
// ---------------------------------------------------------------------------

namespace {

void write_records(const std::vector<ThetaRecord>& records, std::ostream& out,
                   const std::string& path) {
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    for (const ThetaRecord& r : records) {
        require(!r.seed_id.empty() &&
                    r.seed_id.find_first_of(" \t#") == std::string::npos,
                ErrorKind::invalid_argument,
                "seed_id must be non-empty without spaces or '#'");
        out << r.seed_id;
        char buf[32];
        for (double v : r.theta.to_array()) {
            std::snprintf(buf, sizeof(buf), " %.17g", v);
            out << buf;
        }
        out << "\n";
    }
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

} // namespace

void save_theta_records(const std::vector<ThetaRecord>& records,
                        const std::string& path) {
    std::ofstream out(path);
    write_records(records, out, path);
}

void append_theta_records(const std::vector<ThetaRecord>& records,
                          const std::string& path) {
    std::ofstream out(path, std::ios::app);
    write_records(records, out, path);
}

std::vector<ThetaRecord> load_theta_records(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    std::vector<ThetaRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        ThetaRecord rec;
        if (!(ss >> rec.seed_id)) continue; // blank line
        std::array<double, Theta::kDim> a{};
        for (int i = 0; i < Theta::kDim; ++i)
            if (!(ss >> a[i]))
                fail(ErrorKind::corrupt_data,
                     path + ":" + std::to_string(lineno) +
                         ": theta record needs 11 values");
        double extra;
        if (ss >> extra)
            fail(ErrorKind::corrupt_data,
                 path + ":" + std::to_string(lineno) +
                     ": trailing values in theta record");
        rec.theta = Theta::from_array(a);
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace synth
