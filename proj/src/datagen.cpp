#include "synth/datagen.hpp"
#include "synth/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace synth {

namespace {

/// Integer offset (dx, dy) in +-max_shift maximizing zero-mean normalized
/// correlation of frame(x+dx, y+dy) against ref(x, y) over the overlap.
std::pair<int, int> estimate_translation(const Image& ref, const Image& frame,
                                         int max_shift) {
    double best_score = -2.0;
    std::pair<int, int> best{0, 0};
    for (int dy = -max_shift; dy <= max_shift; ++dy) {
        for (int dx = -max_shift; dx <= max_shift; ++dx) {
            const int x0 = std::max(0, -dx), x1 = std::min(ref.width(), ref.width() - dx);
            const int y0 = std::max(0, -dy), y1 = std::min(ref.height(), ref.height() - dy);
            if (x1 - x0 < 4 || y1 - y0 < 4) continue;
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            const double count = double(x1 - x0) * (y1 - y0);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const double a = ref.at(x, y);
                    const double b = frame.at(x + dx, y + dy);
                    sa += a;
                    sb += b;
                    saa += a * a;
                    sbb += b * b;
                    sab += a * b;
                }
            const double cov = sab - sa * sb / count;
            const double va = saa - sa * sa / count;
            const double vb = sbb - sb * sb / count;
            const double denom = std::sqrt(std::max(va, 0.0) * std::max(vb, 0.0));
            const double score = denom > 1e-12 ? cov / denom : 0.0;
            if (score > best_score) {
                best_score = score;
                best = {dx, dy};
            }
        }
    }
    return best;
}

void write_image_atomic(const Image& img, const fs::path& path) {
    // temp name keeps the extension so the format stays detectable
    const fs::path tmp = path.parent_path() / (".tmp_" + path.filename().string());
    save_image(img, tmp.string());
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorKind::unwritable_path,
            path.string() + ": rename failed (" + ec.message() + ")");
}

std::string sanitize_id(const std::string& id) {
    std::string out = id;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return out;
}

fs::path prepare_out_dir(const std::string& out_dir) {
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec && fs::is_directory(dir), ErrorKind::unwritable_path,
            out_dir + ": cannot create output directory");
    return dir;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < std::min(jobs, count); ++t)
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

Image extract_background(const std::vector<Image>& frames, Alignment align) {
    require(frames.size() >= 3, ErrorKind::invalid_argument,
            "extract_background: need at least 3 frames");
    for (const Image& f : frames)
        require(f.same_shape(frames[0]), ErrorKind::dimension_mismatch,
                "extract_background: frame dimensions differ");

    const int w = frames[0].width(), h = frames[0].height();
    const int ch = frames[0].channels();

    std::vector<Image> aligned;
    aligned.reserve(frames.size());
    aligned.push_back(frames[0]);
    for (size_t k = 1; k < frames.size(); ++k) {
        if (align == Alignment::none) {
            aligned.push_back(frames[k]);
            continue;
        }
        const auto [dx, dy] = estimate_translation(frames[0], frames[k], 8);
        Image shifted(w, h, ch);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < ch; ++c)
                    shifted.set(x, y, frames[k].at_clamped(x + dx, y + dy, c), c);
        aligned.push_back(std::move(shifted));
    }

    Image out(w, h, ch);
    std::vector<double> stack(aligned.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < ch; ++c) {
                for (size_t k = 0; k < aligned.size(); ++k)
                    stack[k] = aligned[k].at(x, y, c);
                std::sort(stack.begin(), stack.end());
                const size_t m = stack.size();
                const double median =
                    m % 2 == 1 ? stack[m / 2]
                               : 0.5 * (stack[m / 2 - 1] + stack[m / 2]);
                out.set(x, y, median, c);
            }
    return out;
}

PoseRanges PoseRanges::around(double tx_lo, double tx_hi, double ty_lo,
                              double ty_hi) {
    PoseRanges r;
    r.range[0] = {-M_PI, M_PI};
    r.range[1] = {-M_PI, M_PI};
    r.range[2] = {-M_PI, M_PI};
    r.range[3] = {tx_lo, tx_hi};
    r.range[4] = {ty_lo, ty_hi};
    return r;
}

Pose sample_pose(const PoseRanges& ranges, Rng& rng) {
    for (const auto& [lo, hi] : ranges.range)
        require(lo <= hi, ErrorKind::invalid_argument,
                "sample_pose: range low > high");
    Pose p;
    p.alpha = rng.uniform(ranges.range[0].first, ranges.range[0].second);
    p.beta = rng.uniform(ranges.range[1].first, ranges.range[1].second);
    p.gamma = rng.uniform(ranges.range[2].first, ranges.range[2].second);
    p.tx = rng.uniform(ranges.range[3].first, ranges.range[3].second);
    p.ty = rng.uniform(ranges.range[4].first, ranges.range[4].second);
    return p;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

void DatasetManifest::save(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    out << "path,label,source,seed_id,alpha,beta,gamma,tx,ty,sigma_s,"
           "sigma_mu,sigma_mv,alpha_m,sigma_n,w_d\n";
    char buf[32];
    for (const ManifestRow& row : rows) {
        out << row.path << "," << row.label << "," << row.source << ","
            << row.seed_id;
        if (row.theta) {
            for (double v : row.theta->to_array()) {
                std::snprintf(buf, sizeof(buf), ",%.17g", v);
                out << buf;
            }
        } else {
            for (int i = 0; i < Theta::kDim; ++i) out << ",";
        }
        out << "\n";
    }
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

DatasetManifest DatasetManifest::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::corrupt_data,
            path + ": empty manifest");
    require(line.rfind("path,label,source,seed_id,", 0) == 0,
            ErrorKind::corrupt_data, path + ": bad manifest header");

    DatasetManifest manifest;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        while (fields.size() < 4 + Theta::kDim) fields.emplace_back();
        require(fields.size() == 4 + Theta::kDim, ErrorKind::corrupt_data,
                path + ":" + std::to_string(lineno) + ": bad manifest row");
        ManifestRow row;
        row.path = fields[0];
        row.label = fields[1];
        row.source = fields[2];
        row.seed_id = fields[3];
        require(row.label == "pos" || row.label == "neg",
                ErrorKind::corrupt_data,
                path + ":" + std::to_string(lineno) + ": bad label");
        if (!fields[4].empty()) {
            std::array<double, Theta::kDim> a{};
            for (int i = 0; i < Theta::kDim; ++i) {
                try {
                    a[i] = std::stod(fields[4 + i]);
                } catch (const std::exception&) {
                    fail(ErrorKind::corrupt_data,
                         path + ":" + std::to_string(lineno) +
                             ": bad theta value");
                }
            }
            row.theta = Theta::from_array(a);
        }
        manifest.rows.push_back(std::move(row));
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

DatasetManifest synthesize_dataset(const std::vector<FitResult>& fits,
                                   const Mesh& mesh,
                                   const std::vector<Image>& backgrounds,
                                   int per_seed, const PoseRanges& ranges,
                                   const RenderConfig& cfg, Rng& rng,
                                   const std::string& out_dir, int jobs) {
    require(!fits.empty(), ErrorKind::invalid_argument,
            "synthesize_dataset: no fits given");
    require(per_seed >= 1, ErrorKind::invalid_argument,
            "synthesize_dataset: per_seed must be >= 1");
    require(!backgrounds.empty(), ErrorKind::invalid_argument,
            "synthesize_dataset: no backgrounds given");
    const fs::path dir = prepare_out_dir(out_dir);

    const int total = static_cast<int>(fits.size()) * per_seed;
    // poses come from the master generator in output order
    std::vector<Pose> poses(total);
    for (Pose& p : poses) p = sample_pose(ranges, rng);

    DatasetManifest manifest;
    manifest.rows.resize(total);
    parallel_for(total, jobs, [&](int idx) {
        const int fit_idx = idx / per_seed;
        const int j = idx % per_seed;
        const FitResult& fit = fits[fit_idx];

        Theta theta = fit.theta;   // capture retained verbatim
        theta.pose = poses[idx];

        const Image& bg = backgrounds[idx % backgrounds.size()];
        Rng noise(noise_seed_for(fit.seed_id, static_cast<uint64_t>(j)));
        const SynthResult synth = synthesize(theta, bg, mesh, cfg, noise);

        const std::string name = "f" + std::to_string(fit_idx) + "_" +
                                 sanitize_id(fit.seed_id) + "_" +
                                 std::to_string(j) + ".pgm";
        write_image_atomic(synth.image, dir / name);

        ManifestRow row;
        row.path = name;
        row.label = "pos";
        row.source = "synthetic";
        row.seed_id = fit.seed_id;
        row.theta = theta;
        manifest.rows[idx] = std::move(row);
    });
    return manifest;
}

DatasetManifest synthesize_dataset_from_thetas(
    const std::vector<Theta>& thetas, const Mesh& mesh,
    const std::vector<Image>& backgrounds, const RenderConfig& cfg, Rng& rng,
    const std::string& out_dir, int jobs) {
    require(!thetas.empty(), ErrorKind::invalid_argument,
            "synthesize_dataset_from_thetas: no thetas given");
    require(!backgrounds.empty(), ErrorKind::invalid_argument,
            "synthesize_dataset_from_thetas: no backgrounds given");
    const fs::path dir = prepare_out_dir(out_dir);

    const int total = static_cast<int>(thetas.size());
    std::vector<uint64_t> noise_seeds(total);
    for (uint64_t& s : noise_seeds) s = rng.next_u64();

    DatasetManifest manifest;
    manifest.rows.resize(total);
    parallel_for(total, jobs, [&](int idx) {
        Rng noise(noise_seeds[idx]);
        const SynthResult synth =
            synthesize(thetas[idx], backgrounds[idx % backgrounds.size()],
                       mesh, cfg, noise);
        const std::string name = "u" + std::to_string(idx) + ".pgm";
        write_image_atomic(synth.image, dir / name);

        ManifestRow row;
        row.path = name;
        row.label = "pos";
        row.source = "synthetic";
        row.theta = thetas[idx];
        manifest.rows[idx] = std::move(row);
    });
    return manifest;
}

Perturbation sample_perturbation(Rng& rng) {
    Perturbation p;
    p.angle = rng.uniform(-15.0 * M_PI / 180.0, 15.0 * M_PI / 180.0);
    p.dx = rng.uniform(-3.0, 3.0);
    p.dy = rng.uniform(-3.0, 3.0);
    p.mirror = rng.uniform() < 0.5;
    p.blur_sigma = rng.uniform(0.0, 1.0);
    p.noise_sigma = rng.uniform(0.0, 0.03);
    return p;
}

Image apply_perturbation(const Image& img, const Perturbation& p, Rng& rng) {
    Image out = img;
    if (p.angle != 0.0 || p.dx != 0.0 || p.dy != 0.0) {
        const double cx = 0.5 * (img.width() - 1);
        const double cy = 0.5 * (img.height() - 1);
        const double c = std::cos(-p.angle), s = std::sin(-p.angle);
        Image rotated(img.width(), img.height(), img.channels());
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const double rx = x - p.dx - cx;
                const double ry = y - p.dy - cy;
                const double sx = c * rx - s * ry + cx;
                const double sy = s * rx + c * ry + cy;
                const int x0 = static_cast<int>(std::floor(sx));
                const int y0 = static_cast<int>(std::floor(sy));
                const double ax = sx - x0, ay = sy - y0;
                for (int ch = 0; ch < img.channels(); ++ch) {
                    const double v =
                        (1 - ax) * (1 - ay) * img.at_clamped(x0, y0, ch) +
                        ax * (1 - ay) * img.at_clamped(x0 + 1, y0, ch) +
                        (1 - ax) * ay * img.at_clamped(x0, y0 + 1, ch) +
                        ax * ay * img.at_clamped(x0 + 1, y0 + 1, ch);
                    rotated.set(x, y, v, ch);
                }
            }
        out = std::move(rotated);
    }
    if (p.mirror) {
        Image flipped(out.width(), out.height(), out.channels());
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                for (int ch = 0; ch < out.channels(); ++ch)
                    flipped.set(x, y, out.at(out.width() - 1 - x, y, ch), ch);
        out = std::move(flipped);
    }
    if (p.blur_sigma > 0.0) out = convolve(out, gaussian_kernel(p.blur_sigma));
    if (p.noise_sigma > 0.0) {
        Mask all(out.width(), out.height(), true);
        out = add_object_noise(out, all, p.noise_sigma, rng);
    }
    return out;
}

DatasetManifest perturb_real(const std::vector<Image>& images, int per_image,
                             Rng& rng, const std::string& out_dir) {
    require(!images.empty(), ErrorKind::invalid_argument,
            "perturb_real: no images given");
    require(per_image >= 1, ErrorKind::invalid_argument,
            "perturb_real: per_image must be >= 1");
    const fs::path dir = prepare_out_dir(out_dir);

    DatasetManifest manifest;
    for (size_t i = 0; i < images.size(); ++i) {
        for (int j = 0; j < per_image; ++j) {
            const Perturbation p = sample_perturbation(rng);
            const Image out = apply_perturbation(images[i], p, rng);
            const std::string name =
                "p" + std::to_string(i) + "_" + std::to_string(j) + ".pgm";
            write_image_atomic(out, dir / name);
            ManifestRow row;
            row.path = name;
            row.label = "pos";
            row.source = "perturbed";
            manifest.rows.push_back(std::move(row));
        }
    }
    return manifest;
}

LabeledPatchSet sample_negatives(const std::vector<Image>& backgrounds, int n,
                                 int size, Rng& rng) {
    require(n >= 0, ErrorKind::invalid_argument,
            "sample_negatives: n must be nonnegative");
    require(!backgrounds.empty(), ErrorKind::invalid_argument,
            "sample_negatives: no backgrounds given");
    for (const Image& bg : backgrounds)
        require(bg.width() >= size && bg.height() >= size,
                ErrorKind::invalid_argument,
                "sample_negatives: background smaller than crop size");
    LabeledPatchSet set;
    for (int k = 0; k < n; ++k) {
        const Image& bg =
            backgrounds[rng.uniform_int(0, static_cast<int>(backgrounds.size()) - 1)];
        const int x0 = rng.uniform_int(0, bg.width() - size);
        const int y0 = rng.uniform_int(0, bg.height() - size);
        Image crop(size, size, bg.channels());
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < bg.channels(); ++c)
                    crop.set(x, y, bg.at(x0 + x, y0 + y, c), c);
        set.add(std::move(crop), -1);
    }
    return set;
}

std::vector<Theta> sample_theta_uniform(const std::vector<FitResult>& fits,
                                        int n, const PoseRanges& ranges,
                                        Rng& rng) {
    require(fits.size() >= 2, ErrorKind::invalid_argument,
            "sample_theta_uniform: need at least 2 fits for min/max bounds");
    std::array<double, Theta::kDim> lo = fits[0].theta.to_array();
    std::array<double, Theta::kDim> hi = lo;
    for (const FitResult& fit : fits) {
        const auto a = fit.theta.to_array();
        for (int i = 5; i < Theta::kDim; ++i) { // capture block only
            lo[i] = std::min(lo[i], a[i]);
            hi[i] = std::max(hi[i], a[i]);
        }
    }
    std::vector<Theta> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        Theta t;
        t.pose = sample_pose(ranges, rng);
        auto a = t.to_array();
        for (int i = 5; i < Theta::kDim; ++i) a[i] = rng.uniform(lo[i], hi[i]);
        out.push_back(Theta::from_array(a));
    }
    return out;
}

} // namespace synth
