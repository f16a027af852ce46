#include "synth/cli.hpp"
#include "synth/detect.hpp"
#include "synth/errors.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace synth {

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

RunConfig::RunConfig() {
    sa = default_sa_config(render.width, render.height);
    ranges.range[0] = {-M_PI, M_PI};
    ranges.range[1] = {-M_PI, M_PI};
    ranges.range[2] = {-M_PI, M_PI};
    ranges.range[3] = {0.3 * render.width, 0.7 * render.width};
    ranges.range[4] = {0.3 * render.height, 0.7 * render.height};
}

namespace {

using IniData = std::map<std::string, std::map<std::string, std::string>>;

IniData parse_ini(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    IniData data;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.front() == '[') {
            require(line.back() == ']', ErrorKind::corrupt_data,
                    path + ":" + std::to_string(lineno) + ": bad section line");
            section = line.substr(1, line.size() - 2);
            data[section];
            continue;
        }
        const size_t eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::corrupt_data,
                path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        require(!key.empty(), ErrorKind::corrupt_data,
                path + ":" + std::to_string(lineno) + ": empty key");
        require(!section.empty(), ErrorKind::corrupt_data,
                path + ":" + std::to_string(lineno) + ": key outside a section");
        data[section][key] = value;
    }
    return data;
}

class SectionReader {
public:
    SectionReader(const IniData& data, const std::string& section,
                  const std::string& path)
        : path_(path), section_(section) {
        const auto it = data.find(section);
        if (it != data.end()) entries_ = &it->second;
    }

    bool has(const std::string& key) const {
        return entries_ && entries_->count(key) > 0;
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        consumed_.insert(key);
        const std::string& raw = entries_->at(key);
        std::istringstream ss(raw);
        T value;
        if (!(ss >> value))
            fail(ErrorKind::invalid_argument, path_ + ": bad value for [" +
                                                  section_ + "] " + key + ": '" +
                                                  raw + "'");
        out = value;
    }

    void read_csv(const std::string& key, std::vector<double>& out) {
        if (!has(key)) return;
        consumed_.insert(key);
        std::stringstream ss(entries_->at(key));
        std::string item;
        std::vector<double> values;
        while (std::getline(ss, item, ',')) {
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                fail(ErrorKind::invalid_argument,
                     path_ + ": bad value list for [" + section_ + "] " + key);
            }
        }
        require(!values.empty(), ErrorKind::invalid_argument,
                path_ + ": empty value list for [" + section_ + "] " + key);
        out = std::move(values);
    }

    void finish() const {
        if (!entries_) return;
        for (const auto& [key, value] : *entries_)
            require(consumed_.count(key) > 0, ErrorKind::invalid_argument,
                    path_ + ": unknown key [" + section_ + "] " + key);
    }

private:
    const std::map<std::string, std::string>* entries_ = nullptr;
    std::string path_;
    std::string section_;
    std::set<std::string> consumed_;
};

int coordinate_index(const std::string& name) {
    for (int i = 0; i < Theta::kDim; ++i)
        if (name == Theta::kNames[i]) return i;
    return -1;
}

} // namespace

RunConfig RunConfig::load(const std::string& path) {
    RunConfig cfg;
    const IniData data = parse_ini(path);

    static const std::set<std::string> known_sections{"render", "sa", "distance",
                                                      "dataset", "eval"};
    for (const auto& [section, entries] : data)
        require(known_sections.count(section) > 0, ErrorKind::invalid_argument,
                path + ": unknown section [" + section + "]");

    SectionReader render(data, "render", path);
    render.read("width", cfg.render.width);
    render.read("height", cfg.render.height);
    render.read("ortho_scale", cfg.render.ortho_scale);
    render.read("ambient", cfg.render.ambient);
    render.read("light_x", cfg.render.light_dir.x);
    render.read("light_y", cfg.render.light_dir.y);
    render.read("light_z", cfg.render.light_dir.z);
    render.finish();
    require(cfg.render.width > 0 && cfg.render.height > 0,
            ErrorKind::invalid_argument, path + ": bad render dimensions");
    cfg.render.light_dir = normalized(cfg.render.light_dir);

    // dimension-dependent defaults follow the configured render size
    cfg.sa = default_sa_config(cfg.render.width, cfg.render.height);
    cfg.ranges.range[3] = {0.3 * cfg.render.width, 0.7 * cfg.render.width};
    cfg.ranges.range[4] = {0.3 * cfg.render.height, 0.7 * cfg.render.height};

    SectionReader sa(data, "sa", path);
    sa.read("iterations", cfg.sa.max_iterations);
    sa.read("cooling", cfg.sa.cooling);
    sa.read("steps", cfg.sa.steps_per_temperature);
    sa.read("t0", cfg.sa.initial_temperature);
    for (int i = 0; i < Theta::kDim; ++i) {
        const std::string name = Theta::kNames[i];
        sa.read("std." + name, cfg.sa.proposal_std[i]);
        sa.read("min." + name, cfg.sa.lower[i]);
        sa.read("max." + name, cfg.sa.upper[i]);
    }
    sa.finish();

    SectionReader distance(data, "distance", path);
    distance.read("hog_cell", cfg.hog.cell);
    distance.read("hog_block", cfg.hog.block);
    distance.read("hog_bins", cfg.hog.bins);
    distance.read("wl_bins", cfg.wl_bins);
    distance.read("wl_count", cfg.wl_count);
    distance.finish();

    SectionReader dataset(data, "dataset", path);
    for (int i = 0; i < 5; ++i) {
        const std::string name = Theta::kNames[i];
        dataset.read("min." + name, cfg.ranges.range[i].first);
        dataset.read("max." + name, cfg.ranges.range[i].second);
    }
    dataset.finish();
    for (int i = 0; i < 5; ++i)
        require(cfg.ranges.range[i].first <= cfg.ranges.range[i].second,
                ErrorKind::invalid_argument,
                path + ": [dataset] range min > max for " +
                    std::string(Theta::kNames[i]));

    SectionReader eval(data, "eval", path);
    eval.read_csv("scales", cfg.scales);
    eval.read("stride", cfg.stride);
    eval.read("window", cfg.window);
    eval.read("nms_radius", cfg.nms_radius);
    eval.read("match_radius", cfg.match_radius);
    eval.finish();

    return cfg;
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace {

std::string file_stem(const std::string& path) {
    return fs::path(path).stem().string();
}

std::vector<Image> load_images(const std::vector<std::string>& paths) {
    std::vector<Image> images;
    images.reserve(paths.size());
    for (const std::string& p : paths) images.push_back(load_image(p));
    return images;
}

/// Writes through a temp file in the same directory, then renames.
void atomic_text(const std::string& path, const std::string& content) {
    const fs::path p(path);
    const std::string tmp =
        (p.parent_path() / (".tmp_" + p.filename().string())).string();
    {
        std::ofstream out(tmp);
        require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
        out << content;
        require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorKind::unwritable_path, path + ": rename failed");
}

template <typename Saver>
void atomic_file(const std::string& path, Saver&& saver) {
    // temp name keeps the extension so format-by-suffix savers still work
    const fs::path p(path);
    const std::string tmp =
        (p.parent_path() / (".tmp_" + p.filename().string())).string();
    saver(tmp);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorKind::unwritable_path, path + ": rename failed");
}

std::pair<double, double> parse_center(const std::string& text) {
    const size_t comma = text.find(',');
    require(comma != std::string::npos, ErrorKind::invalid_argument,
            "--center wants `x,y`");
    try {
        return {std::stod(text.substr(0, comma)),
                std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        fail(ErrorKind::invalid_argument, "--center wants numeric `x,y`");
    }
}

std::vector<std::pair<double, double>> load_centers(const std::string& path,
                                                    size_t expected) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    std::vector<std::pair<double, double>> centers;
    std::string line;
    while (std::getline(in, line)) {
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        double x, y;
        if (ss >> x >> y) centers.emplace_back(x, y);
    }
    require(centers.size() == expected, ErrorKind::invalid_argument,
            path + ": centers file has " + std::to_string(centers.size()) +
                " entries for " + std::to_string(expected) + " seed images");
    return centers;
}

/// Positives and negatives listed in the given manifests, patches loaded
/// relative to each manifest's directory.
LabeledPatchSet load_manifest_patches(const std::vector<std::string>& paths) {
    LabeledPatchSet set;
    for (const std::string& mp : paths) {
        const DatasetManifest manifest = DatasetManifest::load(mp);
        const fs::path base = fs::path(mp).parent_path();
        for (const ManifestRow& row : manifest.rows) {
            const fs::path img = base / row.path;
            set.add(load_image(img.string()), row.label == "pos" ? 1 : -1);
        }
    }
    require(!set.patches.empty(), ErrorKind::invalid_argument,
            "manifests list no patches");
    for (const Image& p : set.patches)
        require(p.same_shape(set.patches[0]), ErrorKind::dimension_mismatch,
                "manifest patches must share dimensions");
    return set;
}

void zero_suppressed_effects(Theta& theta,
                             const std::vector<std::string>& suppress) {
    for (const std::string& effect : suppress) {
        if (effect == "bb") {
            theta.capture.sigma_s = 0.0;
        } else if (effect == "mb") {
            theta.capture.sigma_mu = 0.0;
            theta.capture.sigma_mv = 0.0;
            theta.capture.alpha_m = 0.0;
        } else if (effect == "rn") {
            theta.capture.sigma_n = 0.0;
        } else if (effect == "mp") {
            theta.capture.w_d = 0.0;
        } else {
            fail(ErrorKind::invalid_argument,
                 "--suppress wants one of bb|mb|rn|mp, got '" + effect + "'");
        }
    }
}

struct CommonOpts {
    uint64_t seed = 0;
    std::string config;
    int jobs = 1;

    RunConfig load_config() const {
        return config.empty() ? RunConfig() : RunConfig::load(config);
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_jobs = false) {
    cmd->add_option("--seed", opts.seed, "deterministic run seed")->required();
    cmd->add_option("--config", opts.config, "key = value configuration file");
    if (with_jobs)
        cmd->add_option("--jobs", opts.jobs, "worker threads")
            ->check(CLI::PositiveNumber);
}

// shared by fit/synth/render: builds the distance payload
DistanceSpec make_distance(const RunConfig& cfg, const std::string& kind_name,
                           const std::string& ensemble_path,
                           const std::string& cnn_path, int patch_w,
                           int patch_h, uint64_t seed) {
    DistanceSpec spec;
    spec.kind = parse_distance_kind(kind_name);
    spec.hog = cfg.hog;
    switch (spec.kind) {
    case DistanceKind::eucl:
    case DistanceKind::hog:
        break;
    case DistanceKind::wl_random: {
        if (!ensemble_path.empty()) {
            spec.ensemble = std::make_shared<WeakLearnerEnsemble>(
                load_ensemble(ensemble_path));
        } else {
            Rng rng(derive_seed("wl-random-ensemble", seed));
            spec.ensemble = std::make_shared<WeakLearnerEnsemble>(
                random_ensemble(cfg.wl_count, patch_w, patch_h, cfg.wl_bins,
                                rng));
        }
        break;
    }
    case DistanceKind::wl_learned:
        require(!ensemble_path.empty(), ErrorKind::invalid_argument,
                "--distance wl-learned needs --ensemble <file>");
        spec.ensemble =
            std::make_shared<WeakLearnerEnsemble>(load_ensemble(ensemble_path));
        break;
    case DistanceKind::cnn:
        require(!cnn_path.empty(), ErrorKind::invalid_argument,
                "--distance cnn needs --cnn-model <file>");
        spec.net = std::make_shared<CnnNet>(load_cnn(cnn_path));
        break;
    }
    return spec;
}

void run_jobs(int count, int jobs, const std::function<void(int)>& body) {
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

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_extract_bg(const CommonOpts& common,
                    const std::vector<std::string>& frame_paths,
                    const std::string& align_name, const std::string& out) {
    common.load_config();
    Alignment align;
    if (align_name == "none")
        align = Alignment::none;
    else if (align_name == "translation")
        align = Alignment::translation;
    else
        fail(ErrorKind::invalid_argument,
             "--align wants none|translation, got '" + align_name + "'");
    const Image bg = extract_background(load_images(frame_paths), align);
    atomic_file(out, [&](const std::string& tmp) { save_image(bg, tmp); });
}

void cmd_fit(const CommonOpts& common,
             const std::vector<std::string>& seed_paths,
             const std::vector<std::string>& background_paths,
             const std::string& mesh_path, const std::string& distance_name,
             const std::string& ensemble_path, const std::string& cnn_path,
             const std::string& center_text, const std::string& centers_path,
             const std::string& out, bool rgb) {
    const RunConfig cfg = common.load_config();
    const Mesh mesh = load_mesh(mesh_path);
    const std::vector<Image> seeds = load_images(seed_paths);
    const std::vector<Image> backgrounds = load_images(background_paths);
    require(!backgrounds.empty(), ErrorKind::invalid_argument,
            "fit: no background images given");

    std::vector<std::pair<double, double>> centers;
    if (!centers_path.empty())
        centers = load_centers(centers_path, seeds.size());
    else if (!center_text.empty())
        centers.assign(seeds.size(), parse_center(center_text));
    else
        fail(ErrorKind::invalid_argument,
             "fit: provide --center x,y or --centers <file>");

    for (const Image& s : seeds)
        require(s.width() == cfg.render.width &&
                    s.height() == cfg.render.height,
                ErrorKind::dimension_mismatch,
                "fit: seed image dimensions differ from [render] size");

    const DistanceSpec dist =
        make_distance(cfg, distance_name, ensemble_path, cnn_path,
                      cfg.render.width, cfg.render.height, common.seed);

    const int n = static_cast<int>(seeds.size());
    std::vector<std::vector<FitResult>> per_seed(n);
    run_jobs(n, common.jobs, [&](int i) {
        const std::string seed_id = file_stem(seed_paths[i]);
        const Image& background = backgrounds[i % backgrounds.size()];
        Rng rng(derive_seed("fit#" + seed_id, common.seed));
        if (rgb) {
            const auto results = fit_theta_rgb(
                seeds[i], background, mesh, centers[i].first,
                centers[i].second, dist, cfg.sa, cfg.render, seed_id, rng);
            per_seed[i].assign(results.begin(), results.end());
        } else {
            per_seed[i].push_back(fit_theta(
                seeds[i], background, mesh, centers[i].first,
                centers[i].second, dist, cfg.sa, cfg.render, seed_id, rng));
        }
    });

    std::vector<ThetaRecord> records;
    std::string trace;
    char buf[64];
    for (const auto& results : per_seed)
        for (const FitResult& fit : results) {
            records.push_back({fit.seed_id, fit.theta});
            for (size_t it = 0; it < fit.trace.size(); ++it) {
                std::snprintf(buf, sizeof(buf), " %zu %.17g\n", it,
                              fit.trace[it]);
                trace += fit.seed_id + buf;
            }
        }
    atomic_file(out, [&](const std::string& tmp) {
        save_theta_records(records, tmp);
    });
    atomic_text(out + ".trace", trace);
}

void cmd_synth(const CommonOpts& common, const std::string& records_path,
               const std::string& mesh_path,
               const std::vector<std::string>& background_paths, int per_seed,
               const std::vector<std::string>& suppress, bool random_params,
               const std::string& out_dir) {
    const RunConfig cfg = common.load_config();
    const Mesh mesh = load_mesh(mesh_path);
    std::vector<ThetaRecord> records = load_theta_records(records_path);
    require(!records.empty(), ErrorKind::corrupt_data,
            records_path + ": no theta records");
    const std::vector<Image> backgrounds = load_images(background_paths);
    for (const Image& b : backgrounds)
        require(b.width() == cfg.render.width &&
                    b.height() == cfg.render.height,
                ErrorKind::dimension_mismatch,
                "synth: background dimensions differ from [render] size");

    std::vector<FitResult> fits;
    for (ThetaRecord& rec : records) {
        zero_suppressed_effects(rec.theta, suppress);
        FitResult fit;
        fit.theta = rec.theta;
        fit.seed_id = rec.seed_id;
        fits.push_back(std::move(fit));
    }

    Rng rng(common.seed);
    DatasetManifest manifest;
    if (random_params) {
        const int total = per_seed * static_cast<int>(fits.size());
        std::vector<Theta> thetas =
            sample_theta_uniform(fits, total, cfg.ranges, rng);
        for (Theta& t : thetas) zero_suppressed_effects(t, suppress);
        manifest = synthesize_dataset_from_thetas(
            thetas, mesh, backgrounds, cfg.render, rng, out_dir, common.jobs);
    } else {
        manifest = synthesize_dataset(fits, mesh, backgrounds, per_seed,
                                      cfg.ranges, cfg.render, rng, out_dir,
                                      common.jobs);
    }
    atomic_file((fs::path(out_dir) / "manifest.csv").string(),
                [&](const std::string& tmp) { manifest.save(tmp); });
}

void cmd_perturb(const CommonOpts& common,
                 const std::vector<std::string>& image_paths, int per_image,
                 const std::string& out_dir) {
    common.load_config();
    Rng rng(common.seed);
    const DatasetManifest manifest =
        perturb_real(load_images(image_paths), per_image, rng, out_dir);
    atomic_file((fs::path(out_dir) / "manifest.csv").string(),
                [&](const std::string& tmp) { manifest.save(tmp); });
}

LabeledPatchSet gather_training_set(const CommonOpts& common,
                                    const std::vector<std::string>& manifests,
                                    const std::vector<std::string>& bg_paths,
                                    int negatives) {
    LabeledPatchSet set = load_manifest_patches(manifests);
    if (negatives > 0) {
        require(!bg_paths.empty(), ErrorKind::invalid_argument,
                "--negatives needs --backgrounds to sample from");
        require(set.patches[0].width() == set.patches[0].height(),
                ErrorKind::invalid_argument,
                "negative sampling needs square training patches");
        Rng rng(derive_seed("negatives", common.seed));
        LabeledPatchSet negs = sample_negatives(
            load_images(bg_paths), negatives, set.patches[0].width(), rng);
        for (size_t i = 0; i < negs.size(); ++i)
            set.add(std::move(negs.patches[i]), -1);
    }
    return set;
}

void cmd_train_adaboost(const CommonOpts& common,
                        const std::vector<std::string>& manifests,
                        const std::vector<std::string>& bg_paths,
                        int negatives, int pool_size, int rounds,
                        const std::string& out) {
    const RunConfig cfg = common.load_config();
    const LabeledPatchSet set =
        gather_training_set(common, manifests, bg_paths, negatives);
    Rng rng(derive_seed("adaboost-pool", common.seed));
    const WeakLearnerEnsemble pool =
        random_ensemble(pool_size, set.patches[0].width(),
                        set.patches[0].height(), cfg.wl_bins, rng);
    const WeakLearnerEnsemble model = train_adaboost(set, pool, rounds);
    atomic_file(out, [&](const std::string& tmp) { save_ensemble(model, tmp); });
}

void cmd_train_cnn(const CommonOpts& common,
                   const std::vector<std::string>& manifests,
                   const std::vector<std::string>& bg_paths, int negatives,
                   int epochs, double learning_rate, int batch_size,
                   const std::string& out) {
    const LabeledPatchSet set =
        gather_training_set(common, manifests, bg_paths, negatives);
    Rng init_rng(derive_seed("cnn-init", common.seed));
    const CnnNet net0 = make_default_cnn(set.patches[0].width(),
                                         set.patches[0].height(), init_rng);
    Rng rng(derive_seed("cnn-train", common.seed));
    const CnnNet net =
        train_cnn(set, net0, epochs, learning_rate, batch_size, rng);
    atomic_file(out, [&](const std::string& tmp) { save_cnn(net, tmp); });
}

void cmd_eval(const CommonOpts& common, const std::string& detector,
              const std::string& model_path,
              const std::vector<std::string>& image_paths,
              const std::string& gt_path, const std::string& report_path,
              const std::string& detections_path) {
    const RunConfig cfg = common.load_config();
    std::unique_ptr<WindowScorer> scorer;
    if (detector == "adaboost")
        scorer = std::make_unique<AdaBoostWindowScorer>(load_ensemble(model_path));
    else if (detector == "cnn")
        scorer = std::make_unique<CnnWindowScorer>(load_cnn(model_path));
    else
        fail(ErrorKind::invalid_argument,
             "--detector wants adaboost|cnn, got '" + detector + "'");

    const GroundTruth gt = load_ground_truth(gt_path);

    const int n = static_cast<int>(image_paths.size());
    std::vector<std::vector<ScoredDetection>> per_image(n);
    // window scorers keep per-image state, so give each worker its own
    run_jobs(n, common.jobs, [&](int i) {
        std::unique_ptr<WindowScorer> local;
        if (detector == "adaboost")
            local = std::make_unique<AdaBoostWindowScorer>(
                load_ensemble(model_path));
        else
            local = std::make_unique<CnnWindowScorer>(load_cnn(model_path));
        const Image img = load_image(image_paths[i]);
        const auto maps =
            sliding_window(*local, img, cfg.scales, cfg.stride, cfg.window);
        const auto kept = nms(maps_to_detections(maps), cfg.nms_radius);
        for (const Detection& d : kept)
            per_image[i].push_back({file_stem(image_paths[i]), d});
    });
    std::vector<ScoredDetection> detections;
    for (auto& v : per_image)
        detections.insert(detections.end(), v.begin(), v.end());

    const PRCurve curve = pr_curve(detections, gt, cfg.effective_match_radius());
    const double ap = average_precision(curve);

    std::string report = "# recall precision\n";
    char buf[64];
    for (const PRPoint& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.6f %.6f\n", p.recall, p.precision);
        report += buf;
    }
    std::snprintf(buf, sizeof(buf), "AveP %.4f\n", ap);
    report += buf;
    atomic_text(report_path, report);
    if (!detections_path.empty())
        atomic_file(detections_path, [&](const std::string& tmp) {
            save_detections(detections, tmp);
        });
    std::cout << "AveP " << std::fixed << std::setprecision(4) << ap << "\n";
}

void cmd_render(const CommonOpts& common, const std::string& records_path,
                int index, const std::string& mesh_path,
                const std::string& background_path, const std::string& out) {
    const RunConfig cfg = common.load_config();
    const std::vector<ThetaRecord> records = load_theta_records(records_path);
    require(index >= 0 && index < static_cast<int>(records.size()),
            ErrorKind::invalid_argument,
            "render: record index out of range");
    const Mesh mesh = load_mesh(mesh_path);
    const Image background = load_image(background_path);
    require(background.width() == cfg.render.width &&
                background.height() == cfg.render.height,
            ErrorKind::dimension_mismatch,
            "render: background dimensions differ from [render] size");
    Rng noise(noise_seed_for(records[index].seed_id, 0));
    const SynthResult synth =
        synthesize(records[index].theta, background, mesh, cfg.render, noise);
    atomic_file(out, [&](const std::string& tmp) {
        save_image(synth.image, tmp);
    });
}

void cmd_hist(const CommonOpts& common, const std::string& records_path,
              const std::string& pair_text, int bins, const std::string& out) {
    common.load_config(); // validated even though hist itself has no keys
    const std::vector<ThetaRecord> records = load_theta_records(records_path);
    require(!records.empty(), ErrorKind::corrupt_data,
            records_path + ": no theta records");
    const size_t comma = pair_text.find(',');
    require(comma != std::string::npos, ErrorKind::invalid_argument,
            "--pair wants `name_a,name_b`");
    const std::string a = pair_text.substr(0, comma);
    const std::string b = pair_text.substr(comma + 1);
    require(coordinate_index(a) >= 0, ErrorKind::invalid_argument,
            "hist: unknown coordinate '" + a + "'");
    require(coordinate_index(b) >= 0, ErrorKind::invalid_argument,
            "hist: unknown coordinate '" + b + "'");

    std::vector<Theta> thetas;
    for (const ThetaRecord& r : records) thetas.push_back(r.theta);
    const auto grid = joint_histogram(thetas, a, b, bins);

    std::string text;
    for (const auto& row : grid) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) text += " ";
            text += std::to_string(row[i]);
        }
        text += "\n";
    }
    atomic_text(out, text);
}

} // namespace

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"synthkit: fits rendering parameters to seed images and "
                 "mass-generates synthetic training data"};
    app.require_subcommand(1);

    // extract-bg
    auto* bg_cmd = app.add_subcommand(
        "extract-bg", "median-stack a background from video frames");
    CommonOpts bg_common;
    std::vector<std::string> bg_frames;
    std::string bg_align = "translation", bg_out;
    bg_cmd->add_option("--frames", bg_frames, "input frames (3+)")
        ->required()
        ->expected(-3);
    bg_cmd->add_option("--align", bg_align, "none|translation");
    bg_cmd->add_option("--out", bg_out, "output image")->required();
    add_common(bg_cmd, bg_common);
    bg_cmd->callback(
        [&] { cmd_extract_bg(bg_common, bg_frames, bg_align, bg_out); });

    // fit
    auto* fit_cmd = app.add_subcommand(
        "fit", "fit rendering parameters to seed images");
    CommonOpts fit_common;
    std::vector<std::string> fit_seeds, fit_bgs;
    std::string fit_mesh, fit_distance, fit_ensemble, fit_cnn, fit_center,
        fit_centers, fit_out;
    bool fit_rgb = false;
    fit_cmd->add_option("--seeds", fit_seeds, "seed images")->required()
        ->expected(-1);
    fit_cmd->add_option("--backgrounds", fit_bgs, "background images (cycled)")
        ->required()
        ->expected(-1);
    fit_cmd->add_option("--mesh", fit_mesh, "OBJ model")->required();
    fit_cmd->add_option("--distance", fit_distance,
                        "eucl|hog|wl-random|wl-learned|cnn")
        ->required();
    fit_cmd->add_option("--ensemble", fit_ensemble,
                        "weak-learner ensemble file (wl-* distances)");
    fit_cmd->add_option("--cnn-model", fit_cnn, "CNN weight file (cnn distance)");
    fit_cmd->add_option("--center", fit_center, "object center `x,y` for all seeds");
    fit_cmd->add_option("--centers", fit_centers,
                        "file of `x y` lines, one per seed");
    fit_cmd->add_option("--out", fit_out, "theta records output")->required();
    fit_cmd->add_flag("--rgb", fit_rgb, "fit RGB channels independently");
    add_common(fit_cmd, fit_common, true);
    fit_cmd->callback([&] {
        cmd_fit(fit_common, fit_seeds, fit_bgs, fit_mesh, fit_distance,
                fit_ensemble, fit_cnn, fit_center, fit_centers, fit_out,
                fit_rgb);
    });

    // synth
    auto* synth_cmd = app.add_subcommand(
        "synth", "mass-generate synthetic training images from fitted records");
    CommonOpts synth_common;
    std::string synth_records, synth_mesh, synth_out;
    std::vector<std::string> synth_bgs, synth_suppress;
    int synth_per_seed = 100;
    bool synth_random = false;
    synth_cmd->add_option("--records", synth_records, "theta records")->required();
    synth_cmd->add_option("--mesh", synth_mesh, "OBJ model")->required();
    synth_cmd->add_option("--backgrounds", synth_bgs, "background images (cycled)")
        ->required()
        ->expected(-1);
    synth_cmd->add_option("--per-seed", synth_per_seed, "images per seed record");
    synth_cmd->add_option("--suppress", synth_suppress,
                          "zero one effect block: bb|mb|rn|mp (repeatable)");
    synth_cmd->add_flag("--random-params", synth_random,
                        "capture parameters drawn uniformly between fitted "
                        "min/max instead of retained");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    add_common(synth_cmd, synth_common, true);
    synth_cmd->callback([&] {
        cmd_synth(synth_common, synth_records, synth_mesh, synth_bgs,
                  synth_per_seed, synth_suppress, synth_random, synth_out);
    });

    // perturb
    auto* pert_cmd = app.add_subcommand(
        "perturb", "classical augmentation baseline over real images");
    CommonOpts pert_common;
    std::vector<std::string> pert_images;
    std::string pert_out;
    int pert_per_image = 10;
    pert_cmd->add_option("--images", pert_images, "input images")->required()
        ->expected(-1);
    pert_cmd->add_option("--per-image", pert_per_image, "outputs per input");
    pert_cmd->add_option("--out", pert_out, "output directory")->required();
    add_common(pert_cmd, pert_common);
    pert_cmd->callback([&] {
        cmd_perturb(pert_common, pert_images, pert_per_image, pert_out);
    });

    // train-adaboost
    auto* ada_cmd = app.add_subcommand("train-adaboost",
                                       "boost gradient-energy weak learners");
    CommonOpts ada_common;
    std::vector<std::string> ada_manifests, ada_bgs;
    int ada_negatives = 0, ada_pool = 2000, ada_rounds = 100;
    std::string ada_out;
    ada_cmd->add_option("--manifest", ada_manifests, "dataset manifests")
        ->required()
        ->expected(-1);
    ada_cmd->add_option("--backgrounds", ada_bgs,
                        "backgrounds for negative sampling")
        ->expected(-1);
    ada_cmd->add_option("--negatives", ada_negatives,
                        "negative patches to sample");
    ada_cmd->add_option("--pool", ada_pool, "candidate pool size");
    ada_cmd->add_option("--rounds", ada_rounds, "boosting rounds");
    ada_cmd->add_option("--out", ada_out, "model output")->required();
    add_common(ada_cmd, ada_common);
    ada_cmd->callback([&] {
        cmd_train_adaboost(ada_common, ada_manifests, ada_bgs, ada_negatives,
                           ada_pool, ada_rounds, ada_out);
    });

    // train-cnn
    auto* cnn_cmd = app.add_subcommand("train-cnn", "train the patch CNN");
    CommonOpts cnn_common;
    std::vector<std::string> cnn_manifests, cnn_bgs;
    int cnn_negatives = 0, cnn_epochs = 30, cnn_batch = 16;
    double cnn_lr = 0.01;
    std::string cnn_out;
    cnn_cmd->add_option("--manifest", cnn_manifests, "dataset manifests")
        ->required()
        ->expected(-1);
    cnn_cmd->add_option("--backgrounds", cnn_bgs,
                        "backgrounds for negative sampling")
        ->expected(-1);
    cnn_cmd->add_option("--negatives", cnn_negatives,
                        "negative patches to sample");
    cnn_cmd->add_option("--epochs", cnn_epochs, "training epochs");
    cnn_cmd->add_option("--lr", cnn_lr, "learning rate");
    cnn_cmd->add_option("--batch", cnn_batch, "batch size");
    cnn_cmd->add_option("--out", cnn_out, "weight file output")->required();
    add_common(cnn_cmd, cnn_common);
    cnn_cmd->callback([&] {
        cmd_train_cnn(cnn_common, cnn_manifests, cnn_bgs, cnn_negatives,
                      cnn_epochs, cnn_lr, cnn_batch, cnn_out);
    });

    // eval
    auto* eval_cmd = app.add_subcommand(
        "eval", "sliding-window detection and PR/AveP report");
    CommonOpts eval_common;
    std::string eval_detector, eval_model, eval_gt, eval_report, eval_dets;
    std::vector<std::string> eval_images;
    eval_cmd->add_option("--detector", eval_detector, "adaboost|cnn")->required();
    eval_cmd->add_option("--model", eval_model, "model file")->required();
    eval_cmd->add_option("--images", eval_images, "test images")->required()
        ->expected(-1);
    eval_cmd->add_option("--gt", eval_gt, "ground truth file")->required();
    eval_cmd->add_option("--out", eval_report, "PR/AveP report output")
        ->required();
    eval_cmd->add_option("--detections", eval_dets,
                         "also write the detections CSV here");
    add_common(eval_cmd, eval_common, true);
    eval_cmd->callback([&] {
        cmd_eval(eval_common, eval_detector, eval_model, eval_images, eval_gt,
                 eval_report, eval_dets);
    });

    // render
    auto* render_cmd = app.add_subcommand(
        "render", "synthesize one image from a theta record");
    CommonOpts render_common;
    std::string render_records, render_mesh, render_bg, render_out;
    int render_index = 0;
    render_cmd->add_option("--records", render_records, "theta records")
        ->required();
    render_cmd->add_option("--index", render_index, "record index");
    render_cmd->add_option("--mesh", render_mesh, "OBJ model")->required();
    render_cmd->add_option("--background", render_bg, "background image")
        ->required();
    render_cmd->add_option("--out", render_out, "output image")->required();
    add_common(render_cmd, render_common);
    render_cmd->callback([&] {
        cmd_render(render_common, render_records, render_index, render_mesh,
                   render_bg, render_out);
    });

    // hist
    auto* hist_cmd = app.add_subcommand(
        "hist", "joint histogram of two fitted parameters");
    CommonOpts hist_common;
    std::string hist_records, hist_pair, hist_out;
    int hist_bins = 10;
    hist_cmd->add_option("--records", hist_records, "theta records")->required();
    hist_cmd->add_option("--pair", hist_pair, "`name_a,name_b`")->required();
    hist_cmd->add_option("--bins", hist_bins, "bins per axis");
    hist_cmd->add_option("--out", hist_out, "grid text output")->required();
    add_common(hist_cmd, hist_common);
    hist_cmd->callback([&] {
        cmd_hist(hist_common, hist_records, hist_pair, hist_bins, hist_out);
    });

    std::vector<const char*> argv;
    argv.push_back("synthkit");
    for (const std::string& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run 'synthkit --help' for usage\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace synth
