#include "synth/datagen.hpp"
#include "synth/errors.hpp"

#include "oracles.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace synth;
namespace fs = std::filesystem;

namespace {

Mesh blob_mesh(Rng& rng) {
    Mesh m;
    for (int i = 0; i < 10; ++i)
        m.vertices.push_back(
            {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    for (int i = 0; i < 8; ++i)
        m.faces.push_back({rng.uniform_int(0, 9), rng.uniform_int(0, 9),
                           rng.uniform_int(0, 9)});
    return m;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_SUITE_BEGIN("datagen");

TEST_CASE("median stacking recovers a background under transients") {
    // per-pixel median of (0.2, 0.2, 0.9)
    std::vector<Image> frames(3, Image(4, 4, 1, 0.2));
    frames[2] = Image(4, 4, 1, 0.9);
    const Image bg = extract_background(frames, Alignment::none);
    for (double v : bg.pixels()) CHECK(v == 0.2);

    // static background, transient object covering < half the frames
    Rng rng(1);
    const Image truth = oracle::random_image(rng, 12, 10);
    std::vector<Image> video(5, truth);
    for (int k = 0; k < 2; ++k) // object visits 2 of 5 frames
        for (int y = 2; y < 6; ++y)
            for (int x = 3 + k; x < 8 + k; ++x) video[k].set(x, y, 1.0);
    const Image rec = extract_background(video, Alignment::none);
    CHECK(rec.pixels() == truth.pixels());

    // even frame count: mean of the two middle values
    std::vector<Image> four(4, Image(2, 2, 1, 0.0));
    four[0] = Image(2, 2, 1, 0.1);
    four[1] = Image(2, 2, 1, 0.2);
    four[2] = Image(2, 2, 1, 0.6);
    four[3] = Image(2, 2, 1, 0.9);
    const Image med = extract_background(four, Alignment::none);
    for (double v : med.pixels()) CHECK(v == doctest::Approx(0.4));

    CHECK_THROWS_AS(
        extract_background({truth, truth}, Alignment::none), Error);
}

TEST_CASE("median stack is invariant to frame order") {
    Rng rng(2);
    std::vector<Image> frames;
    for (int k = 0; k < 5; ++k)
        frames.push_back(oracle::random_image(rng, 8, 8));
    const Image a = extract_background(frames, Alignment::none);
    std::reverse(frames.begin(), frames.end());
    std::swap(frames[1], frames[3]);
    const Image b = extract_background(frames, Alignment::none);
    CHECK(a.pixels() == b.pixels());
}

TEST_CASE("translation alignment undoes known integer shifts") {
    Rng rng(3);
    Image base = oracle::random_image(rng, 32, 24);
    base = convolve(base, gaussian_kernel(1.0)); // correlated texture

    auto shifted = [&](int dx, int dy) {
        Image out(32, 24);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 32; ++x)
                out.set(x, y, base.at_clamped(x - dx, y - dy));
        return out;
    };
    // frame k shifted by (3, -2) must be recovered; the center region of
    // the median must match the reference frame exactly
    const std::vector<Image> frames{base, shifted(3, -2), shifted(-1, 2)};
    const Image bg = extract_background(frames, Alignment::translation);
    for (int y = 6; y < 18; ++y)
        for (int x = 6; x < 26; ++x)
            CHECK(bg.at(x, y) == doctest::Approx(base.at(x, y)).epsilon(1e-12));
}

TEST_CASE("synthesize_dataset: counting, retention, degenerate regeneration") {
    TempDir dir("synthset");
    Rng world(4);
    const Mesh mesh = blob_mesh(world);
    std::vector<Image> backgrounds;
    for (int i = 0; i < 3; ++i)
        backgrounds.push_back(oracle::random_image(world, 40, 40));
    RenderConfig cfg;
    cfg.ortho_scale = 10.0;

    std::vector<FitResult> fits(4);
    for (int i = 0; i < 4; ++i) {
        fits[i].seed_id = "s" + std::to_string(i);
        fits[i].theta.pose = {0.1 * i, -0.05 * i, 0.2, 20.0, 20.0};
        fits[i].theta.capture = {0.5 + 0.1 * i, 0.8, 0.2, 0.4, 0.0,
                                 0.4 + 0.1 * i};
    }

    PoseRanges ranges = PoseRanges::around(14, 26, 14, 26);
    Rng rng(5);
    const DatasetManifest manifest = synthesize_dataset(
        fits, mesh, backgrounds, 5, ranges, cfg, rng, dir.file("out"));
    REQUIRE(manifest.rows.size() == 20);
    for (size_t i = 0; i < manifest.rows.size(); ++i) {
        const ManifestRow& row = manifest.rows[i];
        CHECK(row.label == "pos");
        CHECK(row.source == "synthetic");
        REQUIRE(row.theta.has_value());
        const FitResult& fit = fits[i / 5];
        CHECK(row.seed_id == fit.seed_id);
        // capture block retained verbatim
        CHECK(row.theta->capture.sigma_s == fit.theta.capture.sigma_s);
        CHECK(row.theta->capture.sigma_mu == fit.theta.capture.sigma_mu);
        CHECK(row.theta->capture.sigma_mv == fit.theta.capture.sigma_mv);
        CHECK(row.theta->capture.alpha_m == fit.theta.capture.alpha_m);
        CHECK(row.theta->capture.sigma_n == fit.theta.capture.sigma_n);
        CHECK(row.theta->capture.w_d == fit.theta.capture.w_d);
        CHECK(fs::exists(fs::path(dir.file("out")) / row.path));
    }

    // degenerate ranges at the fitted pose regenerate the fit image bitwise
    PoseRanges collapsed;
    for (int i = 0; i < 5; ++i) {
        const auto arr = fits[1].theta.to_array();
        collapsed.range[i] = {arr[i], arr[i]};
    }
    Rng rng2(6);
    const DatasetManifest regen = synthesize_dataset(
        {fits[1]}, mesh, {backgrounds[0]}, 1, collapsed, cfg, rng2,
        dir.file("regen"));
    REQUIRE(regen.rows.size() == 1);

    Rng noise(noise_seed_for(fits[1].seed_id, 0));
    const SynthResult expect =
        synthesize(fits[1].theta, backgrounds[0], mesh, cfg, noise);
    const Image regen_img =
        load_image((fs::path(dir.file("regen")) / regen.rows[0].path).string());
    Image quantized(40, 40);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x)
            quantized.set(
                x, y,
                std::floor(expect.image.at(x, y) * 255.0 + 0.5) / 255.0);
    CHECK(regen_img.pixels() == quantized.pixels());
}

TEST_CASE("manifest round-trips through CSV") {
    TempDir dir("manifest");
    DatasetManifest manifest;
    ManifestRow a;
    a.path = "img0.pgm";
    a.label = "pos";
    a.source = "synthetic";
    a.seed_id = "s0";
    Theta t;
    t.pose = {0.1, -0.2, 0.3, 17.25, 19.5};
    t.capture = {1.0 / 3.0, 0.7, 0.2, -0.4, 0.05, 0.66};
    a.theta = t;
    ManifestRow b;
    b.path = "neg/crop1.pgm";
    b.label = "neg";
    b.source = "real";
    manifest.rows = {a, b};

    const std::string path = dir.file("m.csv");
    manifest.save(path);
    const DatasetManifest back = DatasetManifest::load(path);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[0].theta.has_value());
    CHECK(back.rows[0].theta->to_array() == t.to_array()); // bit-exact
    CHECK(back.rows[0].seed_id == "s0");
    CHECK_FALSE(back.rows[1].theta.has_value());
    CHECK(back.rows[1].label == "neg");
}

TEST_CASE("perturbation baseline: identity, counting, determinism") {
    Rng rng(7);
    const Image img = oracle::random_image(rng, 20, 20);

    // zero-magnitude perturbation is the exact identity
    Perturbation none;
    Rng noise(1);
    CHECK(apply_perturbation(img, none, noise).pixels() == img.pixels());

    // mirroring alone is an exact column flip
    Perturbation mirror;
    mirror.mirror = true;
    const Image flipped = apply_perturbation(img, mirror, noise);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x)
            CHECK(flipped.at(x, y) == img.at(19 - x, y));

    TempDir dir("perturb");
    std::vector<Image> inputs;
    for (int i = 0; i < 10; ++i)
        inputs.push_back(oracle::random_image(rng, 20, 20));
    Rng r1(11);
    const DatasetManifest m1 = perturb_real(inputs, 5, r1, dir.file("a"));
    REQUIRE(m1.rows.size() == 50);
    for (const ManifestRow& row : m1.rows) {
        CHECK(row.source == "perturbed");
        CHECK(row.label == "pos");
        CHECK_FALSE(row.theta.has_value());
        CHECK(fs::exists(fs::path(dir.file("a")) / row.path));
    }

    Rng r2(11);
    const DatasetManifest m2 = perturb_real(inputs, 5, r2, dir.file("b"));
    for (size_t i = 0; i < m1.rows.size(); ++i)
        CHECK(slurp((fs::path(dir.file("a")) / m1.rows[i].path).string()) ==
              slurp((fs::path(dir.file("b")) / m2.rows[i].path).string()));
}

TEST_CASE("negative sampling: bounds, count, determinism") {
    Rng world(8);
    std::vector<Image> backgrounds;
    for (int i = 0; i < 3; ++i)
        backgrounds.push_back(oracle::random_image(world, 64, 48));

    Rng rng(9);
    CHECK(sample_negatives(backgrounds, 0, 16, rng).size() == 0);

    Rng r1(10), r2(10);
    const LabeledPatchSet a = sample_negatives(backgrounds, 1000, 16, r1);
    const LabeledPatchSet b = sample_negatives(backgrounds, 1000, 16, r2);
    REQUIRE(a.size() == 1000);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.labels[i] == -1);
        CHECK(a.patches[i].width() == 16);
        CHECK(a.patches[i].height() == 16);
        CHECK(a.patches[i].pixels() == b.patches[i].pixels());
    }

    const std::vector<Image> tiny{Image(8, 8)};
    Rng r3(1);
    CHECK_THROWS_AS(sample_negatives(tiny, 5, 16, r3), Error);
}

TEST_CASE("uniform-parameter baseline samples inside the fitted box") {
    std::vector<FitResult> fits(3);
    for (int i = 0; i < 3; ++i) {
        fits[i].seed_id = "s" + std::to_string(i);
        fits[i].theta.capture = {0.5 + 0.3 * i, 1.0 + 0.2 * i, 0.1 * i,
                                 -0.5 + 0.5 * i, 0.01 * i, 0.4 + 0.2 * i};
    }
    const PoseRanges ranges = PoseRanges::around(10, 30, 10, 30);

    Rng rng(11);
    const auto thetas = sample_theta_uniform(fits, 500, ranges, rng);
    REQUIRE(thetas.size() == 500);
    for (const Theta& t : thetas) {
        CHECK(t.capture.sigma_s >= 0.5);
        CHECK(t.capture.sigma_s <= 1.1);
        CHECK(t.capture.sigma_mu >= 1.0);
        CHECK(t.capture.sigma_mu <= 1.4);
        CHECK(t.capture.w_d >= 0.4);
        CHECK(t.capture.w_d <= 0.8);
        CHECK(t.pose.tx >= 10);
        CHECK(t.pose.tx <= 30);
    }

    // collapsed box: every sample equals the shared capture vector
    std::vector<FitResult> same(2);
    same[0].theta.capture = {1.1, 0.9, 0.3, 0.2, 0.04, 0.7};
    same[1].theta.capture = same[0].theta.capture;
    Rng rng2(12);
    for (const Theta& t : sample_theta_uniform(same, 20, ranges, rng2)) {
        CHECK(t.capture.sigma_s == 1.1);
        CHECK(t.capture.w_d == 0.7);
    }

    // determinism
    Rng ra(13), rb(13);
    const auto ta = sample_theta_uniform(fits, 50, ranges, ra);
    const auto tb = sample_theta_uniform(fits, 50, ranges, rb);
    for (size_t i = 0; i < ta.size(); ++i)
        CHECK(ta[i].to_array() == tb[i].to_array());

    Rng rc(14);
    CHECK_THROWS_AS(sample_theta_uniform({fits[0]}, 5, ranges, rc), Error);
}

TEST_SUITE_END();
