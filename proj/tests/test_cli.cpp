#include "synth/cli.hpp"
#include "synth/datagen.hpp"
#include "synth/detect.hpp"
#include "synth/errors.hpp"

#include "temp_dir.hpp"
#include "toy_world.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace synth;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// one shared toy setup: mesh file, 3 backgrounds, 2 manufactured seed
// images (known thetas), centers file and a small-iteration config
struct CliWorld {
    TempDir dir{"cli"};
    RenderConfig render;
    std::vector<Theta> truths;

    std::string mesh_path, config_path, centers_path;
    std::vector<std::string> bg_paths, seed_paths;

    CliWorld() {
        render.width = render.height = 32;
        render.ortho_scale = 8.0;

        Rng rng(1000);
        const Mesh mesh = toy::make_mesh(rng);
        mesh_path = dir.file("toy.obj");
        save_mesh(mesh, mesh_path);

        for (int i = 0; i < 3; ++i) {
            const Image bg = toy::make_background(32, 32, rng);
            bg_paths.push_back(dir.file("bg" + std::to_string(i) + ".pgm"));
            save_image(bg, bg_paths.back());
        }

        for (int i = 0; i < 2; ++i) {
            Theta truth;
            truth.pose = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                          rng.uniform(-0.5, 0.5), 16.0, 16.0};
            truth.capture = {rng.uniform(0.5, 1.5), rng.uniform(0.5, 2.0),
                             rng.uniform(0.1, 0.6), rng.uniform(-2.0, 2.0),
                             0.0, rng.uniform(0.4, 0.8)};
            truths.push_back(truth);
            const Image bg = load_image(bg_paths[i % bg_paths.size()]);
            Rng noise(noise_seed_for("seed" + std::to_string(i), 0));
            const SynthResult s = synthesize(truth, bg, mesh, render, noise);
            seed_paths.push_back(dir.file("seed" + std::to_string(i) + ".pgm"));
            save_image(s.image, seed_paths.back());
        }

        centers_path = dir.file("centers.txt");
        write_text(centers_path, "16 16\n16 16\n");

        config_path = dir.file("run.ini");
        write_text(config_path,
                   "[render]\nwidth = 32\nheight = 32\northo_scale = 8\n"
                   "[sa]\niterations = 160\nsteps = 20\n"
                   "[dataset]\nmin.alpha = -0.4\nmax.alpha = 0.4\n"
                   "min.beta = -0.4\nmax.beta = 0.4\n"
                   "min.gamma = -3.1\nmax.gamma = 3.1\n"
                   "min.tx = 10\nmax.tx = 22\nmin.ty = 10\nmax.ty = 22\n"
                   "[eval]\nscales = 1.0\nstride = 4\nwindow = 32\n"
                   "nms_radius = 10\nmatch_radius = 12\n");
    }

    std::vector<std::string> with_seeds(std::vector<std::string> args) const {
        args.insert(args.end(), {"--config", config_path});
        return args;
    }
};

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({}) == 1);
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({"fit", "--bogus-flag"}) == 1);
    // missing required --seed
    CHECK(run_cli({"hist", "--records", "x", "--pair", "a,b", "--out", "y"}) ==
          1);
}

TEST_CASE("config violations exit with code 2 and name the key") {
    TempDir dir("cfg");
    write_text(dir.file("bad.ini"), "[render]\nwibble = 3\n");
    write_text(dir.file("r.txt"), "s0 0 0 0 16 16 0 0 0 0 0 0.5\n");
    CHECK(run_cli({"hist", "--records", dir.file("r.txt"), "--pair",
                   "sigma_s,sigma_n", "--out", dir.file("h.txt"), "--seed",
                   "1", "--config", dir.file("bad.ini")}) == 2);
    // RunConfig::load names the offending key
    CHECK_THROWS_WITH_AS(RunConfig::load(dir.file("bad.ini")),
                         doctest::Contains("wibble"), Error);
}

TEST_CASE("render with zero capture params equals the plain composite") {
    CliWorld world;
    ThetaRecord rec;
    rec.seed_id = "zero";
    rec.theta.pose = {0.2, -0.1, 0.8, 16, 16};
    rec.theta.capture = {0, 0, 0, 0, 0, 0.65};
    const std::string records = world.dir.file("zero.txt");
    save_theta_records({rec}, records);

    const std::string out = world.dir.file("render.pgm");
    CHECK(run_cli(world.with_seeds({"render", "--records", records, "--mesh",
                                    world.mesh_path, "--background",
                                    world.bg_paths[0], "--out", out, "--seed",
                                    "5"})) == 0);

    const Mesh mesh = load_mesh(world.mesh_path);
    const Image bg = load_image(world.bg_paths[0]);
    const RenderResult r =
        render_object(mesh, rec.theta.pose, 0.65, world.render);
    const Image expect = composite(r.layer, r.mask, bg);
    const std::string expect_path = world.dir.file("expect.pgm");
    save_image(expect, expect_path);
    CHECK(slurp(out) == slurp(expect_path));
}

TEST_CASE("full toy pipeline: fit, synth, train, eval") {
    CliWorld world;
    const std::string records = world.dir.file("fits.txt");

    CHECK(run_cli(world.with_seeds(
              {"fit", "--seeds", world.seed_paths[0], world.seed_paths[1],
               "--backgrounds", world.bg_paths[0], world.bg_paths[1],
               "--mesh", world.mesh_path, "--distance", "eucl", "--centers",
               world.centers_path, "--out", records, "--seed", "7"})) == 0);
    const auto fits = load_theta_records(records);
    REQUIRE(fits.size() == 2);
    CHECK(fs::exists(records + ".trace"));

    const std::string synth_dir = world.dir.file("synth");
    CHECK(run_cli(world.with_seeds(
              {"synth", "--records", records, "--mesh", world.mesh_path,
               "--backgrounds", world.bg_paths[0], world.bg_paths[1],
               world.bg_paths[2], "--per-seed", "6", "--out", synth_dir,
               "--seed", "8"})) == 0);
    const DatasetManifest manifest =
        DatasetManifest::load(synth_dir + "/manifest.csv");
    CHECK(manifest.rows.size() == 12);

    // manifest for the real seeds, written by hand like a user would
    const std::string real_manifest = world.dir.file("real.csv");
    {
        DatasetManifest m;
        for (const std::string& p : world.seed_paths) {
            ManifestRow row;
            row.path = fs::path(p).filename().string();
            row.label = "pos";
            row.source = "real";
            m.rows.push_back(row);
        }
        m.save(real_manifest);
    }

    const std::string model = world.dir.file("model.txt");
    CHECK(run_cli(world.with_seeds(
              {"train-adaboost", "--manifest", real_manifest,
               synth_dir + "/manifest.csv", "--backgrounds",
               world.bg_paths[0], world.bg_paths[1], "--negatives", "40",
               "--pool", "150", "--rounds", "8", "--out", model, "--seed",
               "9"})) == 0);
    CHECK(fs::exists(model));

    // test images with ground truth: reuse the seeds as positives
    const std::string gt_path = world.dir.file("gt.txt");
    write_text(gt_path, "seed0 16 16 32\nseed1 16 16 32\n");
    const std::string report = world.dir.file("report.txt");
    const std::string dets = world.dir.file("dets.csv");
    CHECK(run_cli(world.with_seeds(
              {"eval", "--detector", "adaboost", "--model", model,
               "--images", world.seed_paths[0], world.seed_paths[1], "--gt",
               gt_path, "--out", report, "--detections", dets, "--seed",
               "10"})) == 0);
    const std::string text = slurp(report);
    CHECK(text.find("AveP") != std::string::npos);
    CHECK(fs::exists(dets));
}

TEST_CASE("synth --suppress zeroes exactly the named block") {
    CliWorld world;
    ThetaRecord rec;
    rec.seed_id = "s0";
    rec.theta.pose = {0.1, 0.2, 0.3, 16, 16};
    rec.theta.capture = {1.1, 2.2, 0.7, 0.9, 0.04, 0.77};
    const std::string records = world.dir.file("r.txt");
    save_theta_records({rec}, records);

    const std::string out = world.dir.file("suppress");
    CHECK(run_cli(world.with_seeds(
              {"synth", "--records", records, "--mesh", world.mesh_path,
               "--backgrounds", world.bg_paths[0], "--per-seed", "2",
               "--suppress", "mb", "--out", out, "--seed", "3"})) == 0);
    const DatasetManifest manifest =
        DatasetManifest::load(out + "/manifest.csv");
    REQUIRE(manifest.rows.size() == 2);
    for (const ManifestRow& row : manifest.rows) {
        REQUIRE(row.theta.has_value());
        CHECK(row.theta->capture.sigma_mu == 0.0);
        CHECK(row.theta->capture.sigma_mv == 0.0);
        CHECK(row.theta->capture.alpha_m == 0.0);
        // everything else untouched
        CHECK(row.theta->capture.sigma_s == 1.1);
        CHECK(row.theta->capture.sigma_n == 0.04);
        CHECK(row.theta->capture.w_d == 0.77);
    }

    CHECK(run_cli(world.with_seeds(
              {"synth", "--records", records, "--mesh", world.mesh_path,
               "--backgrounds", world.bg_paths[0], "--suppress", "xy",
               "--out", out, "--seed", "3"})) == 2);
}

TEST_CASE("fit then degenerate synth regenerates the fit image bitwise") {
    CliWorld world;
    const std::string records = world.dir.file("one.txt");
    CHECK(run_cli(world.with_seeds(
              {"fit", "--seeds", world.seed_paths[0], "--backgrounds",
               world.bg_paths[0], "--mesh", world.mesh_path, "--distance",
               "eucl", "--center", "16,16", "--out", records, "--seed",
               "21"})) == 0);
    const auto recs = load_theta_records(records);
    REQUIRE(recs.size() == 1);

    // collapse the pose ranges onto the fitted pose
    const auto arr = recs[0].theta.to_array();
    std::string cfg =
        "[render]\nwidth = 32\nheight = 32\northo_scale = 8\n[dataset]\n";
    const char* names[5] = {"alpha", "beta", "gamma", "tx", "ty"};
    char line[128];
    for (int i = 0; i < 5; ++i) {
        std::snprintf(line, sizeof(line), "min.%s = %.17g\nmax.%s = %.17g\n",
                      names[i], arr[i], names[i], arr[i]);
        cfg += line;
    }
    const std::string cfg_path = world.dir.file("collapsed.ini");
    write_text(cfg_path, cfg);

    const std::string out = world.dir.file("regen");
    CHECK(run_cli({"synth", "--records", records, "--mesh", world.mesh_path,
                   "--backgrounds", world.bg_paths[0], "--per-seed", "1",
                   "--out", out, "--seed", "99", "--config", cfg_path}) == 0);
    const DatasetManifest manifest = DatasetManifest::load(out + "/manifest.csv");
    REQUIRE(manifest.rows.size() == 1);

    // the regenerated file equals the synthesis at the fitted theta with
    // the fit's own noise stream
    const Mesh mesh = load_mesh(world.mesh_path);
    const Image bg = load_image(world.bg_paths[0]);
    Rng noise(noise_seed_for(recs[0].seed_id, 0));
    const SynthResult expect =
        synthesize(recs[0].theta, bg, mesh, world.render, noise);
    const std::string expect_path = world.dir.file("expect.pgm");
    save_image(expect.image, expect_path);
    CHECK(slurp((fs::path(out) / manifest.rows[0].path).string()) ==
          slurp(expect_path));
}

TEST_CASE("subcommands are byte-deterministic under a fixed seed") {
    CliWorld world;

    // synth twice into different directories
    ThetaRecord rec;
    rec.seed_id = "s0";
    rec.theta.pose = {0.1, 0.2, 0.3, 16, 16};
    rec.theta.capture = {0.8, 1.0, 0.3, 0.5, 0.03, 0.6};
    const std::string records = world.dir.file("det.txt");
    save_theta_records({rec}, records);

    for (const char* jobs : {"1", "2"}) {
        const std::string out_a = world.dir.file(std::string("da") + jobs);
        const std::string out_b = world.dir.file(std::string("db") + jobs);
        for (const std::string& out : {out_a, out_b})
            CHECK(run_cli(world.with_seeds(
                      {"synth", "--records", records, "--mesh",
                       world.mesh_path, "--backgrounds", world.bg_paths[0],
                       "--per-seed", "4", "--out", out, "--seed", "17",
                       "--jobs", jobs})) == 0);
        const DatasetManifest ma = DatasetManifest::load(out_a + "/manifest.csv");
        CHECK(slurp(out_a + "/manifest.csv") == slurp(out_b + "/manifest.csv"));
        for (const ManifestRow& row : ma.rows)
            CHECK(slurp((fs::path(out_a) / row.path).string()) ==
                  slurp((fs::path(out_b) / row.path).string()));
    }

    // perturb twice
    const std::string pa = world.dir.file("pa"), pb = world.dir.file("pb");
    for (const std::string& out : {pa, pb})
        CHECK(run_cli({"perturb", "--images", world.seed_paths[0],
                       "--per-image", "3", "--out", out, "--seed", "23"}) == 0);
    CHECK(slurp(pa + "/manifest.csv") == slurp(pb + "/manifest.csv"));
    CHECK(slurp(pa + "/p0_0.pgm") == slurp(pb + "/p0_0.pgm"));

    // extract-bg twice
    const std::string ba = world.dir.file("ba.pgm"), bb = world.dir.file("bb.pgm");
    for (const std::string& out : {ba, bb})
        CHECK(run_cli({"extract-bg", "--frames", world.bg_paths[0],
                       world.bg_paths[1], world.bg_paths[2], "--align",
                       "translation", "--out", out, "--seed", "31"}) == 0);
    CHECK(slurp(ba) == slurp(bb));
}

TEST_CASE("hist writes a grid whose counts sum to the record count") {
    CliWorld world;
    std::vector<ThetaRecord> records;
    Rng rng(3);
    for (int i = 0; i < 9; ++i) {
        ThetaRecord rec;
        rec.seed_id = "s" + std::to_string(i);
        rec.theta.capture = {rng.uniform(0, 3), rng.uniform(0, 3),
                             rng.uniform(0, 1), 0, rng.uniform(0, 0.1),
                             rng.uniform(0, 1)};
        records.push_back(rec);
    }
    const std::string rp = world.dir.file("h.txt");
    save_theta_records(records, rp);
    const std::string out = world.dir.file("grid.txt");
    CHECK(run_cli({"hist", "--records", rp, "--pair", "sigma_mu,sigma_mv",
                   "--bins", "3", "--out", out, "--seed", "1"}) == 0);
    std::ifstream in(out);
    long total = 0, v;
    while (in >> v) total += v;
    CHECK(total == 9);
}

TEST_SUITE_END();
