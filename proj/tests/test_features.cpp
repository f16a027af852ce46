#include "synth/errors.hpp"
#include "synth/features.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace synth;

namespace {

// step edge at column `edge`: 0 on the left, `amplitude` on the right
Image step_image(int w, int h, int edge, double amplitude = 1.0) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = edge; x < w; ++x) img.set(x, y, amplitude);
    return img;
}

} // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("hog of a constant image is the zero vector") {
    const Image flat(16, 16, 1, 0.7);
    HogConfig cfg;
    cfg.cell = 8;
    const auto v = compute_hog(flat, cfg);
    CHECK(v.size() == 36); // 1 block of 2x2 cells x 9 bins
    for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("hog is pure and rejects indivisible dimensions") {
    Rng rng(5);
    const Image img = oracle::random_image(rng, 16, 16);
    HogConfig cfg;
    CHECK(compute_hog(img, cfg) == compute_hog(img, cfg));

    const Image odd = oracle::random_image(rng, 15, 16);
    CHECK_THROWS_AS(compute_hog(odd, cfg), Error);
}

TEST_CASE("hog of a vertical step edge concentrates in one bin") {
    HogConfig cfg;
    cfg.cell = 8;
    cfg.block = 1;
    const Image img = step_image(8, 8, 4);
    const auto v = compute_hog(img, cfg);
    REQUIRE(v.size() == 9);
    // horizontal gradient, unsigned angle 0 -> bin 0
    CHECK(v[0] > 0.9);
    for (int o = 1; o < 9; ++o) CHECK(v[o] == 0.0);

    // matches the per-pixel hand loop
    const auto ref = oracle::hog_reference(img, cfg);
    REQUIRE(ref.size() == v.size());
    for (size_t i = 0; i < v.size(); ++i)
        CHECK(v[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("hog matches the brute-force reference on random images") {
    Rng rng(31);
    HogConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const Image img = oracle::random_image(rng, 40, 40);
        const auto got = compute_hog(img, cfg);
        const auto ref = oracle::hog_reference(img, cfg);
        REQUIRE(got.size() == ref.size());
        REQUIRE(got.size() == 576); // 4x4 blocks x 4 cells x 9 bins
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("hog block norms stay at or below one") {
    Rng rng(67);
    HogConfig cfg;
    const Image img = oracle::random_image(rng, 40, 40);
    const auto v = compute_hog(img, cfg);
    const int block_len = cfg.block * cfg.block * cfg.bins;
    for (size_t start = 0; start < v.size(); start += block_len) {
        double sq = 0.0;
        for (int i = 0; i < block_len; ++i) sq += v[start + i] * v[start + i];
        CHECK(std::sqrt(sq) <= 1.0 + 1e-6);
    }
}

TEST_CASE("gradient energy: constant region, partition, edge patch") {
    const Image flat(12, 12, 1, 0.4);
    const PixelRect all{0, 0, 12, 12};
    CHECK(gradient_energy(flat, all, 0, 8) == 0.0);

    Rng rng(3);
    const Image img = oracle::random_image(rng, 12, 12);
    double sum = 0.0;
    for (int o = 0; o < 8; ++o) sum += gradient_energy(img, all, o, 8);
    CHECK(sum <= 1.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-7)); // total/(total+eps)

    // vertical edge, O = 4: gradient is horizontal, bin 0
    const Image edge = step_image(12, 12, 6);
    const PixelRect mid{3, 3, 6, 6};
    CHECK(gradient_energy(edge, mid, 0, 4) > 0.99);
    for (int o = 1; o < 4; ++o)
        CHECK(gradient_energy(edge, mid, o, 4) < 0.01);

    CHECK_THROWS_AS(gradient_energy(img, PixelRect{0, 0, 0, 4}, 0, 8), Error);
    CHECK_THROWS_AS(gradient_energy(img, PixelRect{8, 8, 8, 8}, 0, 8), Error);
}

TEST_CASE("gradient energy matches the reference and is scale invariant") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Image img = oracle::random_image(rng, 20, 20, 1, 0.0, 0.5);
        const PixelRect r{rng.uniform_int(0, 8), rng.uniform_int(0, 8),
                          rng.uniform_int(4, 12), rng.uniform_int(4, 12)};
        const int o = rng.uniform_int(0, 7);
        const double e = gradient_energy(img, r, o, 8);
        CHECK(e == doctest::Approx(oracle::energy_reference(img, r, o, 8))
                       .epsilon(1e-12));

        // positive affine intensity scaling
        for (double a : {0.5, 2.0}) {
            Image scaled(img.width(), img.height());
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    scaled.set(x, y, a * img.at(x, y));
            CHECK(std::abs(gradient_energy(scaled, r, o, 8) - e) <= 1e-6);
        }
    }
}

TEST_CASE("energy map agrees with the direct computation") {
    Rng rng(101);
    for (int trial = 0; trial < 10; ++trial) {
        const Image img = oracle::random_image(rng, 24, 18);
        const OrientedEnergyMap map(img, 8);
        for (int k = 0; k < 30; ++k) {
            const PixelRect r{rng.uniform_int(0, 12), rng.uniform_int(0, 10),
                              rng.uniform_int(2, 10), rng.uniform_int(2, 8)};
            const int o = rng.uniform_int(0, 7);
            CHECK(map.energy(r, o) ==
                  doctest::Approx(gradient_energy(img, r, o, 8))
                      .epsilon(1e-10));
        }
    }
}

TEST_CASE("weak learner evaluation and monotonicity in tau") {
    const Image edge = step_image(16, 16, 8);
    WeakLearner h;
    h.region = {4, 4, 8, 8};
    h.orientation = 0;

    h.tau = 1.0;
    CHECK_FALSE(eval_weak(h, edge, 8)); // E < 1 always
    h.tau = -1.0;
    CHECK(eval_weak(h, edge, 8));
    h.tau = 0.5;
    CHECK(eval_weak(h, edge, 8)); // E ~ 1 on the pure edge

    Rng rng(7);
    const Image img = oracle::random_image(rng, 16, 16);
    bool prev = true;
    for (double tau : {-0.5, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
        h.tau = tau;
        const bool fired = eval_weak(h, img, 8);
        if (!prev) CHECK_FALSE(fired); // raising tau never flips 0 -> 1
        prev = fired;
    }
}

TEST_SUITE_END();
