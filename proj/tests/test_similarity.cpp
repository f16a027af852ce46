#include "synth/errors.hpp"
#include "synth/learn.hpp"
#include "synth/similarity.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace synth;

namespace {

CnnNet small_net(Rng& rng, int w = 12, int h = 12) {
    CnnNet net;
    net.input_width = w;
    net.input_height = h;
    ConvLayer conv;
    conv.in_channels = 1;
    conv.out_channels = 2;
    conv.kernel = 3;
    conv.activation = Activation::relu;
    conv.weights.resize(18);
    for (double& v : conv.weights) v = rng.normal(0.0, 0.4);
    conv.bias = {0.01, -0.02};
    net.layers.push_back(conv);
    net.layers.push_back(PoolLayer{});
    const int flat = layer_shapes(net).back().flat();
    FcLayer fc;
    fc.in_size = flat;
    fc.out_size = 3;
    fc.activation = Activation::identity;
    fc.weights.resize(static_cast<size_t>(3) * flat);
    for (double& v : fc.weights) v = rng.normal(0.0, 0.3);
    fc.bias = {0.0, 0.1, -0.1};
    net.layers.push_back(fc);
    return net;
}

} // namespace

TEST_SUITE_BEGIN("similarity");

TEST_CASE("euclidean distance basics and oracle") {
    Image a(2, 1), b(2, 1);
    b.set(0, 0, 0.3);
    b.set(1, 0, 0.4);
    CHECK(d_eucl(a, a) == 0.0);
    CHECK(d_eucl(a, b) == doctest::Approx(0.5).epsilon(1e-15));

    Rng rng(1);
    const Image x = oracle::random_image(rng, 40, 40);
    const Image y = oracle::random_image(rng, 40, 40);
    double acc = 0.0;
    for (int py = 0; py < 40; ++py)
        for (int px = 0; px < 40; ++px) {
            const double d = x.at(px, py) - y.at(px, py);
            acc += d * d;
        }
    CHECK(d_eucl(x, y) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));

    Image wrong(3, 3);
    CHECK_THROWS_AS(d_eucl(a, wrong), Error);
}

TEST_CASE("hog distance: self-zero and constant-vs-x identity") {
    Rng rng(2);
    HogConfig cfg;
    cfg.cell = 4;
    const Image x = oracle::random_image(rng, 16, 16);
    CHECK(d_hog(x, x, cfg) == 0.0);

    const Image flat(16, 16, 1, 0.5);
    const auto hx = compute_hog(x, cfg);
    double norm = 0.0;
    for (double v : hx) norm += v * v;
    CHECK(d_hog(flat, x, cfg) == doctest::Approx(std::sqrt(norm)).epsilon(1e-12));
}

TEST_CASE("weak-learner distance: disagreement weights under the root") {
    Rng rng(3);
    const Image a = oracle::random_image(rng, 16, 16);

    WeakLearnerEnsemble ens;
    ens.num_bins = 8;
    // three learners that always fire on any image (tau < 0)
    for (int i = 0; i < 3; ++i) {
        WeakLearner h;
        h.region = {2 + i, 2, 6, 6};
        h.orientation = i;
        h.tau = -1.0;
        h.alpha = 1.0;
        ens.learners.push_back(h);
    }
    CHECK(d_wl(ens, a, a) == 0.0);

    // force disagreement on exactly two learners via taus straddling the
    // actual energies of the two images
    const Image b = oracle::random_image(rng, 16, 16);
    const PixelRect r1 = ens.learners[1].region;
    const PixelRect r2 = ens.learners[2].region;
    const double ea1 = gradient_energy(a, r1, 1, 8);
    const double eb1 = gradient_energy(b, r1, 1, 8);
    const double ea2 = gradient_energy(a, r2, 2, 8);
    const double eb2 = gradient_energy(b, r2, 2, 8);
    ens.learners[1].tau = (ea1 + eb1) / 2.0; // fires on one side only
    ens.learners[2].tau = (ea2 + eb2) / 2.0;
    REQUIRE(ea1 != eb1);
    REQUIRE(ea2 != eb2);
    CHECK(d_wl(ens, a, b) == doctest::Approx(std::sqrt(2.0)));

    // learned weights: disagreement only on the second of (0.9, 0.4)
    WeakLearnerEnsemble learned;
    learned.num_bins = 8;
    WeakLearner h1;
    h1.region = {1, 1, 8, 8};
    h1.tau = -1.0;
    h1.alpha = 0.9; // fires on both
    WeakLearner h2;
    h2.region = r2;
    h2.orientation = 2;
    h2.tau = (ea2 + eb2) / 2.0;
    h2.alpha = 0.4;
    learned.learners = {h1, h2};
    CHECK(d_wl(learned, a, b) == doctest::Approx(std::sqrt(0.4)));

    WeakLearnerEnsemble empty;
    CHECK_THROWS_AS(d_wl(empty, a, b), Error);
}

TEST_CASE("cnn distance: layer-1 exclusion and activation-dump oracle") {
    Rng rng(4);
    const CnnNet net = small_net(rng);
    const Image a = oracle::random_image(rng, 12, 12);
    const Image b = oracle::random_image(rng, 12, 12);
    CHECK(d_cnn(net, a, a) == 0.0);

    const auto acts_a = cnn_forward(net, a);
    const auto acts_b = cnn_forward(net, b);
    double acc = 0.0;
    for (size_t layer = 1; layer < acts_a.size(); ++layer)
        for (size_t i = 0; i < acts_a[layer].size(); ++i) {
            const double d = acts_a[layer][i] - acts_b[layer][i];
            acc += d * d;
        }
    CHECK(d_cnn(net, a, b) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));

    // two-layer linear check: 1x1 identity conv then identity fc of the
    // flattened input; the distance must reduce to L2 over layer 2 alone
    CnnNet linear;
    linear.input_width = 4;
    linear.input_height = 4;
    ConvLayer conv;
    conv.in_channels = conv.out_channels = 1;
    conv.kernel = 1;
    conv.weights = {1.0};
    conv.bias = {0.0};
    linear.layers.push_back(conv);
    FcLayer fc;
    fc.in_size = 16;
    fc.out_size = 16;
    fc.weights.assign(256, 0.0);
    for (int i = 0; i < 16; ++i) fc.weights[i * 16 + i] = 1.0;
    fc.bias.assign(16, 0.0);
    linear.layers.push_back(fc);

    const Image p = oracle::random_image(rng, 4, 4);
    const Image q = oracle::random_image(rng, 4, 4);
    CHECK(d_cnn(linear, p, q) == doctest::Approx(d_eucl(p, q)).epsilon(1e-12));
}

TEST_CASE("axioms: nonnegativity, identity, symmetry, triangle inequality") {
    Rng rng(5);
    HogConfig hog_cfg;
    hog_cfg.cell = 4;
    const CnnNet net = small_net(rng, 16, 16);
    Rng ens_rng(6);
    const WeakLearnerEnsemble ens = random_ensemble(30, 16, 16, 8, ens_rng);

    DistanceSpec specs[5];
    specs[0].kind = DistanceKind::eucl;
    specs[1].kind = DistanceKind::hog;
    specs[1].hog = hog_cfg;
    specs[2].kind = DistanceKind::wl_random;
    specs[2].ensemble = std::make_shared<WeakLearnerEnsemble>(ens);
    specs[3].kind = DistanceKind::wl_learned;
    specs[3].ensemble = std::make_shared<WeakLearnerEnsemble>(ens);
    specs[4].kind = DistanceKind::cnn;
    specs[4].net = std::make_shared<CnnNet>(net);

    double alpha_sum = 0.0;
    for (const auto& h : ens.learners) alpha_sum += h.alpha;

    for (int trial = 0; trial < 30; ++trial) {
        const Image x = oracle::random_image(rng, 16, 16);
        const Image y = oracle::random_image(rng, 16, 16);
        for (const DistanceSpec& d : specs) {
            CHECK(d(x, y) >= 0.0);
            CHECK(d(x, x) == 0.0);
            CHECK(std::abs(d(x, y) - d(y, x)) <= 1e-9);
        }
        CHECK(specs[2](x, y) <= std::sqrt(alpha_sum) + 1e-12);
    }

    for (int trial = 0; trial < 15; ++trial) {
        const Image x = oracle::random_image(rng, 16, 16);
        const Image y = oracle::random_image(rng, 16, 16);
        const Image z = oracle::random_image(rng, 16, 16);
        for (const DistanceSpec* d : {&specs[0], &specs[1], &specs[4]})
            CHECK((*d)(x, z) <= (*d)(x, y) + (*d)(y, z) + 1e-9);
    }
}

TEST_CASE("distance kind names round-trip") {
    for (const char* name : {"eucl", "hog", "wl-random", "wl-learned", "cnn"})
        CHECK(distance_kind_name(parse_distance_kind(name)) == name);
    CHECK_THROWS_AS(parse_distance_kind("dpm"), Error);
}

TEST_SUITE_END();
