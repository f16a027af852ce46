#include "synth/similarity.hpp"
#include "synth/errors.hpp"

#include <cmath>

namespace synth {

double d_eucl(const Image& a, const Image& b) {
    require(a.same_shape(b), ErrorKind::dimension_mismatch,
            "d_eucl: image dimensions differ");
    double acc = 0.0;
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    for (size_t i = 0; i < pa.size(); ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double d_hog(const Image& a, const Image& b, const HogConfig& cfg) {
    const std::vector<double> ha = compute_hog(a, cfg);
    const std::vector<double> hb = compute_hog(b, cfg);
    require(ha.size() == hb.size(), ErrorKind::dimension_mismatch,
            "d_hog: descriptor lengths differ");
    double acc = 0.0;
    for (size_t i = 0; i < ha.size(); ++i) {
        const double d = ha[i] - hb[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double d_wl(const WeakLearnerEnsemble& ensemble, const Image& a,
            const Image& b) {
    require(!ensemble.learners.empty(), ErrorKind::invalid_argument,
            "d_wl: empty ensemble");
    require(a.same_shape(b), ErrorKind::dimension_mismatch,
            "d_wl: image dimensions differ");
    const OrientedEnergyMap map_a(a, ensemble.num_bins);
    const OrientedEnergyMap map_b(b, ensemble.num_bins);
    double acc = 0.0;
    for (const WeakLearner& h : ensemble.learners) {
        const bool ha = map_a.energy(h.region, h.orientation) > h.tau;
        const bool hb = map_b.energy(h.region, h.orientation) > h.tau;
        if (ha != hb) acc += h.alpha;
    }
    return std::sqrt(acc);
}

double d_cnn(const CnnNet& net, const Image& a, const Image& b) {
    const auto acts_a = cnn_forward(net, a);
    const auto acts_b = cnn_forward(net, b);
    require(net.num_layers() >= 2, ErrorKind::invalid_argument,
            "d_cnn: network needs at least two layers");
    double acc = 0.0;
    for (size_t layer = 1; layer < acts_a.size(); ++layer) // layers 2..N
        for (size_t i = 0; i < acts_a[layer].size(); ++i) {
            const double d = acts_a[layer][i] - acts_b[layer][i];
            acc += d * d;
        }
    return std::sqrt(acc);
}

DistanceKind parse_distance_kind(const std::string& name) {
    if (name == "eucl") return DistanceKind::eucl;
    if (name == "hog") return DistanceKind::hog;
    if (name == "wl-random") return DistanceKind::wl_random;
    if (name == "wl-learned") return DistanceKind::wl_learned;
    if (name == "cnn") return DistanceKind::cnn;
    fail(ErrorKind::invalid_argument, "unknown distance kind: " + name);
}

std::string distance_kind_name(DistanceKind kind) {
    switch (kind) {
    case DistanceKind::eucl: return "eucl";
    case DistanceKind::hog: return "hog";
    case DistanceKind::wl_random: return "wl-random";
    case DistanceKind::wl_learned: return "wl-learned";
    case DistanceKind::cnn: return "cnn";
    }
    return "?";
}

double DistanceSpec::operator()(const Image& a, const Image& b) const {
    switch (kind) {
    case DistanceKind::eucl:
        return d_eucl(a, b);
    case DistanceKind::hog:
        return d_hog(a, b, hog);
    case DistanceKind::wl_random:
    case DistanceKind::wl_learned:
        require(ensemble != nullptr, ErrorKind::invalid_argument,
                "distance: weak-learner ensemble payload missing");
        return d_wl(*ensemble, a, b);
    case DistanceKind::cnn:
        require(net != nullptr, ErrorKind::invalid_argument,
                "distance: CNN payload missing");
        return d_cnn(*net, a, b);
    }
    fail(ErrorKind::invalid_argument, "distance: bad kind");
}

} // namespace synth
