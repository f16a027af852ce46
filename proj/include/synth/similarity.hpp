#pragma once

#include "synth/cnn.hpp"
#include "synth/features.hpp"
#include "synth/image.hpp"

#include <memory>
#include <string>

namespace synth {

/// Plain Euclidean distance between intensity values.
double d_eucl(const Image& a, const Image& b);

/// L2 distance between HoG descriptors.
double d_hog(const Image& a, const Image& b, const HogConfig& cfg);

/// sqrt(sum_i alpha_i (h_i(a) - h_i(b))^2) over the ensemble's weak
/// learners, i.e. the weighted disagreement count under the root.
double d_wl(const WeakLearnerEnsemble& ensemble, const Image& a,
            const Image& b);

/// L2 distance over the activations of layers 2..N (the first layer is
/// excluded).
double d_cnn(const CnnNet& net, const Image& a, const Image& b);

enum class DistanceKind { eucl, hog, wl_random, wl_learned, cnn };

DistanceKind parse_distance_kind(const std::string& name);
std::string distance_kind_name(DistanceKind kind);

/// Single dispatch point for the five similarity functions; holds whatever
/// payload the chosen kind requires.
struct DistanceSpec {
    DistanceKind kind = DistanceKind::eucl;
    HogConfig hog;
    std::shared_ptr<const WeakLearnerEnsemble> ensemble;
    std::shared_ptr<const CnnNet> net;

    double operator()(const Image& a, const Image& b) const;
};

} // namespace synth
