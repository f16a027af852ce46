#pragma once

#include "synth/cnn.hpp"
#include "synth/features.hpp"
#include "synth/rng.hpp"

#include <string>
#include <vector>

namespace synth {

struct LabeledPatchSet {
    std::vector<Image> patches;
    std::vector<int> labels; // +1 / -1

    void add(Image patch, int label) {
        patches.push_back(std::move(patch));
        labels.push_back(label);
    }
    size_t size() const { return patches.size(); }
};

/// n weak learners with uniform in-bounds rectangles (min side 4 px),
/// uniform orientation bin, tau uniform in [0,1] and alpha == 1.
WeakLearnerEnsemble random_ensemble(int n, int width, int height,
                                    int num_bins, Rng& rng);

/// Discrete AdaBoost over the candidate pool. Each round re-optimizes the
/// threshold of every candidate over the observed energies and keeps the
/// weighted-error minimizer; alpha_t = 0.5*ln((1-eps)/eps). Stops early on
/// eps >= 0.5, or on eps == 0 with the last alpha capped at 0.5*ln(1e6).
/// Throws when no candidate beats 0.5 in round one.
WeakLearnerEnsemble train_adaboost(const LabeledPatchSet& data,
                                   const WeakLearnerEnsemble& pool,
                                   int rounds);

/// Signed margin sum_i alpha_i * (2 h_i(img) - 1); classify at 0.
double boost_score(const WeakLearnerEnsemble& ensemble, const Image& img);

/// Same margin evaluated through a precomputed energy map, with the
/// learner regions translated by (x_offset, y_offset). This is the fast
/// path for sliding-window scoring.
double boost_score(const WeakLearnerEnsemble& ensemble,
                   const OrientedEnergyMap& map, int x_offset, int y_offset);

/// Text format: `ensemble <provenance> <bins> <count>` header then one
/// learner per line `x y w h o tau alpha`.
void save_ensemble(const WeakLearnerEnsemble& ensemble,
                   const std::string& path);
WeakLearnerEnsemble load_ensemble(const std::string& path);

/// Minibatch SGD with softmax cross-entropy on the (2-way) final layer.
/// Batches are reshuffled each epoch from the given generator, so training
/// is deterministic per seed. Throws a numerical error naming the epoch if
/// the loss becomes NaN.
CnnNet train_cnn(const LabeledPatchSet& data, const CnnNet& net0, int epochs,
                 double learning_rate, int batch_size, Rng& rng);

/// Analytic loss gradients for one batch, flattened in declaration order
/// (conv weights, conv bias, fc weights, fc bias per layer). Exposed for
/// finite-difference verification.
std::vector<double> cnn_loss_gradient(const CnnNet& net,
                                      const LabeledPatchSet& batch);
double cnn_loss(const CnnNet& net, const LabeledPatchSet& batch);

} // namespace synth
