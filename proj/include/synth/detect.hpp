#pragma once

#include "synth/eval.hpp"
#include "synth/learn.hpp"

#include <memory>

namespace synth {

/// Boosted-ensemble window scorer; precomputes one oriented-energy map per
/// scaled image so each window costs O(learners).
class AdaBoostWindowScorer : public WindowScorer {
public:
    explicit AdaBoostWindowScorer(WeakLearnerEnsemble ensemble)
        : ensemble_(std::move(ensemble)) {}

    void begin_image(const Image& scaled) override {
        map_ = std::make_unique<OrientedEnergyMap>(scaled, ensemble_.num_bins);
    }
    double score(const Image&, int x0, int y0, int) override {
        return boost_score(ensemble_, *map_, x0, y0);
    }

private:
    WeakLearnerEnsemble ensemble_;
    std::unique_ptr<OrientedEnergyMap> map_;
};

/// CNN window scorer; score is the positive-class margin of the final
/// layer.
class CnnWindowScorer : public WindowScorer {
public:
    explicit CnnWindowScorer(CnnNet net) : net_(std::move(net)) {}

    double score(const Image& scaled, int x0, int y0, int window) override;

private:
    CnnNet net_;
};

} // namespace synth
