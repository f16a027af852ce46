#include "synth/learn.hpp"
#include "synth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace synth {

WeakLearnerEnsemble random_ensemble(int n, int width, int height,
                                    int num_bins, Rng& rng) {
    require(n >= 1, ErrorKind::invalid_argument,
            "random_ensemble: need at least one learner");
    constexpr int kMinSide = 4;
    require(width >= kMinSide && height >= kMinSide,
            ErrorKind::invalid_argument,
            "random_ensemble: image too small for minimum region size");
    WeakLearnerEnsemble ensemble;
    ensemble.provenance = EnsembleProvenance::random;
    ensemble.num_bins = num_bins;
    ensemble.learners.reserve(n);
    for (int i = 0; i < n; ++i) {
        WeakLearner h;
        h.region.w = rng.uniform_int(kMinSide, width);
        h.region.x = rng.uniform_int(0, width - h.region.w);
        h.region.h = rng.uniform_int(kMinSide, height);
        h.region.y = rng.uniform_int(0, height - h.region.h);
        h.orientation = rng.uniform_int(0, num_bins - 1);
        h.tau = rng.uniform();
        h.alpha = 1.0;
        ensemble.learners.push_back(h);
    }
    return ensemble;
}

WeakLearnerEnsemble train_adaboost(const LabeledPatchSet& data,
                                   const WeakLearnerEnsemble& pool,
                                   int rounds) {
    const size_t n = data.size();
    require(n >= 2 && data.labels.size() == n, ErrorKind::invalid_argument,
            "train_adaboost: bad dataset");
    require(!pool.learners.empty(), ErrorKind::invalid_argument,
            "train_adaboost: empty candidate pool");
    require(rounds >= 1, ErrorKind::invalid_argument,
            "train_adaboost: need at least one round");
    bool has_pos = false, has_neg = false;
    for (int y : data.labels) (y > 0 ? has_pos : has_neg) = true;
    require(has_pos && has_neg, ErrorKind::invalid_argument,
            "train_adaboost: both classes must be present");

    const size_t pool_size = pool.learners.size();

    // energies[l][j]: candidate l on sample j, via one energy map per sample
    std::vector<std::vector<double>> energies(pool_size,
                                              std::vector<double>(n));
    for (size_t j = 0; j < n; ++j) {
        const OrientedEnergyMap map(data.patches[j], pool.num_bins);
        for (size_t l = 0; l < pool_size; ++l) {
            const WeakLearner& h = pool.learners[l];
            energies[l][j] = map.energy(h.region, h.orientation);
        }
    }
    // per-candidate sample order by energy, computed once
    std::vector<std::vector<int>> order(pool_size, std::vector<int>(n));
    for (size_t l = 0; l < pool_size; ++l) {
        std::iota(order[l].begin(), order[l].end(), 0);
        std::stable_sort(order[l].begin(), order[l].end(),
                         [&](int a, int b) {
                             return energies[l][a] < energies[l][b];
                         });
    }

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    WeakLearnerEnsemble out;
    out.provenance = EnsembleProvenance::adaboost;
    out.num_bins = pool.num_bins;

    for (int t = 0; t < rounds; ++t) {
        double best_err = 2.0, best_tau = 0.0;
        size_t best_l = 0;
        for (size_t l = 0; l < pool_size; ++l) {
            const auto& ord = order[l];
            const auto& e = energies[l];
            // partition: samples with E <= tau predict -1, the rest +1.
            // start with everything on the +1 side
            double err = 0.0;
            for (size_t j = 0; j < n; ++j)
                if (data.labels[j] < 0) err += weights[j];
            if (e[ord[0]] > 0.0) { // "all +1" realizable with tau in [0, Emin)
                const double tau = e[ord[0]] / 2.0;
                if (err < best_err) {
                    best_err = err;
                    best_tau = tau;
                    best_l = l;
                }
            }
            size_t k = 0;
            while (k < n) {
                // move the whole group of equal energies to the -1 side
                const double group_e = e[ord[k]];
                while (k < n && e[ord[k]] == group_e) {
                    const int j = ord[k];
                    err += data.labels[j] > 0 ? weights[j] : -weights[j];
                    ++k;
                }
                const double next_e = k < n ? e[ord[k]] : 1.0;
                const double tau = (group_e + next_e) / 2.0;
                if (err < best_err) {
                    best_err = err;
                    best_tau = tau;
                    best_l = l;
                }
            }
        }

        const double eps = std::max(best_err, 0.0);
        if (eps >= 0.5) {
            require(t > 0, ErrorKind::invalid_argument,
                    "train_adaboost: no candidate beats chance (unlearnable pool)");
            break;
        }

        WeakLearner chosen = pool.learners[best_l];
        chosen.tau = best_tau;
        if (eps < 1e-12) { // zero up to the dust of incremental weight sums
            chosen.alpha = 0.5 * std::log(1e6);
            out.learners.push_back(chosen);
            break;
        }
        chosen.alpha = 0.5 * std::log((1.0 - eps) / eps);
        out.learners.push_back(chosen);

        double total = 0.0;
        for (size_t j = 0; j < n; ++j) {
            const int pred = energies[best_l][j] > best_tau ? 1 : -1;
            weights[j] *= std::exp(-chosen.alpha * data.labels[j] * pred);
            total += weights[j];
        }
        for (double& w : weights) w /= total;
    }
    return out;
}

double boost_score(const WeakLearnerEnsemble& ensemble, const Image& img) {
    require(!ensemble.learners.empty(), ErrorKind::invalid_argument,
            "boost_score: empty ensemble");
    double score = 0.0;
    for (const WeakLearner& h : ensemble.learners)
        score += h.alpha * (eval_weak(h, img, ensemble.num_bins) ? 1.0 : -1.0);
    return score;
}

double boost_score(const WeakLearnerEnsemble& ensemble,
                   const OrientedEnergyMap& map, int x_offset, int y_offset) {
    require(!ensemble.learners.empty(), ErrorKind::invalid_argument,
            "boost_score: empty ensemble");
    double score = 0.0;
    for (const WeakLearner& h : ensemble.learners) {
        const bool fires =
            map.energy(h.region, h.orientation, x_offset, y_offset) > h.tau;
        score += h.alpha * (fires ? 1.0 : -1.0);
    }
    return score;
}

void save_ensemble(const WeakLearnerEnsemble& ensemble,
                   const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    out << "ensemble "
        << (ensemble.provenance == EnsembleProvenance::random ? "random"
                                                              : "adaboost")
        << " " << ensemble.num_bins << " " << ensemble.learners.size() << "\n";
    char buf[80];
    for (const WeakLearner& h : ensemble.learners) {
        std::snprintf(buf, sizeof(buf), "%d %d %d %d %d %.17g %.17g\n",
                      h.region.x, h.region.y, h.region.w, h.region.h,
                      h.orientation, h.tau, h.alpha);
        out << buf;
    }
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

WeakLearnerEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    std::string tag, provenance;
    size_t count = 0;
    WeakLearnerEnsemble ensemble;
    if (!(in >> tag >> provenance >> ensemble.num_bins >> count) ||
        tag != "ensemble")
        fail(ErrorKind::corrupt_data, path + ": bad ensemble header");
    if (provenance == "random")
        ensemble.provenance = EnsembleProvenance::random;
    else if (provenance == "adaboost")
        ensemble.provenance = EnsembleProvenance::adaboost;
    else
        fail(ErrorKind::corrupt_data, path + ": unknown provenance");
    ensemble.learners.resize(count);
    for (WeakLearner& h : ensemble.learners)
        if (!(in >> h.region.x >> h.region.y >> h.region.w >> h.region.h >>
              h.orientation >> h.tau >> h.alpha))
            fail(ErrorKind::corrupt_data, path + ": truncated ensemble");
    require(!ensemble.learners.empty(), ErrorKind::corrupt_data,
            path + ": empty ensemble");
    return ensemble;
}

} // namespace synth
