#include "synth/optimize.hpp"
#include "synth/errors.hpp"

#include <algorithm>
#include <cmath>

namespace synth {

SAConfig default_sa_config(int image_width, int image_height) {
    SAConfig cfg;
    // 150 cooling levels: T_end ~ 2e-5 of T0, cold enough that the final
    // phase is effectively coordinate descent
    cfg.cooling = 0.93;
    cfg.steps_per_temperature = 50;
    cfg.max_iterations = 7500;
    // order: alpha beta gamma tx ty sigma_s sigma_mu sigma_mv alpha_m sigma_n w_d
    cfg.proposal_std = {0.1, 0.1, 0.1, 2.0, 2.0, 0.3, 0.3, 0.3, 0.2, 0.02, 0.05};
    cfg.lower = {-M_PI, -M_PI, -M_PI, 0.0, 0.0, 0.0, 0.0, 0.0, -M_PI, 0.0, 0.0};
    cfg.upper = {M_PI,
                 M_PI,
                 M_PI,
                 static_cast<double>(image_width),
                 static_cast<double>(image_height),
                 5.0,
                 5.0,
                 5.0,
                 M_PI,
                 0.2,
                 1.0};
    return cfg;
}

FitResult simulated_annealing(const std::function<double(const Theta&)>& objective,
                              const Theta& theta0, const SAConfig& cfg,
                              Rng& rng, const SaObserver& observer) {
    require(cfg.cooling > 0.0 && cfg.cooling < 1.0, ErrorKind::invalid_argument,
            "simulated_annealing: cooling factor must be in (0,1)");
    require(cfg.steps_per_temperature > 0 && cfg.max_iterations > 0,
            ErrorKind::invalid_argument, "simulated_annealing: bad budget");
    for (int i = 0; i < Theta::kDim; ++i)
        require(cfg.lower[i] < cfg.upper[i], ErrorKind::invalid_argument,
                "simulated_annealing: bounds must satisfy low < high");

    auto arr = theta0.to_array();
    for (int i = 0; i < Theta::kDim; ++i)
        require(arr[i] >= cfg.lower[i] && arr[i] <= cfg.upper[i],
                ErrorKind::invalid_argument,
                "simulated_annealing: theta0 outside bounds");

    auto evaluate = [&](const Theta& t) {
        const double v = objective(t);
        if (std::isnan(v)) {
            std::string msg = "simulated_annealing: objective returned NaN at";
            for (double x : t.to_array()) msg += " " + std::to_string(x);
            fail(ErrorKind::numerical, msg);
        }
        return v;
    };

    double current = evaluate(theta0);
    require(std::isfinite(current), ErrorKind::numerical,
            "simulated_annealing: objective not finite at theta0");

    const double t0 =
        cfg.initial_temperature > 0.0
            ? cfg.initial_temperature
            : std::max(std::abs(current), 1e-12);
    double temperature = t0;

    FitResult result;
    result.theta = theta0;
    result.objective = current;
    result.trace.reserve(cfg.max_iterations);

    auto cur_arr = arr;
    int iteration = 0;
    while (iteration < cfg.max_iterations && temperature >= 1e-6 * t0) {
        for (int step = 0;
             step < cfg.steps_per_temperature && iteration < cfg.max_iterations;
             ++step, ++iteration) {
            const int coord = rng.uniform_int(0, Theta::kDim - 1);
            auto prop_arr = cur_arr;
            prop_arr[coord] = std::clamp(
                prop_arr[coord] + rng.normal(0.0, cfg.proposal_std[coord]),
                cfg.lower[coord], cfg.upper[coord]);
            const Theta proposal = Theta::from_array(prop_arr);
            const double value = evaluate(proposal);
            const double delta = value - current;
            bool accepted = delta <= 0.0;
            if (!accepted) {
                const double p = std::exp(-delta / temperature);
                accepted = rng.uniform() < p;
            }
            if (observer) observer(iteration, proposal, value, accepted);
            if (accepted) {
                cur_arr = prop_arr;
                current = value;
                if (value < result.objective) {
                    result.objective = value;
                    result.theta = proposal;
                }
            }
            result.trace.push_back(result.objective);
        }
        temperature *= cfg.cooling;
    }
    return result;
}

uint64_t noise_seed_for(const std::string& seed_id, uint64_t index) {
    return derive_seed(seed_id, index);
}

FitResult fit_theta(const Image& real, const Image& background,
                    const Mesh& mesh, double center_x, double center_y,
                    const DistanceSpec& dist, const SAConfig& cfg,
                    const RenderConfig& render_cfg, const std::string& seed_id,
                    Rng& rng) {
    require(real.same_shape(background), ErrorKind::dimension_mismatch,
            "fit_theta: real and background dimensions differ");
    require(real.channels() == 1, ErrorKind::dimension_mismatch,
            "fit_theta: grayscale input required (use fit_theta_rgb for color)");
    require(center_x >= 0 && center_x < real.width() && center_y >= 0 &&
                center_y < real.height(),
            ErrorKind::invalid_argument, "fit_theta: object center off-image");

    Theta theta0;
    theta0.pose = {0.0, 0.0, 0.0, center_x, center_y};
    // capture block initialized uniformly within bounds (indices 5..10)
    auto arr = theta0.to_array();
    for (int i = 5; i < Theta::kDim; ++i)
        arr[i] = rng.uniform(cfg.lower[i], cfg.upper[i]);
    theta0 = Theta::from_array(arr);

    const uint64_t noise_seed = noise_seed_for(seed_id, 0);
    auto objective = [&](const Theta& theta) {
        Rng noise(noise_seed);
        const SynthResult synth =
            synthesize(theta, background, mesh, render_cfg, noise);
        return dist(real, synth.image);
    };

    FitResult result = simulated_annealing(objective, theta0, cfg, rng);
    result.seed_id = seed_id;
    return result;
}

std::array<FitResult, 3> fit_theta_rgb(const Image& real,
                                       const Image& background,
                                       const Mesh& mesh, double center_x,
                                       double center_y,
                                       const DistanceSpec& dist,
                                       const SAConfig& cfg,
                                       const RenderConfig& render_cfg,
                                       const std::string& seed_id, Rng& rng) {
    require(real.channels() == 3 && background.channels() == 3,
            ErrorKind::dimension_mismatch,
            "fit_theta_rgb: 3-channel inputs required");
    require(real.same_shape(background), ErrorKind::dimension_mismatch,
            "fit_theta_rgb: real and background dimensions differ");

    // one generator seed and one noise stream (from the base seed_id)
    // shared across channels, so equal channel content yields equal fits
    const uint64_t channel_seed = rng.next_u64();
    static const char* kSuffix[3] = {"#r", "#g", "#b"};
    std::array<FitResult, 3> results;
    for (int c = 0; c < 3; ++c) {
        Rng channel_rng(channel_seed);
        results[c] = fit_theta(real.channel(c), background.channel(c), mesh,
                               center_x, center_y, dist, cfg, render_cfg,
                               seed_id, channel_rng);
        results[c].seed_id = seed_id + kSuffix[c];
    }
    return results;
}

} // namespace synth
