#pragma once

#include "synth/datagen.hpp"
#include "synth/optimize.hpp"

#include <string>
#include <vector>

namespace synth {

/// Run-wide configuration from a plain `key = value` file with [render],
/// [sa], [distance], [dataset] and [eval] sections. Unknown sections or
/// keys are rejected with the offending name.
struct RunConfig {
    RenderConfig render;
    SAConfig sa;
    HogConfig hog;
    int wl_bins = 8;
    int wl_count = 200;
    PoseRanges ranges;
    std::vector<double> scales{1.0};
    int stride = 4;
    int window = 40;
    double nms_radius = 12.0;
    double match_radius = 0.0; // 0: half the window

    RunConfig();
    static RunConfig load(const std::string& path);

    double effective_match_radius() const {
        return match_radius > 0.0 ? match_radius : 0.5 * window;
    }
};

/// CLI entry point; argv without the program name. Returns the process
/// exit code (0 ok, 1 usage, 2 data error, 3 numerical failure).
int run_cli(const std::vector<std::string>& args);

} // namespace synth
