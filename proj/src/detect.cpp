#include "synth/detect.hpp"
#include "synth/errors.hpp"

namespace synth {

double CnnWindowScorer::score(const Image& scaled, int x0, int y0,
                              int window) {
    require(window == net_.input_width && window == net_.input_height,
            ErrorKind::dimension_mismatch,
            "CnnWindowScorer: window does not match network input");
    Image patch(window, window, scaled.channels());
    for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x)
            for (int c = 0; c < scaled.channels(); ++c)
                patch.set(x, y, scaled.at(x0 + x, y0 + y, c), c);
    const auto acts = cnn_forward(net_, patch);
    const auto& out = acts.back();
    require(out.size() == 2, ErrorKind::invalid_argument,
            "CnnWindowScorer: network must end in a 2-way layer");
    return out[1] - out[0];
}

} // namespace synth
