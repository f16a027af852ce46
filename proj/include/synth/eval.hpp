#pragma once

#include "synth/effects.hpp"
#include "synth/image.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace synth {

struct Detection {
    double x = 0, y = 0;   // window center, original-image coordinates
    int window = 0;        // scanning window side, pixels
    double scale = 1.0;    // image scale the window was scored at
    double score = 0.0;
};

/// Scores from one scale of a sliding-window pass.
struct ScoreMap {
    double scale = 1.0;
    int stride = 1;
    int window = 0;
    int width = 0, height = 0; // map dimensions (window positions)
    std::vector<double> scores;

    double at(int ix, int iy) const {
        return scores[static_cast<size_t>(iy) * width + ix];
    }
    /// center of window (ix, iy) in original-image coordinates
    double center_x(int ix) const;
    double center_y(int iy) const;
};

/// Window scorer interface; begin_image is called once per scaled image so
/// implementations can precompute per-image state.
class WindowScorer {
public:
    virtual ~WindowScorer() = default;
    virtual void begin_image(const Image& /*scaled*/) {}
    virtual double score(const Image& scaled, int x0, int y0,
                         int window) = 0;
};

/// Adapts a plain patch-scoring function.
class PatchFunctionScorer : public WindowScorer {
public:
    explicit PatchFunctionScorer(std::function<double(const Image&)> fn)
        : fn_(std::move(fn)) {}
    double score(const Image& scaled, int x0, int y0, int window) override;

private:
    std::function<double(const Image&)> fn_;
};

/// Scores every stride-aligned window of the bilinearly resized image at
/// each scale. Errors when the window exceeds some scaled image.
std::vector<ScoreMap> sliding_window(WindowScorer& scorer, const Image& image,
                                     const std::vector<double>& scales,
                                     int stride, int window);

std::vector<Detection> maps_to_detections(const std::vector<ScoreMap>& maps);

/// Greedy non-maximum suppression over the scale-space: repeatedly keep
/// the highest-scoring remaining detection and drop all others whose
/// center lies within `radius` of it (any scale). Score ties break by
/// (scale, y, x).
std::vector<Detection> nms(std::vector<Detection> detections, double radius);

struct GtObject {
    double x = 0, y = 0;
    double size = 0; // nominal object size, pixels
};

/// object centers per test image id
using GroundTruth = std::map<std::string, std::vector<GtObject>>;

GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& gt, const std::string& path);

struct ScoredDetection {
    std::string image;
    Detection det;
};

void save_detections(const std::vector<ScoredDetection>& dets,
                     const std::string& path);
std::vector<ScoredDetection> load_detections(const std::string& path);

struct PRPoint {
    double recall = 0, precision = 0;
};

struct PRCurve {
    std::vector<PRPoint> points; // one per score-ordered detection prefix
};

/// Score-ordered greedy matching: each detection claims the nearest
/// unmatched ground-truth center of its image within match_radius (TP),
/// otherwise counts as a false positive. Errors on empty ground truth.
PRCurve pr_curve(const std::vector<ScoredDetection>& detections,
                 const GroundTruth& gt, double match_radius);

/// Exact area under the monotone precision envelope; 0 for an empty curve.
double average_precision(const PRCurve& curve);

/// Equal-width 2D histogram of two named theta coordinates over their
/// observed ranges; the maximum lands in the top bin.
std::vector<std::vector<long>> joint_histogram(const std::vector<Theta>& thetas,
                                               const std::string& coord_a,
                                               const std::string& coord_b,
                                               int bins);

} // namespace synth
