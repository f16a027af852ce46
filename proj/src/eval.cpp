#include "synth/eval.hpp"
#include "synth/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace synth {

// the resize mapping is src = (dst + 0.5) / scale - 0.5; window centers map
// back through it
double ScoreMap::center_x(int ix) const {
    const double scaled_center = ix * stride + 0.5 * window;
    return scaled_center / scale - 0.5;
}

double ScoreMap::center_y(int iy) const {
    const double scaled_center = iy * stride + 0.5 * window;
    return scaled_center / scale - 0.5;
}

double PatchFunctionScorer::score(const Image& scaled, int x0, int y0,
                                  int window) {
    Image patch(window, window, scaled.channels());
    for (int y = 0; y < window; ++y)
        for (int x = 0; x < window; ++x)
            for (int c = 0; c < scaled.channels(); ++c)
                patch.set(x, y, scaled.at(x0 + x, y0 + y, c), c);
    return fn_(patch);
}

std::vector<ScoreMap> sliding_window(WindowScorer& scorer, const Image& image,
                                     const std::vector<double>& scales,
                                     int stride, int window) {
    require(!scales.empty(), ErrorKind::invalid_argument,
            "sliding_window: no scales given");
    require(stride >= 1 && window >= 1, ErrorKind::invalid_argument,
            "sliding_window: bad stride or window");
    std::vector<ScoreMap> maps;
    for (double scale : scales) {
        require(scale > 0.0, ErrorKind::invalid_argument,
                "sliding_window: scales must be positive");
        const int sw = std::max(1, static_cast<int>(std::lround(image.width() * scale)));
        const int sh = std::max(1, static_cast<int>(std::lround(image.height() * scale)));
        require(window <= sw && window <= sh, ErrorKind::invalid_argument,
                "sliding_window: window larger than image at scale " +
                    std::to_string(scale));
        const Image scaled = resize_bilinear(image, sw, sh);
        scorer.begin_image(scaled);

        ScoreMap map;
        map.scale = scale;
        map.stride = stride;
        map.window = window;
        map.width = (sw - window) / stride + 1;
        map.height = (sh - window) / stride + 1;
        map.scores.resize(static_cast<size_t>(map.width) * map.height);
        for (int iy = 0; iy < map.height; ++iy)
            for (int ix = 0; ix < map.width; ++ix)
                map.scores[static_cast<size_t>(iy) * map.width + ix] =
                    scorer.score(scaled, ix * stride, iy * stride, window);
        maps.push_back(std::move(map));
    }
    return maps;
}

std::vector<Detection> maps_to_detections(const std::vector<ScoreMap>& maps) {
    std::vector<Detection> dets;
    for (const ScoreMap& map : maps)
        for (int iy = 0; iy < map.height; ++iy)
            for (int ix = 0; ix < map.width; ++ix)
                dets.push_back({map.center_x(ix), map.center_y(iy), map.window,
                                map.scale, map.at(ix, iy)});
    return dets;
}

std::vector<Detection> nms(std::vector<Detection> detections, double radius) {
    require(radius > 0.0, ErrorKind::invalid_argument,
            "nms: radius must be positive");
    std::sort(detections.begin(), detections.end(),
              [](const Detection& a, const Detection& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.scale != b.scale) return a.scale < b.scale;
                  if (a.y != b.y) return a.y < b.y;
                  return a.x < b.x;
              });
    std::vector<Detection> kept;
    std::vector<bool> suppressed(detections.size(), false);
    for (size_t i = 0; i < detections.size(); ++i) {
        if (suppressed[i]) continue;
        kept.push_back(detections[i]);
        for (size_t j = i + 1; j < detections.size(); ++j) {
            if (suppressed[j]) continue;
            const double dx = detections[i].x - detections[j].x;
            const double dy = detections[i].y - detections[j].y;
            if (std::sqrt(dx * dx + dy * dy) <= radius) suppressed[j] = true;
        }
    }
    return kept;
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    GroundTruth gt;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        std::string image;
        if (!(ss >> image)) continue;
        GtObject obj;
        if (!(ss >> obj.x >> obj.y >> obj.size))
            fail(ErrorKind::corrupt_data,
                 path + ":" + std::to_string(lineno) +
                     ": ground truth row needs `image x y size`");
        gt[image].push_back(obj);
    }
    return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    char buf[96];
    for (const auto& [image, objects] : gt)
        for (const GtObject& obj : objects) {
            std::snprintf(buf, sizeof(buf), " %.17g %.17g %.17g\n", obj.x,
                          obj.y, obj.size);
            out << image << buf;
        }
}

void save_detections(const std::vector<ScoredDetection>& dets,
                     const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    out << "image,x,y,scale,score\n";
    char buf[128];
    for (const ScoredDetection& d : dets) {
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g\n", d.det.x,
                      d.det.y, d.det.scale, d.det.score);
        out << d.image << buf;
    }
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

std::vector<ScoredDetection> load_detections(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) &&
                line == "image,x,y,scale,score",
            ErrorKind::corrupt_data, path + ": bad detections header");
    std::vector<ScoredDetection> dets;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        require(fields.size() == 5, ErrorKind::corrupt_data,
                path + ":" + std::to_string(lineno) + ": bad detection row");
        ScoredDetection d;
        d.image = fields[0];
        try {
            d.det.x = std::stod(fields[1]);
            d.det.y = std::stod(fields[2]);
            d.det.scale = std::stod(fields[3]);
            d.det.score = std::stod(fields[4]);
        } catch (const std::exception&) {
            fail(ErrorKind::corrupt_data,
                 path + ":" + std::to_string(lineno) + ": bad detection value");
        }
        dets.push_back(std::move(d));
    }
    return dets;
}

PRCurve pr_curve(const std::vector<ScoredDetection>& detections,
                 const GroundTruth& gt, double match_radius) {
    require(match_radius > 0.0, ErrorKind::invalid_argument,
            "pr_curve: match radius must be positive");
    size_t total_gt = 0;
    for (const auto& [image, objects] : gt) total_gt += objects.size();
    require(total_gt > 0, ErrorKind::invalid_argument,
            "pr_curve: empty ground truth (recall undefined)");

    std::vector<const ScoredDetection*> order;
    order.reserve(detections.size());
    for (const ScoredDetection& d : detections) order.push_back(&d);
    std::stable_sort(order.begin(), order.end(),
                     [](const ScoredDetection* a, const ScoredDetection* b) {
                         return a->det.score > b->det.score;
                     });

    std::map<std::string, std::vector<bool>> matched;
    for (const auto& [image, objects] : gt)
        matched[image].assign(objects.size(), false);

    PRCurve curve;
    size_t tp = 0, fp = 0;
    for (const ScoredDetection* d : order) {
        bool is_tp = false;
        const auto it = gt.find(d->image);
        if (it != gt.end()) {
            // nearest unmatched center within the radius
            int best = -1;
            double best_dist = match_radius;
            auto& used = matched[d->image];
            for (size_t k = 0; k < it->second.size(); ++k) {
                if (used[k]) continue;
                const double dx = it->second[k].x - d->det.x;
                const double dy = it->second[k].y - d->det.y;
                const double dist = std::sqrt(dx * dx + dy * dy);
                if (dist <= best_dist) {
                    best_dist = dist;
                    best = static_cast<int>(k);
                }
            }
            if (best >= 0) {
                used[best] = true;
                is_tp = true;
            }
        }
        if (is_tp) ++tp; else ++fp;
        curve.points.push_back(
            {static_cast<double>(tp) / static_cast<double>(total_gt),
             static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }
    return curve;
}

double average_precision(const PRCurve& curve) {
    if (curve.points.empty()) return 0.0;
    // envelope(r) = max precision over points with recall >= r, integrated
    // exactly as a step function over the distinct recall values
    std::vector<PRPoint> pts = curve.points;
    std::sort(pts.begin(), pts.end(), [](const PRPoint& a, const PRPoint& b) {
        return a.recall < b.recall;
    });
    // suffix max of precision
    std::vector<double> envelope(pts.size());
    double run = 0.0;
    for (size_t i = pts.size(); i-- > 0;) {
        run = std::max(run, pts[i].precision);
        envelope[i] = run;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    size_t i = 0;
    while (i < pts.size()) {
        // envelope at a recall value is the suffix max taken at the first
        // point of its group, which covers the whole group
        ap += (pts[i].recall - prev_recall) * envelope[i];
        prev_recall = pts[i].recall;
        size_t j = i;
        while (j < pts.size() && pts[j].recall == pts[i].recall) ++j;
        i = j;
    }
    return ap;
}

std::vector<std::vector<long>> joint_histogram(const std::vector<Theta>& thetas,
                                               const std::string& coord_a,
                                               const std::string& coord_b,
                                               int bins) {
    require(!thetas.empty(), ErrorKind::invalid_argument,
            "joint_histogram: no thetas given");
    require(bins >= 1, ErrorKind::invalid_argument,
            "joint_histogram: need at least one bin");
    std::vector<double> va, vb;
    va.reserve(thetas.size());
    vb.reserve(thetas.size());
    for (const Theta& t : thetas) {
        va.push_back(t.coordinate(coord_a));
        vb.push_back(t.coordinate(coord_b));
    }
    const auto [a_lo_it, a_hi_it] = std::minmax_element(va.begin(), va.end());
    const auto [b_lo_it, b_hi_it] = std::minmax_element(vb.begin(), vb.end());
    const double a_lo = *a_lo_it, a_hi = *a_hi_it;
    const double b_lo = *b_lo_it, b_hi = *b_hi_it;
    auto bin_of = [bins](double v, double lo, double hi) {
        if (hi <= lo) return 0;
        const int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        return std::clamp(b, 0, bins - 1);
    };
    std::vector<std::vector<long>> grid(bins, std::vector<long>(bins, 0));
    for (size_t i = 0; i < va.size(); ++i)
        ++grid[bin_of(va[i], a_lo, a_hi)][bin_of(vb[i], b_lo, b_hi)];
    return grid;
}

} // namespace synth
