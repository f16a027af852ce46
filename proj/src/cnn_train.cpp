#include "synth/errors.hpp"
#include "synth/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace synth {

namespace {

struct Shape3 {
    int c, h, w;
    int flat() const { return c * h * w; }
};

inline double act_deriv(double pre, Activation act) {
    return act == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0;
}

// Per-layer state of one forward pass kept for backprop.
struct TrainCache {
    std::vector<std::vector<double>> inputs;  // input activation per layer
    std::vector<std::vector<double>> preacts; // pre-activation (conv/fc)
    std::vector<Shape3> in_shapes;
    std::vector<double> output;
};

std::vector<double> image_tensor(const CnnNet& net, const Image& img) {
    std::vector<double> data(static_cast<size_t>(net.input_channels) *
                             net.input_height * net.input_width);
    for (int c = 0; c < net.input_channels; ++c)
        for (int y = 0; y < net.input_height; ++y)
            for (int x = 0; x < net.input_width; ++x)
                data[(static_cast<size_t>(c) * net.input_height + y) *
                         net.input_width +
                     x] = img.at(x, y, c);
    return data;
}

TrainCache forward_cached(const CnnNet& net, const Image& img) {
    TrainCache cache;
    Shape3 cur{net.input_channels, net.input_height, net.input_width};
    std::vector<double> data = image_tensor(net, img);

    for (const CnnLayer& layer : net.layers) {
        cache.inputs.push_back(data);
        cache.in_shapes.push_back(cur);
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            const int oh = cur.h - conv->kernel + 1;
            const int ow = cur.w - conv->kernel + 1;
            std::vector<double> pre(static_cast<size_t>(conv->out_channels) *
                                    oh * ow);
            for (int o = 0; o < conv->out_channels; ++o)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        double acc = conv->bias[o];
                        for (int i = 0; i < conv->in_channels; ++i)
                            for (int ky = 0; ky < conv->kernel; ++ky)
                                for (int kx = 0; kx < conv->kernel; ++kx)
                                    acc += conv->w(o, i, ky, kx) *
                                           data[(static_cast<size_t>(i) * cur.h +
                                                 y + ky) *
                                                    cur.w +
                                                x + kx];
                        pre[(static_cast<size_t>(o) * oh + y) * ow + x] = acc;
                    }
            std::vector<double> post(pre.size());
            for (size_t i = 0; i < pre.size(); ++i)
                post[i] = conv->activation == Activation::relu
                              ? std::max(0.0, pre[i])
                              : pre[i];
            cache.preacts.push_back(std::move(pre));
            data = std::move(post);
            cur = {conv->out_channels, oh, ow};
        } else if (std::holds_alternative<PoolLayer>(layer)) {
            const int oh = cur.h / 2, ow = cur.w / 2;
            std::vector<double> post(static_cast<size_t>(cur.c) * oh * ow);
            for (int c = 0; c < cur.c; ++c)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        double best = -1e308;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const double v =
                                    data[(static_cast<size_t>(c) * cur.h +
                                          2 * y + dy) *
                                             cur.w +
                                         2 * x + dx];
                                if (v > best) best = v;
                            }
                        post[(static_cast<size_t>(c) * oh + y) * ow + x] = best;
                    }
            cache.preacts.emplace_back(); // none
            data = std::move(post);
            cur = {cur.c, oh, ow};
        } else {
            const auto& fc = std::get<FcLayer>(layer);
            std::vector<double> pre(fc.out_size);
            for (int o = 0; o < fc.out_size; ++o) {
                double acc = fc.bias[o];
                const double* row =
                    fc.weights.data() + static_cast<size_t>(o) * fc.in_size;
                for (int i = 0; i < fc.in_size; ++i) acc += row[i] * data[i];
                pre[o] = acc;
            }
            std::vector<double> post(pre.size());
            for (size_t i = 0; i < pre.size(); ++i)
                post[i] = fc.activation == Activation::relu
                              ? std::max(0.0, pre[i])
                              : pre[i];
            cache.preacts.push_back(std::move(pre));
            data = std::move(post);
            cur = {fc.out_size, 1, 1};
        }
    }
    cache.output = data;
    return cache;
}

size_t parameter_count(const CnnNet& net) {
    size_t count = 0;
    for (const CnnLayer& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer))
            count += conv->weights.size() + conv->bias.size();
        else if (const auto* fc = std::get_if<FcLayer>(&layer))
            count += fc->weights.size() + fc->bias.size();
    }
    return count;
}

// softmax cross-entropy on the final activations; returns loss, fills
// dlogits (gradient w.r.t. those activations)
double softmax_ce(const std::vector<double>& logits, int target,
                  std::vector<double>& dlogits) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    dlogits.resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) {
        dlogits[i] = std::exp(logits[i] - peak);
        z += dlogits[i];
    }
    double loss = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        const double p = dlogits[i] / z;
        if (static_cast<int>(i) == target) loss = -std::log(p);
        dlogits[i] = p - (static_cast<int>(i) == target ? 1.0 : 0.0);
    }
    return loss;
}

// Accumulates one sample's parameter gradients into `grad`; returns loss.
double backward_sample(const CnnNet& net, const Image& img, int target,
                       std::vector<double>& grad) {
    TrainCache cache = forward_cached(net, img);
    std::vector<double> delta;
    const double loss = softmax_ce(cache.output, target, delta);

    // parameter offsets in declaration order
    std::vector<size_t> offsets(net.layers.size());
    size_t off = 0;
    for (size_t li = 0; li < net.layers.size(); ++li) {
        offsets[li] = off;
        if (const auto* conv = std::get_if<ConvLayer>(&net.layers[li]))
            off += conv->weights.size() + conv->bias.size();
        else if (const auto* fc = std::get_if<FcLayer>(&net.layers[li]))
            off += fc->weights.size() + fc->bias.size();
    }

    for (int li = static_cast<int>(net.layers.size()) - 1; li >= 0; --li) {
        const Shape3 in_shape = cache.in_shapes[li];
        const std::vector<double>& input = cache.inputs[li];
        if (const auto* conv = std::get_if<ConvLayer>(&net.layers[li])) {
            const std::vector<double>& pre = cache.preacts[li];
            const int oh = in_shape.h - conv->kernel + 1;
            const int ow = in_shape.w - conv->kernel + 1;
            for (size_t i = 0; i < delta.size(); ++i)
                delta[i] *= act_deriv(pre[i], conv->activation);

            double* gw = grad.data() + offsets[li];
            double* gb = gw + conv->weights.size();
            std::vector<double> din(input.size(), 0.0);
            for (int o = 0; o < conv->out_channels; ++o)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        const double d =
                            delta[(static_cast<size_t>(o) * oh + y) * ow + x];
                        if (d == 0.0) continue;
                        gb[o] += d;
                        for (int i = 0; i < conv->in_channels; ++i)
                            for (int ky = 0; ky < conv->kernel; ++ky)
                                for (int kx = 0; kx < conv->kernel; ++kx) {
                                    const size_t in_idx =
                                        (static_cast<size_t>(i) * in_shape.h +
                                         y + ky) *
                                            in_shape.w +
                                        x + kx;
                                    gw[((static_cast<size_t>(o) *
                                             conv->in_channels +
                                         i) *
                                            conv->kernel +
                                        ky) *
                                           conv->kernel +
                                       kx] += d * input[in_idx];
                                    din[in_idx] += d * conv->w(o, i, ky, kx);
                                }
                    }
            delta = std::move(din);
        } else if (std::holds_alternative<PoolLayer>(net.layers[li])) {
            const int oh = in_shape.h / 2, ow = in_shape.w / 2;
            std::vector<double> din(input.size(), 0.0);
            for (int c = 0; c < in_shape.c; ++c)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        // recompute the argmax chosen at forward time
                        size_t best_idx = 0;
                        double best = -1e308;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const size_t idx =
                                    (static_cast<size_t>(c) * in_shape.h +
                                     2 * y + dy) *
                                        in_shape.w +
                                    2 * x + dx;
                                if (input[idx] > best) {
                                    best = input[idx];
                                    best_idx = idx;
                                }
                            }
                        din[best_idx] +=
                            delta[(static_cast<size_t>(c) * oh + y) * ow + x];
                    }
            delta = std::move(din);
        } else {
            const auto& fc = std::get<FcLayer>(net.layers[li]);
            const std::vector<double>& pre = cache.preacts[li];
            for (size_t i = 0; i < delta.size(); ++i)
                delta[i] *= act_deriv(pre[i], fc.activation);
            double* gw = grad.data() + offsets[li];
            double* gb = gw + fc.weights.size();
            std::vector<double> din(input.size(), 0.0);
            for (int o = 0; o < fc.out_size; ++o) {
                const double d = delta[o];
                gb[o] += d;
                double* gwr = gw + static_cast<size_t>(o) * fc.in_size;
                const double* wr =
                    fc.weights.data() + static_cast<size_t>(o) * fc.in_size;
                for (int i = 0; i < fc.in_size; ++i) {
                    gwr[i] += d * input[i];
                    din[i] += d * wr[i];
                }
            }
            delta = std::move(din);
        }
    }
    return loss;
}

void apply_update(CnnNet& net, const std::vector<double>& grad, double step) {
    size_t off = 0;
    for (CnnLayer& layer : net.layers) {
        if (auto* conv = std::get_if<ConvLayer>(&layer)) {
            for (double& w : conv->weights) w -= step * grad[off++];
            for (double& b : conv->bias) b -= step * grad[off++];
        } else if (auto* fc = std::get_if<FcLayer>(&layer)) {
            for (double& w : fc->weights) w -= step * grad[off++];
            for (double& b : fc->bias) b -= step * grad[off++];
        }
    }
}

inline int class_index(int label) { return label > 0 ? 1 : 0; }

} // namespace

double cnn_loss(const CnnNet& net, const LabeledPatchSet& batch) {
    require(batch.size() > 0, ErrorKind::invalid_argument,
            "cnn_loss: empty batch");
    double total = 0.0;
    std::vector<double> scratch;
    for (size_t i = 0; i < batch.size(); ++i) {
        const auto acts = cnn_forward(net, batch.patches[i]);
        total += softmax_ce(acts.back(), class_index(batch.labels[i]), scratch);
    }
    return total / static_cast<double>(batch.size());
}

std::vector<double> cnn_loss_gradient(const CnnNet& net,
                                      const LabeledPatchSet& batch) {
    require(batch.size() > 0, ErrorKind::invalid_argument,
            "cnn_loss_gradient: empty batch");
    std::vector<double> grad(parameter_count(net), 0.0);
    for (size_t i = 0; i < batch.size(); ++i)
        backward_sample(net, batch.patches[i], class_index(batch.labels[i]),
                        grad);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return grad;
}

CnnNet train_cnn(const LabeledPatchSet& data, const CnnNet& net0, int epochs,
                 double learning_rate, int batch_size, Rng& rng) {
    require(data.size() >= 2, ErrorKind::invalid_argument,
            "train_cnn: need at least two samples");
    require(batch_size >= 1 && epochs >= 0, ErrorKind::invalid_argument,
            "train_cnn: bad schedule");
    bool has_pos = false, has_neg = false;
    for (int y : data.labels) (y > 0 ? has_pos : has_neg) = true;
    require(has_pos && has_neg, ErrorKind::invalid_argument,
            "train_cnn: both classes must be present");
    layer_shapes(net0); // validates shape compatibility

    CnnNet net = net0;
    if (learning_rate == 0.0 || epochs == 0) return net;

    std::vector<int> indices(data.size());
    std::iota(indices.begin(), indices.end(), 0);
    std::vector<double> grad(parameter_count(net));

    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(indices);
        for (size_t start = 0; start < indices.size();
             start += static_cast<size_t>(batch_size)) {
            const size_t end =
                std::min(indices.size(), start + static_cast<size_t>(batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            double loss = 0.0;
            for (size_t k = start; k < end; ++k)
                loss += backward_sample(net, data.patches[indices[k]],
                                        class_index(data.labels[indices[k]]),
                                        grad);
            if (!std::isfinite(loss))
                fail(ErrorKind::numerical,
                     "train_cnn: loss diverged at epoch " +
                         std::to_string(epoch));
            apply_update(net, grad,
                         learning_rate / static_cast<double>(end - start));
        }
    }
    return net;
}

} // namespace synth
