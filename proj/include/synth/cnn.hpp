#pragma once

#include "synth/image.hpp"
#include "synth/rng.hpp"

#include <string>
#include <variant>
#include <vector>

namespace synth {

enum class Activation { identity, relu };

/// k x k convolution, stride 1, valid padding, with bias.
struct ConvLayer {
    int in_channels = 1;
    int out_channels = 1;
    int kernel = 3;
    std::vector<double> weights; // [out][in][ky][kx]
    std::vector<double> bias;    // [out]
    Activation activation = Activation::identity;

    double w(int o, int i, int ky, int kx) const {
        return weights[((static_cast<size_t>(o) * in_channels + i) * kernel +
                        ky) *
                           kernel +
                       kx];
    }
};

struct PoolLayer {}; // 2x2 max pool, stride 2

struct FcLayer {
    int in_size = 0;
    int out_size = 0;
    std::vector<double> weights; // [out][in]
    std::vector<double> bias;    // [out]
    Activation activation = Activation::identity;
};

using CnnLayer = std::variant<ConvLayer, PoolLayer, FcLayer>;

struct CnnNet {
    int input_width = 40;
    int input_height = 40;
    int input_channels = 1;
    std::vector<CnnLayer> layers;

    int num_layers() const { return static_cast<int>(layers.size()); }
};

/// Shape of every layer's output; throws on incompatible layers.
struct LayerShape {
    int channels, height, width;
    int flat() const { return channels * height * width; }
};
std::vector<LayerShape> layer_shapes(const CnnNet& net);

/// Post-activation values of every layer 1..N, each flattened
/// channel-major.
std::vector<std::vector<double>> cnn_forward(const CnnNet& net,
                                             const Image& img);

/// conv 5x5x6 / relu -> pool -> conv 5x5x12 / relu -> pool -> fc 64 / relu
/// -> fc 2. The smallest stack that exercises a multi-layer activation
/// distance on 40x40 patches.
CnnNet make_default_cnn(int input_width, int input_height, Rng& rng);

/// Text format: header with layer shapes, then all parameters in
/// declaration order at full precision (bit-stable round-trip).
void save_cnn(const CnnNet& net, const std::string& path);
CnnNet load_cnn(const std::string& path);

} // namespace synth
