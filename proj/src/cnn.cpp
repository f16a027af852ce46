#include "synth/cnn.hpp"
#include "synth/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace synth {

namespace {

inline double activate(double v, Activation act) {
    return act == Activation::relu ? (v > 0.0 ? v : 0.0) : v;
}

} // namespace

std::vector<LayerShape> layer_shapes(const CnnNet& net) {
    require(!net.layers.empty(), ErrorKind::invalid_argument,
            "cnn: network has no layers");
    std::vector<LayerShape> shapes;
    LayerShape cur{net.input_channels, net.input_height, net.input_width};
    for (size_t li = 0; li < net.layers.size(); ++li) {
        const CnnLayer& layer = net.layers[li];
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            require(conv->in_channels == cur.channels,
                    ErrorKind::invalid_argument,
                    "cnn: conv input channels mismatch");
            require(cur.height >= conv->kernel && cur.width >= conv->kernel,
                    ErrorKind::invalid_argument,
                    "cnn: input smaller than conv kernel");
            cur = {conv->out_channels, cur.height - conv->kernel + 1,
                   cur.width - conv->kernel + 1};
        } else if (std::holds_alternative<PoolLayer>(layer)) {
            require(cur.height >= 2 && cur.width >= 2,
                    ErrorKind::invalid_argument, "cnn: input too small to pool");
            cur = {cur.channels, cur.height / 2, cur.width / 2};
        } else {
            const auto& fc = std::get<FcLayer>(layer);
            require(fc.in_size == cur.flat(), ErrorKind::invalid_argument,
                    "cnn: fc input size mismatch");
            cur = {fc.out_size, 1, 1};
        }
        shapes.push_back(cur);
    }
    return shapes;
}

std::vector<std::vector<double>> cnn_forward(const CnnNet& net,
                                             const Image& img) {
    require(img.width() == net.input_width &&
                img.height() == net.input_height &&
                img.channels() == net.input_channels,
            ErrorKind::dimension_mismatch,
            "cnn_forward: image does not match network input shape");
    layer_shapes(net); // validates

    LayerShape cur{net.input_channels, net.input_height, net.input_width};
    std::vector<double> data(static_cast<size_t>(cur.flat()));
    for (int c = 0; c < cur.channels; ++c)
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x)
                data[(static_cast<size_t>(c) * cur.height + y) * cur.width + x] =
                    img.at(x, y, c);

    std::vector<std::vector<double>> activations;
    for (const CnnLayer& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            const int oh = cur.height - conv->kernel + 1;
            const int ow = cur.width - conv->kernel + 1;
            std::vector<double> out(
                static_cast<size_t>(conv->out_channels) * oh * ow);
            for (int o = 0; o < conv->out_channels; ++o)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        double acc = conv->bias[o];
                        for (int i = 0; i < conv->in_channels; ++i)
                            for (int ky = 0; ky < conv->kernel; ++ky)
                                for (int kx = 0; kx < conv->kernel; ++kx)
                                    acc += conv->w(o, i, ky, kx) *
                                           data[(static_cast<size_t>(i) *
                                                     cur.height +
                                                 y + ky) *
                                                    cur.width +
                                                x + kx];
                        out[(static_cast<size_t>(o) * oh + y) * ow + x] =
                            activate(acc, conv->activation);
                    }
            data = std::move(out);
            cur = {conv->out_channels, oh, ow};
        } else if (std::holds_alternative<PoolLayer>(layer)) {
            const int oh = cur.height / 2, ow = cur.width / 2;
            std::vector<double> out(static_cast<size_t>(cur.channels) * oh * ow);
            for (int c = 0; c < cur.channels; ++c)
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x) {
                        double best = -1e308;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const double v =
                                    data[(static_cast<size_t>(c) * cur.height +
                                          2 * y + dy) *
                                             cur.width +
                                         2 * x + dx];
                                if (v > best) best = v;
                            }
                        out[(static_cast<size_t>(c) * oh + y) * ow + x] = best;
                    }
            data = std::move(out);
            cur = {cur.channels, oh, ow};
        } else {
            const auto& fc = std::get<FcLayer>(layer);
            std::vector<double> out(fc.out_size);
            for (int o = 0; o < fc.out_size; ++o) {
                double acc = fc.bias[o];
                const double* row =
                    fc.weights.data() + static_cast<size_t>(o) * fc.in_size;
                for (int i = 0; i < fc.in_size; ++i) acc += row[i] * data[i];
                out[o] = activate(acc, fc.activation);
            }
            data = std::move(out);
            cur = {fc.out_size, 1, 1};
        }
        activations.push_back(data);
    }
    return activations;
}

CnnNet make_default_cnn(int input_width, int input_height, Rng& rng) {
    CnnNet net;
    net.input_width = input_width;
    net.input_height = input_height;
    net.input_channels = 1;

    auto conv = [&](int in_c, int out_c, int k) {
        ConvLayer c;
        c.in_channels = in_c;
        c.out_channels = out_c;
        c.kernel = k;
        c.activation = Activation::relu;
        const double std = std::sqrt(2.0 / (in_c * k * k));
        c.weights.resize(static_cast<size_t>(out_c) * in_c * k * k);
        for (double& w : c.weights) w = rng.normal(0.0, std);
        c.bias.assign(out_c, 0.0);
        return c;
    };
    auto fc = [&](int in, int out, Activation act) {
        FcLayer f;
        f.in_size = in;
        f.out_size = out;
        f.activation = act;
        const double std = std::sqrt(2.0 / in);
        f.weights.resize(static_cast<size_t>(out) * in);
        for (double& w : f.weights) w = rng.normal(0.0, std);
        f.bias.assign(out, 0.0);
        return f;
    };

    net.layers.push_back(conv(1, 6, 5));
    net.layers.push_back(PoolLayer{});
    net.layers.push_back(conv(6, 12, 5));
    net.layers.push_back(PoolLayer{});

    // flat size after the stack above
    CnnNet probe = net;
    const int flat = layer_shapes(probe).back().flat();
    net.layers.push_back(fc(flat, 64, Activation::relu));
    net.layers.push_back(fc(64, 2, Activation::identity));
    return net;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

const char* activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "identity";
}

Activation parse_activation(const std::string& s, const std::string& path) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    fail(ErrorKind::corrupt_data, path + ": unknown activation '" + s + "'");
}

void write_values(std::ostream& out, const std::vector<double>& values) {
    char buf[32];
    for (size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        out << buf << ((i + 1) % 8 == 0 ? "\n" : " ");
    }
    if (values.size() % 8 != 0) out << "\n";
}

void read_values(std::istream& in, std::vector<double>& values,
                 const std::string& path) {
    for (double& v : values)
        if (!(in >> v))
            fail(ErrorKind::corrupt_data, path + ": truncated weight data");
}

} // namespace

void save_cnn(const CnnNet& net, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::unwritable_path, path + ": cannot write");
    out << "cnn " << net.input_channels << " " << net.input_height << " "
        << net.input_width << " " << net.layers.size() << "\n";
    for (const CnnLayer& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            out << "conv " << conv->in_channels << " " << conv->out_channels
                << " " << conv->kernel << " "
                << activation_name(conv->activation) << "\n";
            write_values(out, conv->weights);
            write_values(out, conv->bias);
        } else if (std::holds_alternative<PoolLayer>(layer)) {
            out << "pool\n";
        } else {
            const auto& fc = std::get<FcLayer>(layer);
            out << "fc " << fc.in_size << " " << fc.out_size << " "
                << activation_name(fc.activation) << "\n";
            write_values(out, fc.weights);
            write_values(out, fc.bias);
        }
    }
    require(out.good(), ErrorKind::unwritable_path, path + ": write failed");
}

CnnNet load_cnn(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::missing_file, path + ": cannot open");
    std::string tag;
    CnnNet net;
    size_t count = 0;
    if (!(in >> tag >> net.input_channels >> net.input_height >>
          net.input_width >> count) ||
        tag != "cnn")
        fail(ErrorKind::corrupt_data, path + ": bad network header");
    for (size_t li = 0; li < count; ++li) {
        if (!(in >> tag))
            fail(ErrorKind::corrupt_data, path + ": truncated layer list");
        if (tag == "conv") {
            ConvLayer conv;
            std::string act;
            if (!(in >> conv.in_channels >> conv.out_channels >> conv.kernel >>
                  act))
                fail(ErrorKind::corrupt_data, path + ": bad conv header");
            conv.activation = parse_activation(act, path);
            conv.weights.resize(static_cast<size_t>(conv.out_channels) *
                                conv.in_channels * conv.kernel * conv.kernel);
            conv.bias.resize(conv.out_channels);
            read_values(in, conv.weights, path);
            read_values(in, conv.bias, path);
            net.layers.push_back(std::move(conv));
        } else if (tag == "pool") {
            net.layers.push_back(PoolLayer{});
        } else if (tag == "fc") {
            FcLayer fc;
            std::string act;
            if (!(in >> fc.in_size >> fc.out_size >> act))
                fail(ErrorKind::corrupt_data, path + ": bad fc header");
            fc.activation = parse_activation(act, path);
            fc.weights.resize(static_cast<size_t>(fc.out_size) * fc.in_size);
            fc.bias.resize(fc.out_size);
            read_values(in, fc.weights, path);
            read_values(in, fc.bias, path);
            net.layers.push_back(std::move(fc));
        } else {
            fail(ErrorKind::corrupt_data, path + ": unknown layer '" + tag + "'");
        }
    }
    layer_shapes(net); // validate
    return net;
}

} // namespace synth
