#include "mspgm/network.hpp"

#include "mspgm/error.hpp"
#include "mspgm/random.hpp"

#include <cmath>
#include <random>

namespace mspgm {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "tanh";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw InvalidArgument("unknown activation '" + name + "'");
}

NetArch NetArch::make(int state_dim, std::vector<int> hidden, int output_dim, Activation activation) {
    NetArch arch;
    arch.layer_sizes.push_back(state_dim + 1);
    for (int h : hidden) arch.layer_sizes.push_back(h);
    arch.layer_sizes.push_back(output_dim);
    arch.activation = activation;
    return arch;
}

std::size_t FeedForwardNet::param_count(std::span<const int> layer_sizes) {
    if (layer_sizes.size() < 2) throw InvalidArgument("network needs at least two layer sizes");
    std::size_t q = 0;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        if (layer_sizes[k] < 1 || layer_sizes[k + 1] < 1) throw InvalidArgument("layer sizes must be >= 1");
        q += static_cast<std::size_t>(layer_sizes[k] + 1) * static_cast<std::size_t>(layer_sizes[k + 1]);
    }
    return q;
}

FeedForwardNet FeedForwardNet::zeros(NetArch arch) {
    FeedForwardNet net;
    net.params_.assign(param_count(arch.layer_sizes), 0.0);
    net.arch_ = std::move(arch);
    return net;
}

FeedForwardNet::FeedForwardNet(NetArch arch, std::uint64_t seed) : FeedForwardNet(zeros(std::move(arch))) {
    std::mt19937_64 rng(mix_seed(seed));
    const auto& sizes = arch_.layer_sizes;
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        const int fan_in = sizes[k];
        const int fan_out = sizes[k + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (int i = 0; i < fan_in * fan_out; ++i) params_[offset + i] = u(rng);
        offset += static_cast<std::size_t>((fan_in + 1) * fan_out);
    }
}

void FeedForwardNet::set_params(std::span<const double> values) {
    if (values.size() != params_.size()) throw InvalidArgument("set_params: wrong parameter count");
    params_.assign(values.begin(), values.end());
}

void FeedForwardNet::set_input_transform(std::vector<double> shift, std::vector<double> scale) {
    in_shift_ = std::move(shift);
    in_scale_ = std::move(scale);
    check_transforms();
}

void FeedForwardNet::set_output_transform(std::vector<double> shift, std::vector<double> scale) {
    out_shift_ = std::move(shift);
    out_scale_ = std::move(scale);
    check_transforms();
}

void FeedForwardNet::check_transforms() const {
    const auto in = static_cast<std::size_t>(input_dim());
    const auto out = static_cast<std::size_t>(output_dim());
    if (!(in_shift_.empty() || (in_shift_.size() == in && in_scale_.size() == in))) {
        throw InvalidArgument("input transform must have one entry per input");
    }
    if (!(out_shift_.empty() || (out_shift_.size() == out && out_scale_.size() == out))) {
        throw InvalidArgument("output transform must have one entry per output");
    }
}

Var FeedForwardNet::forward(Var inputs, bool trainable) const {
    if (!inputs.valid()) throw InvalidArgument("forward: unbound input");
    if (inputs.rows() != input_dim()) {
        throw InvalidArgument("forward: expected " + std::to_string(input_dim()) + " input rows, got " +
                              std::to_string(inputs.rows()));
    }
    Tape& tape = *inputs.tape();
    const Eigen::Index cols = inputs.cols();

    Var h = inputs;
    if (!in_shift_.empty()) {
        Matrix shift(input_dim(), cols);
        Matrix scale(input_dim(), cols);
        for (int i = 0; i < input_dim(); ++i) {
            shift.row(i).setConstant(in_shift_[i]);
            scale.row(i).setConstant(in_scale_[i]);
        }
        h = (h - tape.constant(std::move(shift))) * tape.constant(std::move(scale));
    }

    const Var theta = tape.parameters(params_, trainable);
    const auto& sizes = arch_.layer_sizes;
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        h = tape.affine(h, theta, offset, sizes[k + 1]);
        offset += static_cast<std::size_t>((sizes[k] + 1) * sizes[k + 1]);
        if (k + 2 < sizes.size()) {
            switch (arch_.activation) {
                case Activation::Tanh: h = tanh(h); break;
                case Activation::Relu: h = relu(h); break;
                case Activation::Sigmoid: h = sigmoid(h); break;
            }
        }
    }

    if (!out_shift_.empty()) {
        Matrix shift(output_dim(), cols);
        Matrix scale(output_dim(), cols);
        for (int i = 0; i < output_dim(); ++i) {
            shift.row(i).setConstant(out_shift_[i]);
            scale.row(i).setConstant(out_scale_[i]);
        }
        h = h * tape.constant(std::move(scale)) + tape.constant(std::move(shift));
    }
    return h;
}

std::vector<Var> FeedForwardNet::forward(double t, std::span<const Var> x, bool trainable) const {
    if (x.empty()) throw InvalidArgument("forward: empty state");
    if (static_cast<int>(x.size()) + 1 != input_dim()) {
        throw InvalidArgument("forward: state has " + std::to_string(x.size()) + " components, network expects " +
                              std::to_string(input_dim() - 1));
    }
    Tape& tape = *x[0].tape();
    std::vector<Var> rows;
    rows.reserve(x.size() + 1);
    rows.push_back(tape.constant(t, x[0].cols()));
    rows.insert(rows.end(), x.begin(), x.end());
    const Var out = forward(concat_rows(rows), trainable);
    std::vector<Var> result;
    for (int i = 0; i < output_dim(); ++i) result.push_back(row(out, i));
    return result;
}

}  // namespace mspgm
