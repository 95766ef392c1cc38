#pragma once

#include "mspgm/tape.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mspgm {

enum class Activation { Tanh, Relu, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Shape of a network: layer_sizes = [d + 1, k_2, ..., k_l]. The input is (t, x).
struct NetArch {
    std::vector<int> layer_sizes;
    Activation activation = Activation::Tanh;

    /// Convenience: (t, x) in R^{1+d} -> R^m through the given hidden widths.
    static NetArch make(int state_dim, std::vector<int> hidden, int output_dim,
                        Activation activation = Activation::Tanh);

    bool operator==(const NetArch&) const = default;
};

/// phi(t, x; theta) = (L_l o S o ... o S o L_1)(t, x) with affine layers L_k(v) = W_k v + b_k
/// and activation S between them.
///
/// theta is stored flat as (W_1, b_1, ..., W_{l-1}, b_{l-1}); each W_k is row-major
/// (fan_out x fan_in). Optional fixed input/output affine maps (not trainable, identity by
/// default) standardize inputs and rescale outputs; the value-function fit uses them.
class FeedForwardNet {
public:
    FeedForwardNet() = default;
    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    FeedForwardNet(NetArch arch, std::uint64_t seed);

    static FeedForwardNet zeros(NetArch arch);
    /// q = (k_1 + 1) k_2 + ... + (k_{l-1} + 1) k_l.
    static std::size_t param_count(std::span<const int> layer_sizes);

    const NetArch& arch() const noexcept { return arch_; }
    const std::vector<int>& layer_sizes() const noexcept { return arch_.layer_sizes; }
    int input_dim() const { return arch_.layer_sizes.front(); }
    int output_dim() const { return arch_.layer_sizes.back(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    void set_params(std::span<const double> values);

    // Inputs are mapped as (v - shift) * scale before the first layer; outputs as
    // y * scale + shift after the last.
    void set_input_transform(std::vector<double> shift, std::vector<double> scale);
    void set_output_transform(std::vector<double> shift, std::vector<double> scale);
    const std::vector<double>& input_shift() const noexcept { return in_shift_; }
    const std::vector<double>& input_scale() const noexcept { return in_scale_; }
    const std::vector<double>& output_shift() const noexcept { return out_shift_; }
    const std::vector<double>& output_scale() const noexcept { return out_scale_; }

    /// Taped forward pass for a batch. Every x[i] is a 1 x B row; returns output_dim rows.
    /// With `trainable == false` the parameter block is frozen (no gradient).
    std::vector<Var> forward(double t, std::span<const Var> x, bool trainable = true) const;
    /// Taped forward pass on an explicit (input_dim x B) input node.
    Var forward(Var inputs, bool trainable = true) const;

    bool operator==(const FeedForwardNet&) const = default;

private:
    void check_transforms() const;

    NetArch arch_;
    std::vector<double> params_;
    std::vector<double> in_shift_;
    std::vector<double> in_scale_;
    std::vector<double> out_shift_;
    std::vector<double> out_scale_;
};

}  // namespace mspgm
