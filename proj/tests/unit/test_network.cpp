#include "mspgm/error.hpp"
#include "mspgm/network.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mspgm;

namespace {

// Plain Eigen re-implementation of the forward pass, reading theta in the documented layout.
Matrix reference_forward(const FeedForwardNet& net, const Matrix& input) {
    const auto& sizes = net.layer_sizes();
    const auto theta = net.params();
    Matrix h = input;
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        const int in = sizes[k], out = sizes[k + 1];
        Matrix W(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) W(r, c) = theta[offset + r * in + c];
        Vector b(out);
        for (int r = 0; r < out; ++r) b(r) = theta[offset + out * in + r];
        offset += static_cast<std::size_t>((in + 1) * out);
        Matrix z = W * h;
        z.colwise() += b;
        h = k + 2 < sizes.size() ? Matrix(z.array().tanh()) : z;
    }
    return h;
}

Matrix eval(const FeedForwardNet& net, const Matrix& input) {
    Tape t;
    return net.forward(t.constant(input)).value();
}

double loss(const FeedForwardNet& net, const Matrix& input) {
    Tape t;
    return sum(square(net.forward(t.constant(input)))).value()(0, 0);
}

}  // namespace

TEST(Network, ParamCount) {
    const std::vector<int> sizes{2, 50, 50, 1};
    EXPECT_EQ(FeedForwardNet::param_count(sizes), 3u * 50 + 51u * 50 + 51u);
    const std::vector<int> tiny{3, 1};
    EXPECT_EQ(FeedForwardNet::param_count(tiny), 4u);
    EXPECT_THROW(FeedForwardNet::param_count(std::vector<int>{2}), InvalidArgument);
    EXPECT_THROW(FeedForwardNet::param_count(std::vector<int>{2, 0, 1}), InvalidArgument);
}

TEST(Network, ZeroParametersGiveZeroOutput) {
    const FeedForwardNet net = FeedForwardNet::zeros(NetArch::make(1, {8, 8}, 1));
    Matrix in(2, 3);
    in << 0.0, 0.5, 1.0, -3.0, 2.0, 7.0;
    EXPECT_EQ(eval(net, in), Matrix::Zero(1, 3));
}

TEST(Network, SingleAffineLayer) {
    FeedForwardNet net = FeedForwardNet::zeros(NetArch{{2, 1}, Activation::Tanh});
    const std::vector<double> theta{1.0, 1.0, 0.0};
    net.set_params(theta);
    Matrix in(2, 1);
    in << 2.0, 3.0;
    EXPECT_EQ(eval(net, in)(0, 0), 5.0);
}

TEST(Network, MatchesIndependentForwardPass) {
    const FeedForwardNet net(NetArch::make(1, {50, 50}, 1), 42);
    Matrix in(2, 4);
    in << 0.5, 0.0, 0.25, 1.0, 1.0, -2.0, 3.5, -0.1;
    const Matrix got = eval(net, in);
    const Matrix want = reference_forward(net, in);
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(got(0, j), want(0, j), 1e-12 * (1 + std::abs(want(0, j))));
}

TEST(Network, InitializationIsSeededAndBounded) {
    const NetArch arch = NetArch::make(1, {8, 8}, 1);
    EXPECT_EQ(FeedForwardNet(arch, 3), FeedForwardNet(arch, 3));
    EXPECT_NE(FeedForwardNet(arch, 3), FeedForwardNet(arch, 4));
    const FeedForwardNet net(arch, 3);
    const double bound = std::sqrt(6.0 / (2 + 8));
    for (int i = 0; i < 16; ++i) EXPECT_LE(std::abs(net.params()[i]), bound);
    for (int i = 16; i < 24; ++i) EXPECT_EQ(net.params()[i], 0.0);
}

TEST(Network, DimensionMismatchRejected) {
    const FeedForwardNet net(NetArch::make(2, {4}, 1), 1);
    Tape t;
    EXPECT_THROW(net.forward(t.constant(Matrix::Zero(2, 3))), InvalidArgument);
    const Var x = t.constant(0.0, 3);
    EXPECT_THROW(net.forward(0.0, std::span(&x, 1)), InvalidArgument);
    FeedForwardNet copy = net;
    EXPECT_THROW(copy.set_params(std::vector<double>(3, 0.0)), InvalidArgument);
    EXPECT_THROW(copy.set_input_transform({0.0}, {1.0}), InvalidArgument);
}

TEST(Network, TransformsAreAffineMaps) {
    FeedForwardNet net(NetArch::make(1, {6}, 1), 9);
    Matrix in(2, 3);
    in << 0.1, 0.4, 0.9, -1.0, 0.0, 2.0;
    FeedForwardNet scaled = net;
    scaled.set_input_transform({0.5, 1.0}, {2.0, 0.25});
    scaled.set_output_transform({3.0}, {10.0});
    Matrix mapped(2, 3);
    for (int j = 0; j < 3; ++j) {
        mapped(0, j) = (in(0, j) - 0.5) * 2.0;
        mapped(1, j) = (in(1, j) - 1.0) * 0.25;
    }
    const Matrix base = eval(net, mapped);
    const Matrix got = eval(scaled, in);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(got(0, j), base(0, j) * 10.0 + 3.0, 1e-12);
}

TEST(Network, ActivationNames) {
    for (Activation a : {Activation::Tanh, Activation::Relu, Activation::Sigmoid}) {
        EXPECT_EQ(activation_from_string(to_string(a)), a);
    }
    EXPECT_THROW(activation_from_string("gelu"), InvalidArgument);
}

// Reverse-mode gradient against central differences for 20 random initializations.
TEST(NetworkProperty, GradientMatchesFiniteDifferences) {
    Matrix in(2, 3);
    in << 0.0, 0.3, 0.7, -1.2, 0.4, 2.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        FeedForwardNet net(NetArch::make(1, {8, 8}, 1), seed);
        Tape t;
        const Var out = sum(square(net.forward(t.constant(in))));
        const Matrix ad = backward(t, out).wrt(t.parameters(net.params()));
        std::vector<double> theta(net.params().begin(), net.params().end());
        double err = 0.0, scale = 0.0;
        const double h = 1e-6;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            FeedForwardNet plus = net, minus = net;
            auto tp = theta, tm = theta;
            tp[i] += h;
            tm[i] -= h;
            plus.set_params(tp);
            minus.set_params(tm);
            const double fd = (loss(plus, in) - loss(minus, in)) / (2 * h);
            err = std::max(err, std::abs(ad(static_cast<Eigen::Index>(i), 0) - fd));
            scale = std::max(scale, std::abs(fd));
        }
        EXPECT_LT(err / scale, 1e-6) << "seed " << seed;
    }
}
