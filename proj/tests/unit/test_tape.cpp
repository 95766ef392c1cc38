#include "mspgm/error.hpp"
#include "mspgm/tape.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

using namespace mspgm;

namespace {

using Unary = std::function<Var(Var)>;

// Central finite difference of sum(f(x)) with respect to every entry of x.
Matrix fd_gradient(const Unary& f, const Matrix& x, double h = 1e-5) {
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Matrix xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        Tape tp, tm;
        const double fp = sum(f(tp.constant(xp))).value()(0, 0);
        const double fm = sum(f(tm.constant(xm))).value()(0, 0);
        g(i) = (fp - fm) / (2 * h);
    }
    return g;
}

Matrix ad_gradient(const Unary& f, const Matrix& x) {
    Tape t;
    const Var v = t.variable(x);
    const Var out = sum(f(v));
    return backward(t, out).wrt(v);
}

void expect_fd_match(const Unary& f, const Matrix& x, const char* name) {
    const Matrix ad = ad_gradient(f, x);
    const Matrix fd = fd_gradient(f, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        EXPECT_LT(std::abs(ad(i) - fd(i)) / (std::abs(fd(i)) + 1e-12), 1e-5) << name << " entry " << i;
    }
}

Matrix random_row(std::mt19937_64& rng, double lo, double hi, int cols = 6) {
    std::uniform_real_distribution<double> U(lo, hi);
    Matrix m(1, cols);
    for (int j = 0; j < cols; ++j) m(0, j) = U(rng);
    return m;
}

}  // namespace

TEST(Tape, SquareDerivativeExample) {
    Tape t;
    const Var th = t.variable(Matrix::Constant(1, 1, 3.0));
    const Var y = square(th);
    EXPECT_EQ(y.value()(0, 0), 9.0);
    EXPECT_EQ(backward(t, y).wrt(th)(0, 0), 6.0);
}

TEST(Tape, EmptyTapeHasNoOps) {
    Tape t;
    EXPECT_EQ(op_count(t), 0u);
    EXPECT_EQ(t.size(), 0u);
}

TEST(Tape, BackwardRequiresScalarOutput) {
    Tape t;
    const Var x = t.variable(Matrix::Ones(1, 3));
    EXPECT_THROW(backward(t, x * 2.0), InvalidArgument);
    Tape other;
    const Var y = sum(other.variable(Matrix::Ones(1, 1)));
    EXPECT_THROW(backward(t, y), InvalidArgument);
    EXPECT_THROW(backward(t, Var{}), InvalidArgument);
}

TEST(Tape, ShapeMismatchRejected) {
    Tape t;
    const Var a = t.variable(Matrix::Ones(1, 3));
    const Var b = t.variable(Matrix::Ones(1, 4));
    EXPECT_THROW(a + b, InvalidArgument);
    Tape other;
    const Var c = other.variable(Matrix::Ones(1, 3));
    EXPECT_THROW(a * c, InvalidArgument);
}

TEST(Tape, UnreachableLeafGetsZeroGradient) {
    Tape t;
    const Var a = t.variable(Matrix::Constant(1, 2, 2.0));
    const Var b = t.variable(Matrix::Constant(1, 2, 5.0));
    const Var out = sum(square(a));
    const Matrix gb = backward(t, out).wrt(b);
    ASSERT_EQ(gb.rows(), 1);
    ASSERT_EQ(gb.cols(), 2);
    EXPECT_EQ(gb.squaredNorm(), 0.0);
}

TEST(Tape, ScalarBroadcastOperands) {
    Tape t;
    const Var s = t.variable(Matrix::Constant(1, 1, 2.0));
    const Var x = t.variable((Matrix(1, 3) << 1.0, 2.0, 3.0).finished());
    const Var out = sum(s * x);
    EXPECT_EQ(out.value()(0, 0), 12.0);
    const Gradients g = backward(t, out);
    EXPECT_EQ(g.wrt(s)(0, 0), 6.0);
    EXPECT_EQ(g.wrt(x), Matrix::Constant(1, 3, 2.0));
}

TEST(Tape, FrozenParametersReceiveNoGradient) {
    std::vector<double> p{1.0, 2.0, 3.0};
    Tape t;
    const Var w = t.parameters(p, false);
    const Var x = t.variable(Matrix::Ones(2, 1));
    const Var y = t.affine(x, w, 0, 1);
    EXPECT_EQ(y.value()(0, 0), 6.0);
    const Gradients g = backward(t, sum(y));
    EXPECT_EQ(g.wrt(w).squaredNorm(), 0.0);
    EXPECT_EQ(g.wrt(x), (Matrix(2, 1) << 1.0, 2.0).finished());
}

TEST(Tape, ParameterBlocksDeduplicatedByStorage) {
    std::vector<double> p{1.0, 2.0, 3.0};
    Tape t;
    const Var a = t.parameters(p);
    const Var b = t.parameters(p);
    EXPECT_EQ(a.index(), b.index());
}

TEST(Tape, AffineMatchesMatrixProduct) {
    // W = [[1, 2], [3, 4], [5, 6]], b = [7, 8, 9].
    std::vector<double> p{1, 2, 3, 4, 5, 6, 7, 8, 9};
    Tape t;
    const Var w = t.parameters(p);
    Matrix xin(2, 2);
    xin << 1.0, -1.0, 0.5, 2.0;
    const Var x = t.variable(xin);
    const Var y = t.affine(x, w, 0, 3);
    Matrix W(3, 2);
    W << 1, 2, 3, 4, 5, 6;
    Matrix want = W * xin;
    want.colwise() += (Vector(3) << 7, 8, 9).finished();
    EXPECT_EQ(y.value(), want);
    const Gradients g = backward(t, sum(y));
    // d sum(Wx + b) / dx = W^T 1; d / dW_rc = sum_j x_cj; d / db = J.
    EXPECT_EQ(g.wrt(x), W.transpose() * Matrix::Ones(3, 2));
    const Matrix gp = g.wrt(w);
    EXPECT_EQ(gp(0, 0), 0.0);
    EXPECT_EQ(gp(1, 0), 2.5);
    EXPECT_EQ(gp(6, 0), 2.0);
}

TEST(Tape, ConcatAndRow) {
    Tape t;
    const Var a = t.variable(Matrix::Constant(1, 3, 1.0));
    const Var b = t.variable(Matrix::Constant(1, 3, 2.0));
    const std::vector<Var> parts{a, b};
    const Var c = concat_rows(parts);
    EXPECT_EQ(c.rows(), 2);
    const Var r = row(c, 1);
    EXPECT_EQ(r.value(), Matrix::Constant(1, 3, 2.0));
    const Gradients g = backward(t, sum(square(r)));
    EXPECT_EQ(g.wrt(a).squaredNorm(), 0.0);
    EXPECT_EQ(g.wrt(b), Matrix::Constant(1, 3, 4.0));
    EXPECT_THROW(row(c, 2), InvalidArgument);
}

// Every primitive against central differences on random inputs.
TEST(TapeProperty, PrimitivesMatchFiniteDifferences) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = random_row(rng, -2.0, 2.0);
        const Matrix pos = random_row(rng, 0.3, 3.0);
        const Matrix other = random_row(rng, 0.5, 2.0);
        expect_fd_match([](Var v) { return square(v); }, x, "square");
        expect_fd_match([](Var v) { return tanh(v); }, x, "tanh");
        expect_fd_match([](Var v) { return sigmoid(v); }, x, "sigmoid");
        expect_fd_match([](Var v) { return exp(v); }, x, "exp");
        expect_fd_match([](Var v) { return log(v); }, pos, "log");
        expect_fd_match([](Var v) { return -v; }, x, "neg");
        expect_fd_match([](Var v) { return 3.0 - v * 2.5 + 1.0; }, x, "scalar ops");
        expect_fd_match([](Var v) { return (v + 0.5) / 2.0; }, pos, "scalar div");
        expect_fd_match([other](Var v) { return v * v.tape()->constant(other); }, x, "mul");
        expect_fd_match([other](Var v) { return v.tape()->constant(other) / v; }, pos, "div lhs const");
        expect_fd_match([other](Var v) { return v / v.tape()->constant(other); }, x, "div rhs const");
        expect_fd_match([other](Var v) { return v - v.tape()->constant(other) + v; }, x, "add sub");
        expect_fd_match([](Var v) { return tanh(square(v) * 0.5) * exp(-v); }, x, "composite");
    }
}

TEST(TapeProperty, ReluAwayFromKink) {
    std::mt19937_64 rng(7);
    Matrix x = random_row(rng, 0.2, 2.0);
    x(0, 0) = -1.0;
    x(0, 1) = -0.4;
    expect_fd_match([](Var v) { return relu(v) * 3.0; }, x, "relu");
}

// Op counts scale exactly with the number of columns for a fixed graph.
TEST(TapeProperty, OpCountProportionalToBatch) {
    std::vector<double> p(2 * 3 + 3, 0.1);
    auto record = [&](int cols) {
        Tape t;
        const Var w = t.parameters(p);
        const Var x = t.variable(Matrix::Ones(2, cols));
        const Var y = tanh(t.affine(x, w, 0, 3));
        sum(square(y) * 2.0);
        return op_count(t);
    };
    const auto one = record(1);
    EXPECT_GT(one, 0u);
    for (int cols : {2, 7, 64}) EXPECT_EQ(record(cols), one * static_cast<std::uint64_t>(cols));
}

TEST(TapeProperty, Deterministic) {
    auto run = [] {
        Tape t;
        const Var x = t.variable((Matrix(1, 4) << 0.1, -0.7, 1.3, 2.2).finished());
        const Var out = sum(tanh(square(x) - x * 0.3) / (exp(x) + 1.0));
        return std::pair{out.value()(0, 0), backward(t, out).wrt(x)};
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}
