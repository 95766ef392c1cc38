#include "mspgm/error.hpp"
#include "mspgm/problem.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mspgm;

namespace {

double eval_scalar(const Var& v) { return v.value()(0, 0); }

}  // namespace

TEST(TimeGrid, UnitHorizonTenSteps) {
    const TimeGrid g = make_grid(1.0, 10);
    EXPECT_EQ(g.n, 10);
    EXPECT_DOUBLE_EQ(g.delta, 0.1);
    ASSERT_EQ(g.nodes.size(), 11u);
    for (int i = 0; i <= 10; ++i) EXPECT_NEAR(g.nodes[i], i / 10.0, 1e-15);
    EXPECT_EQ(g.nodes.front(), 0.0);
    EXPECT_EQ(g.nodes.back(), 1.0);
}

TEST(TimeGrid, ThreeFoldHorizon) {
    const TimeGrid g = make_grid(1.25, 125);
    EXPECT_DOUBLE_EQ(g.delta, 0.01);
    EXPECT_EQ(g.nodes.back(), 1.25);
}

TEST(TimeGrid, SingleStep) {
    const TimeGrid g = make_grid(1.0, 1);
    ASSERT_EQ(g.nodes.size(), 2u);
    EXPECT_EQ(g.nodes[0], 0.0);
    EXPECT_EQ(g.nodes[1], 1.0);
}

TEST(TimeGrid, RejectsBadArguments) {
    EXPECT_THROW(make_grid(1.0, 0), InvalidArgument);
    EXPECT_THROW(make_grid(0.0, 10), InvalidArgument);
    EXPECT_THROW(make_grid(-1.0, 10), InvalidArgument);
}

// Property: consecutive spacings agree with delta to within 2 ulps of the node magnitude.
TEST(TimeGrid, SpacingWithinTwoUlps) {
    for (double T : {0.5, 1.0, 1.25, 3.7, 10.0}) {
        for (int n : {1, 3, 10, 100, 125, 1000}) {
            const TimeGrid g = make_grid(T, n);
            for (int i = 0; i < n; ++i) {
                const double ulp = std::nextafter(g.nodes[i + 1], 2 * T) - g.nodes[i + 1];
                EXPECT_LE(std::abs((g.nodes[i + 1] - g.nodes[i]) - g.delta), 2 * ulp) << T << ' ' << n << ' ' << i;
            }
        }
    }
}

TEST(TimeGrid, SliceSharesNodes) {
    const TimeGrid g = make_grid(1.0, 100);
    const TimeGrid s = g.slice(30, 10);
    EXPECT_EQ(s.n, 10);
    EXPECT_EQ(s.delta, g.delta);
    for (int i = 0; i <= 10; ++i) EXPECT_EQ(s.nodes[i], g.nodes[30 + i]);
    EXPECT_THROW(g.slice(95, 10), InvalidArgument);
    EXPECT_THROW(g.slice(-1, 2), InvalidArgument);
}

// A refined grid contains the coarse nodes bit for bit (horizons used by the presets).
TEST(TimeGrid, RefinementContainsCoarseNodes) {
    for (double T : {1.0, 1.25}) {
        for (int N : {5, 10}) {
            const TimeGrid coarse = make_grid(T, N);
            const TimeGrid fine = make_grid(T, N * N);
            for (int i = 0; i <= N; ++i) EXPECT_EQ(fine.nodes[i * N], coarse.nodes[i]);
        }
    }
}

TEST(LqProblem, DriftExample) {
    LqParams p;
    p.p = 1.0;
    p.q = 2.0;
    const ControlProblem prob = make_lq_problem(p);
    Tape tape;
    const Var x = tape.constant(2.0, 1);
    const Var u = tape.constant(3.0, 1);
    EXPECT_EQ(eval_scalar(prob.drift(0.5, std::span(&x, 1), std::span(&u, 1))[0]), 8.0);
}

TEST(LqProblem, ZeroCoefficientsReduceToControlledBrownianMotion) {
    LqParams p;
    p.q = 1.0;
    p.A = 1.0;
    const ControlProblem prob = make_lq_problem(p);
    Tape tape;
    const Var x = tape.constant(4.0, 1);
    const Var u = tape.constant(-1.5, 1);
    EXPECT_EQ(eval_scalar(prob.drift(0.0, std::span(&x, 1), std::span(&u, 1))[0]), -1.5);
    EXPECT_EQ(eval_scalar(prob.running_cost(0.0, std::span(&x, 1), std::span(&u, 1))), 2.25);
    EXPECT_EQ(eval_scalar(prob.terminal_cost(std::span(&x, 1))), 0.0);
}

TEST(LqProblem, RejectsNonPositiveControlWeight) {
    LqParams p;
    p.A = 0.0;
    EXPECT_THROW(make_lq_problem(p), InvalidArgument);
    p.A = -1.0;
    EXPECT_THROW(make_lq_problem(p), InvalidArgument);
}

TEST(LqProblem, Presets) {
    EXPECT_EQ(lq_preset("two_fold").horizon, 1.0);
    EXPECT_EQ(lq_preset("three_fold").horizon, 1.25);
    EXPECT_EQ(lq_preset("three_fold").a, 100.0);
    EXPECT_THROW(lq_preset("nope"), InvalidArgument);
}

// Property: the running cost equals the polynomial evaluated in the same order.
TEST(LqProblem, RunningCostIsThePolynomial) {
    const LqParams p = lq_preset("two_fold");
    const ControlProblem prob = make_lq_problem(p);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (int k = 0; k < 5; ++k) {
        const double xv = U(rng), uv = U(rng);
        Tape tape;
        const Var x = tape.constant(xv, 1);
        const Var u = tape.constant(uv, 1);
        const double got = eval_scalar(prob.running_cost(0.3, std::span(&x, 1), std::span(&u, 1)));
        const double want = p.a * (xv * xv) + p.b * xv + p.A * (uv * uv) + p.B * uv;
        EXPECT_EQ(got, want);
        const double g = eval_scalar(prob.terminal_cost(std::span(&x, 1)));
        EXPECT_EQ(g, p.alpha * (xv * xv) + p.beta * xv);
    }
}

TEST(ControlProblemValidation, CatchesNonFiniteCallable) {
    ControlProblem prob = make_lq_problem(LqParams{});
    prob.running_cost = [](double, std::span<const Var> x, std::span<const Var>) {
        return x[0] * std::numeric_limits<double>::quiet_NaN();
    };
    EXPECT_THROW(prob.validate(), InvalidArgument);
}

TEST(ControlProblemValidation, CatchesWrongDimension) {
    ControlProblem prob = make_lq_problem(LqParams{});
    prob.drift = [](double, std::span<const Var> x, std::span<const Var> u) { return std::vector<Var>{x[0], u[0]}; };
    EXPECT_THROW(prob.validate(), InvalidArgument);
}

TEST(Distribution, Uniform) {
    EXPECT_THROW(Distribution::uniform({1.0}, {1.0}), InvalidArgument);
    EXPECT_THROW(Distribution::uniform({0.0}, {1.0, 2.0}), InvalidArgument);
    const Distribution d = Distribution::uniform({-2.0}, {3.0});
    const Matrix s = d.sample(5000, 9);
    EXPECT_GE(s.minCoeff(), -2.0);
    EXPECT_LT(s.maxCoeff(), 3.0);
    EXPECT_NEAR(s.mean(), 0.5, 5.0 / std::sqrt(12.0 * 5000) * 4);
}

TEST(Distribution, PointMass) {
    const Distribution d = Distribution::point({1.5, -2.0});
    const Matrix s = d.sample(4, 1);
    ASSERT_EQ(s.rows(), 2);
    for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(s(0, j), 1.5);
        EXPECT_EQ(s(1, j), -2.0);
    }
}

TEST(Distribution, EmpiricalDrawsAreMembers) {
    EXPECT_THROW(Distribution::empirical(Matrix(1, 0)), InvalidArgument);
    Matrix pool(1, 7);
    pool << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7;
    const Distribution d = Distribution::empirical(pool);
    const Matrix s = d.sample(200, 3);
    for (int j = 0; j < s.cols(); ++j) {
        bool found = false;
        for (int k = 0; k < pool.cols(); ++k) found = found || s(0, j) == pool(0, k);
        EXPECT_TRUE(found);
    }
}

// Draw j comes from its own stream: a sub-range reproduces the slice of a larger request.
TEST(Distribution, DrawsIndependentOfRequestSize) {
    const Distribution d = Distribution::uniform({-1.0}, {1.0});
    const Matrix all = d.sample(10, 42);
    const Matrix tail = d.sample(7, 42, 3);
    for (int j = 0; j < 7; ++j) EXPECT_EQ(tail(0, j), all(0, j + 3));
    EXPECT_EQ(d.sample(10, 42), all);
}
