#include "mspgm/error.hpp"
#include "mspgm/lq_oracle.hpp"
#include "mspgm/train.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mspgm;

// f' = 1 + f^2 with f(1) = 0 (a = -1, p = 0, q^2 / A = 1) has f(t) = -tan(1 - t).
TEST(Riccati, TangentSolution) {
    LqParams p;
    p.a = -1.0;
    p.A = 1.0;
    p.q = 1.0;
    const LqSolution sol = solve_riccati(p, 1000);
    EXPECT_NEAR(sol.at(0.0).f, -std::tan(1.0), 1e-6);
    EXPECT_NEAR(sol.at(0.0).f, -1.5574077, 1e-6);
    for (double t : {0.13, 0.5, 0.77}) EXPECT_NEAR(sol.at(t).f, -std::tan(1.0 - t), 1e-6) << t;
}

// a = p = alpha = 0: f = 0, h linear, k a cubic in closed form.
TEST(Riccati, DecoupledClosedForm) {
    LqParams p;
    p.b = 2.0;
    p.beta = 0.5;
    p.B = 0.3;
    p.q = 1.5;
    p.A = 2.0;
    p.sigma = 0.7;
    const LqSolution sol = solve_riccati(p, 1000);
    auto w = [&](double s) { return p.B + p.q * p.beta + p.q * p.b * (1.0 - s); };
    for (double t : {0.0, 0.25, 0.6, 1.0}) {
        const RiccatiPoint c = sol.at(t);
        EXPECT_NEAR(c.f, 0.0, 1e-14);
        EXPECT_NEAR(c.h, p.beta + p.b * (1.0 - t), 1e-12);
        const double k = -(std::pow(w(t), 3) - std::pow(w(1.0), 3)) / (12.0 * p.A * p.q * p.b);
        EXPECT_NEAR(c.k, k, 1e-10) << t;
    }
}

TEST(Riccati, PresetsSatisfyTheOde) {
    for (const auto& name : lq_preset_names()) {
        const LqParams p = lq_preset(name);
        const LqSolution sol = solve_riccati(p, 1000);
        const RiccatiPoint r = riccati_residual(sol);
        EXPECT_LT(r.f, 1e-6) << name;
        EXPECT_LT(r.h, 1e-6) << name;
        EXPECT_LT(r.k, 1e-6) << name;
        const RiccatiPoint end = sol.at(p.horizon);
        EXPECT_EQ(end.f, p.alpha);
        EXPECT_EQ(end.h, p.beta);
        EXPECT_EQ(end.k, 0.0);
    }
}

TEST(Riccati, MeshRefinementConverges) {
    for (const auto& name : lq_preset_names()) {
        const LqParams p = lq_preset(name);
        const RiccatiPoint a = solve_riccati(p, 1000).at(0.0);
        const RiccatiPoint b = solve_riccati(p, 10000).at(0.0);
        EXPECT_LT(std::abs(a.f - b.f), 1e-8) << name;
        EXPECT_LT(std::abs(a.h - b.h), 1e-8) << name;
        EXPECT_LT(std::abs(a.k - b.k), 1e-8) << name;
    }
}

// Frozen from an independent adaptive high-order integration (rtol 1e-13).
TEST(Riccati, GoldenValues) {
    const LqSolution two = solve_riccati(lq_preset("two_fold"), 10000);
    EXPECT_NEAR(lq_value(two, 0.0, 0.5), 8.913275435076, 1e-8);
    EXPECT_NEAR(two.at(0.0).f, 9.192456240942098, 1e-8);
    EXPECT_NEAR(two.at(0.0).h, 0.41363858773980644, 1e-8);
    EXPECT_NEAR(two.at(0.0).k, 6.4083420809707, 1e-8);
    EXPECT_NEAR(two.at(0.5).f, 6.952135071334146, 1e-8);
    EXPECT_NEAR(two.at(0.5).k, 2.293983731743465, 1e-8);
    const LqSolution three = solve_riccati(lq_preset("three_fold"), 10000);
    EXPECT_NEAR(three.at(0.0).f, 24.99938807409052, 1e-8);
    EXPECT_NEAR(three.at(0.0).h, -0.32593358339723455, 1e-8);
    EXPECT_NEAR(three.at(0.0).k, 27.65540953074623, 1e-8);
}

TEST(Riccati, ValueAtHorizonIsTerminalCost) {
    const LqParams p = lq_preset("two_fold");
    const LqSolution sol = solve_riccati(p, 1000);
    for (double x : {-3.0, 0.0, 1.5}) EXPECT_EQ(lq_value(sol, 1.0, x), p.alpha * x * x + p.beta * x);
    for (double t : {0.0, 0.4}) EXPECT_EQ(lq_value(sol, t, 0.0), sol.at(t).k);
}

TEST(Riccati, BlowUpReportsTime) {
    // f' = f^2 with f(1) = -10 escapes at t = 0.9.
    LqParams p;
    p.alpha = -10.0;
    p.A = 1.0;
    p.q = 1.0;
    try {
        solve_riccati(p, 10000);
        FAIL() << "expected RiccatiBlowUp";
    } catch (const RiccatiBlowUp& e) {
        EXPECT_GT(e.time(), 0.89);
        EXPECT_LT(e.time(), 0.91);
    }
}

TEST(Riccati, Errors) {
    const LqSolution sol = solve_riccati(lq_preset("two_fold"), 1000);
    EXPECT_THROW(sol.at(-0.1), InvalidArgument);
    EXPECT_THROW(sol.at(1.1), InvalidArgument);
    EXPECT_THROW(solve_riccati(lq_preset("two_fold"), 10), InvalidArgument);
}

TEST(OptimalControl, FormulaExample) {
    LqParams p;
    p.A = 1.0;
    p.B = 1.0;
    p.q = 1.0;
    const LqSolution sol(p, {0.0, 1.0}, {{1.0, 2.0, 0.0}, {1.0, 2.0, 0.0}});
    EXPECT_EQ(lq_optimal_control(sol, 0.0, 3.0), -4.5);
}

TEST(OptimalControl, PolicyMatchesFormula) {
    const LqSolution sol = solve_riccati(lq_preset("two_fold"), 1000);
    const LqPolicy pol(sol);
    Tape t;
    const Var x = t.constant((Matrix(1, 3) << -1.0, 0.2, 4.0).finished());
    const Matrix u = pol.act(0.35, std::span(&x, 1))[0].value();
    EXPECT_NEAR(u(0, 0), lq_optimal_control(sol, 0.35, -1.0), 1e-14);
    EXPECT_NEAR(u(0, 1), lq_optimal_control(sol, 0.35, 0.2), 1e-14);
    EXPECT_NEAR(u(0, 2), lq_optimal_control(sol, 0.35, 4.0), 1e-14);
}

// The moment recursion is the exact mean of the simulated scheme.
TEST(DiscreteCost, MatchesMonteCarlo) {
    const LqParams p = lq_preset("two_fold");
    const ControlProblem prob = make_lq_problem(p);
    const LqSolution sol = solve_riccati(p, 1000);
    const LqPolicy pol(sol);
    for (double x0 : {-1.0, 0.5}) {
        const Evaluation e = evaluate_policy(prob, make_grid(1.0, 10), pol, std::span(&x0, 1), 50000, 5);
        EXPECT_LT(std::abs(e.mean - lq_discrete_cost(sol, 10, x0)), 3 * e.std_error) << x0;
    }
}

TEST(DiscreteCost, ConvergesToValue) {
    const LqSolution sol = solve_riccati(lq_preset("two_fold"), 1000);
    for (double x0 : {-1.0, 0.0, 1.0}) {
        const double v = lq_value(sol, 0.0, x0);
        const double e100 = std::abs(lq_discrete_cost(sol, 100, x0) - v);
        const double e1000 = std::abs(lq_discrete_cost(sol, 1000, x0) - v);
        EXPECT_LT(e1000, e100 / 5) << x0;
        EXPECT_LT(e1000, 0.01) << x0;
    }
    EXPECT_THROW(lq_discrete_cost(sol, 0, 0.0), InvalidArgument);
}
