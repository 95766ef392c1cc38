#include "mspgm/dp_oracle.hpp"
#include "mspgm/error.hpp"
#include "mspgm/lq_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mspgm;

namespace {

// Exact optimum of the Euler-discretized LQ problem with controls chosen at the nodes:
// V_i(x) = F_i x^2 + H_i x + K_i by backward recursion (independent of any lattice).
struct DiscreteRiccati {
    std::vector<double> F, H, K;
    double value(int i, double x) const { return F[i] * x * x + H[i] * x + K[i]; }
};

DiscreteRiccati discrete_riccati(const LqParams& p, int n) {
    const double d = p.horizon / n;
    const double g = 1.0 + p.p * d, c = p.q * d;
    DiscreteRiccati r;
    r.F.assign(n + 1, 0.0);
    r.H.assign(n + 1, 0.0);
    r.K.assign(n + 1, 0.0);
    r.F[n] = p.alpha;
    r.H[n] = p.beta;
    for (int i = n - 1; i >= 0; --i) {
        const double F = r.F[i + 1], H = r.H[i + 1], K = r.K[i + 1];
        const double D = 2 * p.A * d + 2 * F * c * c;
        const double kap = -2 * F * c * g / D;
        const double nu = -(p.B * d + H * c) / D;
        const double m = g + c * kap;
        r.F[i] = p.a * d + p.A * d * kap * kap + F * m * m;
        r.H[i] = p.b * d + 2 * p.A * d * kap * nu + p.B * d * kap + 2 * F * m * c * nu + H * m;
        r.K[i] = p.A * d * nu * nu + p.B * d * nu + F * c * c * nu * nu + H * c * nu + F * p.sigma * p.sigma * d + K;
    }
    return r;
}

LqParams tiny_instance() {
    LqParams p = lq_preset("two_fold");
    p.horizon = 0.5;
    return p;
}

}  // namespace

TEST(GaussHermite, Moments) {
    const Quadrature q = gauss_hermite(21);
    ASSERT_EQ(q.nodes.size(), 21u);
    auto moment = [&](int k) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], k);
        return s;
    };
    EXPECT_NEAR(moment(0), 1.0, 1e-13);
    EXPECT_NEAR(moment(1), 0.0, 1e-13);
    EXPECT_NEAR(moment(2), 1.0, 1e-12);
    EXPECT_NEAR(moment(4), 3.0, 1e-11);
    EXPECT_NEAR(moment(10), 945.0, 1e-8);
    EXPECT_NEAR(moment(7), 0.0, 1e-10);
    EXPECT_THROW(gauss_hermite(0), InvalidArgument);
}

// One step: the last step uses g exactly, so the value is the lattice minimum of
// L(x, u) delta + alpha (m^2 + sigma^2 delta) + beta m with m = x + (p x + q u) delta.
TEST(DpOracle, SingleStepMatchesDirectMinimum) {
    const LqParams p = tiny_instance();
    const ControlProblem prob = make_lq_problem(p);
    const TimeGrid grid = make_grid(p.horizon, 1);
    const DpSolution dp = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 41, 81);
    const double d = grid.delta;
    for (std::size_t s = 0; s < dp.states.size(); s += 5) {
        const double x = dp.states[s];
        double best = std::numeric_limits<double>::infinity();
        for (double u : dp.controls) {
            const double m = x + (p.p * x + p.q * u) * d;
            const double v = (p.a * x * x + p.b * x + p.A * u * u + p.B * u) * d +
                             p.alpha * (m * m + p.sigma * p.sigma * d) + p.beta * m;
            best = std::min(best, v);
        }
        EXPECT_NEAR(dp.value(0, static_cast<Eigen::Index>(s)), best, 1e-10 * (1 + std::abs(best))) << x;
    }
}

TEST(DpOracle, AgreesWithDiscreteRiccati) {
    const LqParams p = tiny_instance();
    const ControlProblem prob = make_lq_problem(p);
    const TimeGrid grid = make_grid(p.horizon, 5);
    const DpSolution dp = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 201, 201);
    const DiscreteRiccati exact = discrete_riccati(p, 5);
    for (double x : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        const double v = exact.value(0, x);
        EXPECT_NEAR(dp.value_at(0, x), v, 0.01 * (1 + std::abs(v))) << x;
        // The discrete optimum sits close to the continuous value.
        const LqSolution sol = solve_riccati(p, 1000);
        EXPECT_NEAR(v, lq_value(sol, 0.0, x), 0.1 * (1 + std::abs(v)));
    }
}

// Nested control lattices: a superset can only lower the one-step minimum.
TEST(DpOracle, FinerControlLatticeNeverWorse) {
    const LqParams p = tiny_instance();
    const ControlProblem prob = make_lq_problem(p);
    const TimeGrid grid = make_grid(p.horizon, 1);
    const DpSolution coarse = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 51, 51);
    const DpSolution fine = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 51, 101);
    for (Eigen::Index s = 0; s < 51; ++s) EXPECT_LE(fine.value(0, s), coarse.value(0, s));
}

TEST(DpOracle, ErrorShrinksWithResolution) {
    const LqParams p = tiny_instance();
    const ControlProblem prob = make_lq_problem(p);
    const TimeGrid grid = make_grid(p.horizon, 5);
    const DiscreteRiccati exact = discrete_riccati(p, 5);
    const DpSolution coarse = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 51, 51);
    const DpSolution fine = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 201, 201);
    double e_coarse = 0.0, e_fine = 0.0;
    for (double x : {-1.0, 0.0, 1.0}) {
        e_coarse += std::abs(coarse.value_at(0, x) - exact.value(0, x));
        e_fine += std::abs(fine.value_at(0, x) - exact.value(0, x));
    }
    EXPECT_LT(e_fine, e_coarse);
}

TEST(DpOracle, Errors) {
    const LqParams p = tiny_instance();
    const ControlProblem prob = make_lq_problem(p);
    const TimeGrid grid = make_grid(p.horizon, 5);
    EXPECT_THROW(dp_oracle(prob, grid, {-2.0, 2.0}, {-12.0, 12.0}, 51, 51), InvalidArgument);
    EXPECT_THROW(dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 202, 51), InvalidArgument);
    EXPECT_THROW(dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 51, 51, 20), InvalidArgument);
    EXPECT_THROW(dp_oracle(prob, grid, {1.0, -1.0}, {-12.0, 12.0}, 51, 51), InvalidArgument);
    const DpSolution dp = dp_oracle(prob, grid, {-6.0, 6.0}, {-12.0, 12.0}, 51, 51);
    EXPECT_THROW(dp.value_at(0, 7.0), InvalidArgument);
    EXPECT_THROW(dp.value_at(6, 0.0), InvalidArgument);
    EXPECT_NO_THROW(dp.control_at(4, 0.5));
    EXPECT_THROW(dp.control_at(5, 0.5), InvalidArgument);
}
