#include "mspgm/error.hpp"
#include "mspgm/lq_oracle.hpp"
#include "mspgm/multiscale.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mspgm;

namespace {

StageSpec spec(std::size_t paths, int epochs, std::uint64_t seed, std::vector<int> intervals = {}) {
    StageSpec s;
    s.paths = paths;
    s.intervals = std::move(intervals);
    s.arch = NetArch::make(1, {8, 8}, 1);
    s.train.epochs = epochs;
    s.train.optimizer.learning_rate = 5e-3;
    s.train.seed = seed;
    s.value = s.train;
    s.value.seed = seed + 1000;
    return s;
}

ControlProblem lq(const char* preset, double lo = -1.0, double hi = 1.0) {
    return make_lq_problem(lq_preset(preset), Distribution::uniform({lo}, {hi}));
}

}  // namespace

// One stage is exactly the brute-force method.
TEST(MultiScale, SingleFoldIsBruteForce) {
    const ControlProblem prob = lq("two_fold");
    const std::vector<StageSpec> specs{spec(16, 5, 3)};
    const MultiScaleResult r = run_kfold(prob, 1, 10, specs);
    ASSERT_EQ(r.stages.size(), 1u);
    EXPECT_FALSE(r.stages[0].has_value);
    const TrainedPolicy brute =
        train_policy(prob, make_grid(1.0, 10), prob.initial, specs[0].arch, 16, specs[0].train);
    EXPECT_EQ(r.policy(), brute.net);
    EXPECT_EQ(r.stages[0].ops, brute.ops);
}

TEST(MultiScale, ThreeFoldLayout) {
    const ControlProblem prob = lq("three_fold");
    const std::vector<StageSpec> specs{spec(20, 2, 1), spec(10, 2, 2, {0, 2, 4}), spec(5, 2, 3, {0, 6, 12, 18, 24})};
    const MultiScaleResult r = run_kfold(prob, 3, 5, specs);
    ASSERT_EQ(r.stages.size(), 3u);
    const int steps[] = {5, 25, 125};
    for (int k = 0; k < 3; ++k) {
        const StageResult& s = r.stages[static_cast<std::size_t>(k)];
        EXPECT_EQ(s.stage, k + 1);
        EXPECT_EQ(s.grid.n, steps[k]);
        EXPECT_DOUBLE_EQ(s.grid.end(), 1.25);
        EXPECT_GT(s.ops, 0u);
    }
    EXPECT_EQ(r.stages[1].intervals, (std::vector<int>{0, 2, 4}));
    // Stages feeding a successor keep states at every node of their grid.
    EXPECT_TRUE(r.stages[0].has_value);
    EXPECT_EQ(r.stages[0].states.size(), 6u);
    EXPECT_EQ(r.stages[0].states[0].cols(), 20);
    EXPECT_EQ(r.stages[1].states.size(), 26u);
    EXPECT_EQ(r.stages[1].states[0].cols(), 30);
    EXPECT_FALSE(r.stages[2].has_value);
    // Every stage-k grid contains the previous stage's nodes.
    for (int k = 1; k < 3; ++k) {
        const TimeGrid& fine = r.stages[static_cast<std::size_t>(k)].grid;
        const TimeGrid& coarse = r.stages[static_cast<std::size_t>(k - 1)].grid;
        for (int i = 0; i <= coarse.n; ++i) EXPECT_EQ(fine.nodes[static_cast<std::size_t>(i * 5)], coarse.nodes[i]);
    }
    const RunCost c = r.cost();
    EXPECT_EQ(c.stage_ops.size(), 3u);
    EXPECT_EQ(c.total_ops(), r.stages[0].ops + r.stages[1].ops + r.stages[2].ops);
}

TEST(MultiScale, StoredStatesStartFromInitialLaw) {
    const ControlProblem prob = lq("two_fold", -2.0, 3.0);
    StageSpec s = spec(16, 2, 1);
    s.sim_paths = 40;
    const StageResult r = run_coarse(prob, 5, s, true);
    ASSERT_EQ(r.states.size(), 6u);
    EXPECT_EQ(r.states[0].cols(), 40);
    EXPECT_GE(r.states[0].minCoeff(), -2.0);
    EXPECT_LT(r.states[0].maxCoeff(), 3.0);
    EXPECT_EQ(r.value_report.loss_history.size(), 2u);
}

TEST(MultiScale, Errors) {
    const ControlProblem prob = lq("two_fold");
    const StageResult coarse = run_coarse(prob, 5, spec(8, 1, 1), true);
    EXPECT_THROW(run_fine_stage(prob, coarse, 10, spec(4, 1, 2, {5})), InvalidArgument);
    EXPECT_THROW(run_fine_stage(prob, coarse, 10, spec(4, 1, 2, {-1})), InvalidArgument);
    EXPECT_THROW(run_fine_stage(prob, coarse, 10, spec(4, 1, 2, {1, 1})), InvalidArgument);
    EXPECT_THROW(run_fine_stage(prob, coarse, 0, spec(4, 1, 2)), InvalidArgument);
    const StageResult bare = run_coarse(prob, 5, spec(8, 1, 1), false);
    EXPECT_THROW(run_fine_stage(prob, bare, 10, spec(4, 1, 2)), InvalidArgument);
    const std::vector<StageSpec> one{spec(8, 1, 1)};
    EXPECT_THROW(run_kfold(prob, 2, 10, one), InvalidArgument);
    const std::vector<StageSpec> bad_first{spec(8, 1, 1, {0}), spec(4, 1, 2)};
    EXPECT_THROW(run_kfold(prob, 2, 10, bad_first), InvalidArgument);
    std::vector<StageSpec> bad_refine{spec(8, 1, 1), spec(4, 1, 2)};
    bad_refine[1].refinement = 3;
    EXPECT_THROW(run_kfold(prob, 2, 10, bad_refine), InvalidArgument);
}

// With an exact terminal value the one-interval objective is the dynamic-programming
// subproblem, so the trained policy comes within 2% of the closed-form policy there.
TEST(MultiScale, ExactValueAtIntervalEnd) {
    const LqParams p = lq_preset("two_fold");
    const ControlProblem prob = make_lq_problem(p);
    const LqSolution sol = solve_riccati(p, 1000);
    const TimeGrid fine = make_grid(1.0, 100);
    const TimeGrid sub = fine.slice(30, 10);
    const RiccatiPoint end = sol.at(sub.end());
    const TerminalFn exact = [end](double, std::span<const Var> x) {
        return end.f * square(x[0]) + end.h * x[0] + end.k;
    };
    const Matrix pool = Distribution::uniform({-1.5}, {1.5}).sample(500, 4);
    TrainingSegment seg;
    seg.grid = sub;
    seg.initial = Distribution::empirical(pool);
    seg.terminal = exact;
    seg.paths = 256;
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.optimizer.learning_rate = 5e-3;
    cfg.seed = 6;
    const TrainedPolicy tp =
        train_segments(prob, std::span(&seg, 1), FeedForwardNet(NetArch::make(1, {16, 16}, 1), 6), cfg);
    const Matrix x0 = seg.initial.sample(4000, 77);
    const BrownianBatch noise = sample_brownian(10, 4000, 1, sub.delta, 78);
    const double trained = empirical_cost(prob, sub, NetPolicy(tp.net), x0, noise, exact);
    const double optimal = empirical_cost(prob, sub, LqPolicy(sol), x0, noise, exact);
    EXPECT_LT(std::abs(trained - optimal) / optimal, 0.02) << trained << " vs " << optimal;
}

// N_k = 1 over all intervals with the same architecture: the refined policy costs the same
// as the coarse one up to Monte-Carlo noise.
TEST(MultiScale, UnitRefinementPreservesCost) {
    const ControlProblem prob = lq("two_fold");
    StageSpec s1 = spec(64, 150, 1);
    s1.sim_paths = 512;
    StageSpec s2 = spec(32, 60, 2);
    const StageResult coarse = run_coarse(prob, 5, s1, true);
    const StageResult refined = run_fine_stage(prob, coarse, 1, s2, false);
    EXPECT_EQ(refined.grid.n, 5);
    const TimeGrid grid = make_grid(1.0, 5);
    const double x0 = 0.5;
    const Evaluation a = evaluate_policy(prob, grid, NetPolicy(coarse.policy.net), std::span(&x0, 1), 4000, 9);
    const Evaluation b = evaluate_policy(prob, grid, NetPolicy(refined.policy.net), std::span(&x0, 1), 4000, 9);
    const double noise = 3 * std::hypot(a.std_error, b.std_error);
    EXPECT_LT(std::abs(a.mean - b.mean), 0.05 * std::abs(a.mean) + noise) << a.mean << " vs " << b.mean;
}
