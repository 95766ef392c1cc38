#include "mspgm/lq_oracle.hpp"
#include "mspgm/network.hpp"
#include "mspgm/planner.hpp"
#include "mspgm/sde.hpp"
#include "mspgm/tape.hpp"
#include "mspgm/train.hpp"

#include <benchmark/benchmark.h>

using namespace mspgm;

namespace {

const ControlProblem& problem() {
    static const ControlProblem prob = make_lq_problem(lq_preset("two_fold"));
    return prob;
}

// Network forward and reverse sweep on a batch of J states.
void BM_NetForwardBackward(benchmark::State& state) {
    const auto J = static_cast<Eigen::Index>(state.range(0));
    const FeedForwardNet net(NetArch::make(2, {50, 50}, 1), 1);
    const Matrix x = Matrix::Random(3, J);  // (t, x1, x2)
    for (auto _ : state) {
        Tape tape;
        const Var out = sum(net.forward(tape.variable(x)));
        // Parameter leaves are shared by data pointer, so this is the block used above.
        const Var p = tape.parameters(net.params());
        benchmark::DoNotOptimize(backward(tape, out).wrt(p));
    }
    state.SetItemsProcessed(state.iterations() * J);
}
BENCHMARK(BM_NetForwardBackward)->Arg(16)->Arg(256);

// Untaped rollout of a network policy over n steps and J paths.
void BM_Rollout(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const std::size_t J = 256;
    const TimeGrid grid = make_grid(1.0, n);
    const FeedForwardNet net(NetArch::make(1, {50, 50}, 1), 2);
    const Matrix x0 = Matrix::Zero(1, static_cast<Eigen::Index>(J));
    const BrownianBatch noise = sample_brownian(static_cast<std::size_t>(n), J, 1, grid.delta, 3);
    const TerminalFn g = terminal_cost_of(problem());
    for (auto _ : state) benchmark::DoNotOptimize(empirical_cost(problem(), grid, NetPolicy(net), x0, noise, g));
    state.SetItemsProcessed(state.iterations() * n * static_cast<std::int64_t>(J));
}
BENCHMARK(BM_Rollout)->Arg(10)->Arg(100);

// One loss-and-gradient evaluation, the unit of a training epoch.
void BM_CostAndGradient(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const std::size_t J = 100;
    const TimeGrid grid = make_grid(1.0, n);
    const FeedForwardNet net(NetArch::make(1, {50, 50}, 1), 4);
    const Matrix x0 = Matrix::Zero(1, static_cast<Eigen::Index>(J));
    const BrownianBatch noise = sample_brownian(static_cast<std::size_t>(n), J, 1, grid.delta, 5);
    const TerminalFn g = terminal_cost_of(problem());
    for (auto _ : state) benchmark::DoNotOptimize(cost_and_gradient(problem(), grid, net, x0, noise, g).loss);
    state.SetItemsProcessed(state.iterations() * n * static_cast<std::int64_t>(J));
}
BENCHMARK(BM_CostAndGradient)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Riccati(benchmark::State& state) {
    const LqParams p = lq_preset("two_fold");
    for (auto _ : state) benchmark::DoNotOptimize(solve_riccati(p, static_cast<int>(state.range(0))).at(0.0).f);
}
BENCHMARK(BM_Riccati)->Arg(1000)->Arg(10000);

void BM_PlanThreeFold(benchmark::State& state) {
    for (auto _ : state) {
        const AllocationPlan plan = make_plan(3, 5, 2, {1, Rational(59) / 24});
        benchmark::DoNotOptimize(verify_plan(plan).ok());
    }
}
BENCHMARK(BM_PlanThreeFold);

}  // namespace

BENCHMARK_MAIN();
