#include "mspgm/multiscale.hpp"

#include "mspgm/error.hpp"
#include "mspgm/random.hpp"
#include "mspgm/sde.hpp"

#include <chrono>

namespace mspgm {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSimulationStream = 0x73696d;

// Simulates the trained policy on [0, T], keeps the states and fits the value net.
void prepare_successor(const ControlProblem& problem, StageResult& stage, const StageSpec& spec,
                       std::size_t default_paths) {
    const std::size_t paths = spec.sim_paths > 0 ? spec.sim_paths : default_paths;
    const std::uint64_t seed = derive_seed(spec.train.seed, kSimulationStream, static_cast<std::uint64_t>(stage.stage));
    const Matrix x0 = problem.initial.sample(paths, derive_seed(seed, 0));
    const BrownianBatch noise = sample_brownian(static_cast<std::size_t>(stage.grid.n), paths,
                                                static_cast<std::size_t>(problem.noise_dim), stage.grid.delta,
                                                derive_seed(seed, 1));
    const NetPolicy policy(stage.policy.net, false);
    const TrajectoryBatch batch = rollout(problem, stage.grid, policy, x0, noise, terminal_cost_of(problem));
    stage.ops += batch.ops;

    NetArch value_arch = spec.value_arch;
    if (value_arch.layer_sizes.empty()) {
        value_arch = spec.arch;
        value_arch.layer_sizes.back() = 1;
    }
    stage.value_net = fit_value(batch, value_arch, spec.value, &stage.value_report);
    stage.ops += stage.value_report.ops;
    stage.has_value = true;
    stage.states = batch.states;
}

}  // namespace

RunCost MultiScaleResult::cost() const {
    RunCost cost;
    for (const auto& s : stages) {
        cost.stage_ops.push_back(s.ops);
        cost.stage_seconds.push_back(s.seconds);
    }
    return cost;
}

StageResult run_coarse(const ControlProblem& problem, int N1, const StageSpec& spec, bool prepare_next) {
    const auto start = Clock::now();
    if (spec.paths < 1) throw InvalidArgument("stage 1: paths must be >= 1");
    StageResult out;
    out.stage = 1;
    out.grid = make_grid(problem.horizon, N1);
    for (int i = 0; i < N1; ++i) out.intervals.push_back(i);
    out.policy = train_policy(problem, out.grid, problem.initial, spec.arch, spec.paths, spec.train);
    out.ops = out.policy.ops;
    if (prepare_next) prepare_successor(problem, out, spec, spec.paths);
    out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

StageResult run_fine_stage(const ControlProblem& problem, const StageResult& prev, int Nk, const StageSpec& spec,
                           bool prepare_next) {
    const auto start = Clock::now();
    if (!prev.has_value || prev.states.empty()) {
        throw InvalidArgument("fine stage: previous stage has no value net or stored states");
    }
    if (Nk < 1) throw InvalidArgument("fine stage: refinement must be >= 1");
    if (spec.paths < 1) throw InvalidArgument("fine stage: paths must be >= 1");

    StageResult out;
    out.stage = prev.stage + 1;
    const int coarse_n = prev.grid.n;
    out.grid = make_grid(problem.horizon, coarse_n * Nk);
    out.intervals = spec.intervals;
    if (out.intervals.empty()) {
        for (int i = 0; i < coarse_n; ++i) out.intervals.push_back(i);
    }
    std::vector<bool> seen(static_cast<std::size_t>(coarse_n), false);
    for (int i : out.intervals) {
        const std::string where = "fine stage " + std::to_string(out.stage) + ": interval " + std::to_string(i);
        if (i < 0 || i >= coarse_n) {
            throw InvalidArgument(where + " outside [0, " + std::to_string(coarse_n) + ")");
        }
        if (seen[static_cast<std::size_t>(i)]) throw InvalidArgument(where + " listed twice");
        seen[static_cast<std::size_t>(i)] = true;
    }

    const TerminalFn g = terminal_cost_of(problem);
    const TerminalFn v = terminal_value(prev.value_net);
    std::vector<TrainingSegment> segments;
    for (int i : out.intervals) {
        TrainingSegment seg;
        seg.grid = out.grid.slice(i * Nk, Nk);
        seg.initial = Distribution::empirical(prev.states[static_cast<std::size_t>(i)]);
        seg.terminal = i + 1 == coarse_n ? g : v;
        seg.paths = spec.paths;
        segments.push_back(std::move(seg));
    }

    FeedForwardNet initial = spec.arch == prev.policy.net.arch()
                                 ? prev.policy.net
                                 : FeedForwardNet(spec.arch, derive_seed(spec.train.seed, 0x6e6574));
    out.policy = train_segments(problem, segments, std::move(initial), spec.train);
    out.ops = out.policy.ops;
    if (prepare_next) prepare_successor(problem, out, spec, spec.paths * out.intervals.size());
    out.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
}

MultiScaleResult run_kfold(const ControlProblem& problem, int K, int N, std::span<const StageSpec> specs) {
    if (K < 1) throw InvalidArgument("run_kfold: K must be >= 1");
    if (N < 1) throw InvalidArgument("run_kfold: N must be >= 1");
    if (static_cast<int>(specs.size()) != K) throw InvalidArgument("run_kfold: need one StageSpec per stage");
    if (!specs.front().intervals.empty()) throw InvalidArgument("run_kfold: stage 1 trains on all of [0, T]");
    for (const auto& s : specs) {
        if (s.refinement != 0 && s.refinement != N) {
            throw InvalidArgument("run_kfold: every stage refines by the same N");
        }
    }
    MultiScaleResult out;
    out.stages.push_back(run_coarse(problem, N, specs[0], K > 1));
    for (int k = 1; k < K; ++k) {
        out.stages.push_back(
            run_fine_stage(problem, out.stages.back(), N, specs[static_cast<std::size_t>(k)], k + 1 < K));
    }
    return out;
}

}  // namespace mspgm
