#pragma once

#include "mspgm/network.hpp"
#include "mspgm/planner.hpp"
#include "mspgm/problem.hpp"
#include "mspgm/train.hpp"

#include <span>
#include <vector>

namespace mspgm {

/// One stage of a multi-scale run.
struct StageSpec {
    /// Steps per interval of the previous stage (stage 1: steps on [0, T]). 0 = the run's N.
    int refinement = 0;
    /// Stage 1: training paths. Later stages: paths per selected interval.
    std::size_t paths = 100;
    /// Previous-stage interval indices trained in this stage; empty = all of them.
    std::vector<int> intervals;
    NetArch arch;
    TrainConfig train;
    NetArch value_arch;
    TrainConfig value;
    /// Paths simulated over [0, T] after training to build the empirical state laws and fit
    /// the value net for the next stage. 0 = paths * (number of trained intervals).
    std::size_t sim_paths = 0;
};

struct StageResult {
    int stage = 1;
    TimeGrid grid;
    std::vector<int> intervals;
    TrainedPolicy policy;
    /// Present when the stage prepared a successor.
    bool has_value = false;
    FeedForwardNet value_net;
    FitReport value_report;
    /// d x sim_paths states at every node of `grid` (empty without a successor).
    std::vector<Matrix> states;
    std::uint64_t ops = 0;
    double seconds = 0.0;
};

struct MultiScaleResult {
    std::vector<StageResult> stages;

    const FeedForwardNet& policy() const { return stages.back().policy.net; }
    RunCost cost() const;
};

/// Step 1: train on the N_1-step grid from the problem's initial law. With `prepare_next`,
/// simulate the trained policy, keep the visited states and fit the value net to the
/// costs-to-go.
StageResult run_coarse(const ControlProblem& problem, int N1, const StageSpec& spec, bool prepare_next = true);

/// Later stage: one shared network trained on the selected intervals of the previous grid,
/// each refined N_k times, starting from the previous stage's visited states and charged
/// the previous value net at the interval's right end (g when that end is T).
StageResult run_fine_stage(const ControlProblem& problem, const StageResult& prev, int Nk, const StageSpec& spec,
                           bool prepare_next = true);

/// K stages with N steps per previous interval; the final grid has N^K steps.
/// K = 1 is the brute-force method on N steps.
MultiScaleResult run_kfold(const ControlProblem& problem, int K, int N, std::span<const StageSpec> specs);

}  // namespace mspgm
