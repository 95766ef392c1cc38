#pragma once

#include "mspgm/network.hpp"
#include "mspgm/optimizer.hpp"
#include "mspgm/problem.hpp"
#include "mspgm/sde.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mspgm {

struct TrainConfig {
    int epochs = 100;
    /// Paths per gradient step for each segment; 0 means all of them (one step per epoch).
    std::size_t batch_size = 0;
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    /// Reuse the epoch-0 initial states and noise every epoch instead of redrawing.
    bool fixed_samples = false;
    /// Paths recorded per tape; affects memory only, never results.
    std::size_t chunk_paths = 256;
    int threads = 1;

    void validate() const;
};

struct TrainedPolicy {
    FeedForwardNet net;
    /// Per-epoch empirical cost (mean path cost, summed over segments).
    std::vector<double> loss_history;
    int best_epoch = -1;
    bool diverged = false;
    /// Primitive operations recorded while training.
    std::uint64_t ops = 0;
    double seconds = 0.0;
};

/// One term of the training objective: paths of `grid` started from `initial` and charged
/// `terminal` at the grid's last node. The objective is the sum over segments of the mean
/// path cost of each segment.
struct TrainingSegment {
    TimeGrid grid;
    Distribution initial = Distribution::point({0.0});
    TerminalFn terminal;
    std::size_t paths = 1;
};

struct CostGradient {
    double loss = 0.0;   // mean path cost
    Vector gradient;     // d loss / d theta
    std::uint64_t ops = 0;
};

/// Mean path cost over the given initial states and noise, and its gradient with respect to
/// the policy network parameters (reverse sweep through the whole Euler-Maruyama recursion).
CostGradient cost_and_gradient(const ControlProblem& problem, const TimeGrid& grid, const FeedForwardNet& policy,
                               const Matrix& initial_states, const BrownianBatch& noise,
                               const TerminalFn& terminal, std::size_t chunk_paths = 256, int threads = 1);

/// Same objective, value only (no tape kept).
double empirical_cost(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                      const Matrix& initial_states, const BrownianBatch& noise, const TerminalFn& terminal);

/// Gradient descent on the summed segment objective over one shared network, starting from
/// `initial`. Initial states and noise are redrawn every epoch from streams derived from
/// cfg.seed. Returns the best-seen parameters.
TrainedPolicy train_segments(const ControlProblem& problem, std::span<const TrainingSegment> segments,
                             FeedForwardNet initial, const TrainConfig& cfg);

/// Brute-force deep PGM on one grid. `terminal` defaults to g; `warm_start` replaces the
/// random initialization when given (its architecture must equal `arch`).
TrainedPolicy train_policy(const ControlProblem& problem, const TimeGrid& grid, const Distribution& init,
                           const NetArch& arch, std::size_t paths, const TrainConfig& cfg,
                           const TerminalFn& terminal = {}, const FeedForwardNet* warm_start = nullptr);

struct FitReport {
    /// Per-epoch mean squared residual, in target units.
    std::vector<double> loss_history;
    int best_epoch = -1;
    bool diverged = false;
    std::uint64_t ops = 0;
    double seconds = 0.0;
};

/// Least-squares regression of the costs-to-go on (t_i, X_i) over every node i = 0..n and
/// path. Inputs and targets are standardized through the network's fixed transforms.
FeedForwardNet fit_value(const TrajectoryBatch& trajectories, const NetArch& arch, const TrainConfig& cfg,
                         FitReport* report = nullptr);

/// Regression on explicit samples: inputs are (1 + d) x S rows (t, x), targets length S.
FeedForwardNet fit_samples(const Matrix& inputs, const Vector& targets, const NetArch& arch,
                           const TrainConfig& cfg, FitReport* report = nullptr);

struct Evaluation {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
};

/// Monte-Carlo cost of `policy` started from the point x0 on `grid`, charged g at the end.
Evaluation evaluate_policy(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                           std::span<const double> x0, std::size_t paths, std::uint64_t seed, int threads = 1);

/// Mean and standard error of a sample.
Evaluation summarize(std::span<const double> costs);

}  // namespace mspgm
