#pragma once

#include "mspgm/network.hpp"
#include "mspgm/problem.hpp"
#include "mspgm/tape.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mspgm {

/// Gaussian increments N(0, delta) for `paths` x `steps` x `dim`.
class BrownianBatch {
public:
    BrownianBatch() = default;
    BrownianBatch(std::size_t paths, std::size_t steps, std::size_t dim, double delta, std::uint64_t seed,
                  std::vector<double> increments);

    std::size_t paths() const noexcept { return paths_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t dim() const noexcept { return dim_; }
    double delta() const noexcept { return delta_; }
    std::uint64_t seed() const noexcept { return seed_; }

    double increment(std::size_t path, std::size_t step, std::size_t k = 0) const {
        return data_[(path * steps_ + step) * dim_ + k];
    }
    std::span<const double> data() const noexcept { return data_; }

    /// dim x count matrix of the increments of step `step` for paths [first, first + count).
    Matrix step_increments(std::size_t step, std::size_t first, std::size_t count) const;
    /// Paths [first, first + count) as a new batch.
    BrownianBatch slice(std::size_t first, std::size_t count) const;

private:
    std::size_t paths_ = 0;
    std::size_t steps_ = 0;
    std::size_t dim_ = 0;
    double delta_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> data_;
};

/// Increments for paths first..first+J-1; path j draws from its own stream seeded from
/// (seed, j), so any sub-range reproduces the corresponding slice of a larger batch.
BrownianBatch sample_brownian(std::size_t steps, std::size_t paths, std::size_t dim, double delta,
                              std::uint64_t seed, std::size_t first_path = 0);

/// Simulated paths. states[i] is d x J at node i; step_costs are already multiplied by delta.
struct TrajectoryBatch {
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::vector<double> times;
    std::vector<Matrix> states;    // steps + 1 entries, d x J
    std::vector<Matrix> controls;  // steps entries, m x J
    Matrix step_costs;             // steps x J
    Vector terminal_costs;         // J
    Matrix costs_to_go;            // (steps + 1) x J
    /// Sum over paths of the path cost, as a tape node; set only for recorded rollouts.
    std::optional<Var> total_cost;
    /// Primitive operations spent producing the batch.
    std::uint64_t ops = 0;

    double state(std::size_t path, std::size_t step, int k = 0) const {
        return states[step](k, static_cast<Eigen::Index>(path));
    }
    /// Realized cost of each path from node 0.
    Vector path_costs() const { return costs_to_go.row(0).transpose(); }
};

/// Feedback control u = policy(t, x) on tape variables.
class Policy {
public:
    virtual ~Policy() = default;
    virtual int control_dim() const = 0;
    virtual std::vector<Var> act(double t, std::span<const Var> x) const = 0;
};

/// Network policy; the parameter block is registered on whatever tape x lives on.
class NetPolicy final : public Policy {
public:
    explicit NetPolicy(const FeedForwardNet& net, bool trainable = true) : net_(&net), trainable_(trainable) {}
    int control_dim() const override { return net_->output_dim(); }
    std::vector<Var> act(double t, std::span<const Var> x) const override {
        return net_->forward(t, x, trainable_);
    }

private:
    const FeedForwardNet* net_;
    bool trainable_;
};

/// Adapter for an arbitrary callable (closed-form controls, test policies).
class FunctionPolicy final : public Policy {
public:
    using Fn = std::function<std::vector<Var>(double t, std::span<const Var> x)>;
    FunctionPolicy(int control_dim, Fn fn) : dim_(control_dim), fn_(std::move(fn)) {}
    int control_dim() const override { return dim_; }
    std::vector<Var> act(double t, std::span<const Var> x) const override { return fn_(t, x); }

private:
    int dim_;
    Fn fn_;
};

/// Value charged at the last node of a rollout: g(x) or an estimate V(t, x).
using TerminalFn = std::function<Var(double t, std::span<const Var> x)>;

TerminalFn terminal_cost_of(const ControlProblem& problem);
/// Frozen value network V(t, x) (no gradient flows into its parameters).
TerminalFn terminal_value(const FeedForwardNet& value_net);

/// Euler-Maruyama:
///   X_{i+1} = X_i + mu(t_i, X_i, u_i) delta + sigma(t_i, X_i, u_i) dW_{i+1},  u_i = policy(t_i, X_i)
/// with step cost L(t_i, X_i, u_i) delta and `terminal` charged at the last node.
/// When `tape` is given the whole batch is recorded on it and `total_cost` is set; otherwise
/// each step is evaluated on a scratch tape and discarded.
/// Throws NonFiniteState (step index, path index offset by `first_path`).
TrajectoryBatch rollout(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                        const Matrix& initial_states, const BrownianBatch& noise, const TerminalFn& terminal,
                        Tape* tape = nullptr, std::size_t first_path = 0);

/// Rollout from draws of `init` (seeded), charged g at the horizon.
TrajectoryBatch rollout(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                        const Distribution& init, std::uint64_t init_seed, const BrownianBatch& noise,
                        Tape* tape = nullptr);

/// Rollout over one coarse interval [T_i, T_{i+1}] (the sub-grid) starting from resampled
/// coarse states, charged the frozen value estimate V(T_{i+1}, x) at the right endpoint.
TrajectoryBatch restrict_rollout(const ControlProblem& problem, const TimeGrid& subgrid, const Policy& policy,
                                 const Distribution& init, std::uint64_t init_seed, const BrownianBatch& noise,
                                 const FeedForwardNet& value_net, Tape* tape = nullptr);

}  // namespace mspgm
