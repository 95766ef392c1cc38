#pragma once

#include "mspgm/tape.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mspgm {

/// Initial-state law: independent uniform coordinates, a point mass, or an empirical
/// sample set (resampled uniformly with replacement).
class Distribution {
public:
    enum class Kind { Uniform, Point, Empirical };

    static Distribution uniform(std::vector<double> lo, std::vector<double> hi);
    static Distribution point(std::vector<double> x);
    /// `samples` is d x S, one column per stored state.
    static Distribution empirical(Matrix samples);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    const std::vector<double>& lo() const noexcept { return lo_; }
    const std::vector<double>& hi() const noexcept { return hi_; }
    const Matrix& samples() const noexcept { return samples_; }

    /// d x count draws for draw indices first, first + 1, ... Draw j comes from its own
    /// stream so it does not depend on how many others are requested.
    Matrix sample(std::size_t count, std::uint64_t seed, std::size_t first = 0) const;

private:
    Distribution() = default;

    Kind kind_ = Kind::Point;
    int dim_ = 0;
    std::vector<double> lo_;
    std::vector<double> hi_;
    Matrix samples_;
};

using DriftFn = std::function<std::vector<Var>(double t, std::span<const Var> x, std::span<const Var> u)>;
/// Returns d*w entries, row-major: entry (i, k) couples state i to noise k.
using DiffusionFn = std::function<std::vector<Var>(double t, std::span<const Var> x, std::span<const Var> u)>;
using RunningCostFn = std::function<Var(double t, std::span<const Var> x, std::span<const Var> u)>;
using TerminalCostFn = std::function<Var(std::span<const Var> x)>;

/// dX = drift(t, X, u) dt + diffusion(t, X, u) dW on [0, horizon], cost
/// E[ int running_cost dt + terminal_cost(X_T) ]. Callables operate on tape variables so
/// gradients flow through the dynamics. Immutable once built.
struct ControlProblem {
    DriftFn drift;
    DiffusionFn diffusion;
    RunningCostFn running_cost;
    TerminalCostFn terminal_cost;
    double horizon = 1.0;
    int state_dim = 1;
    int control_dim = 1;
    int noise_dim = 1;
    Distribution initial = Distribution::point({0.0});

    /// Checks dimensions and evaluates every callable on random finite probes.
    /// Throws InvalidArgument on any violation.
    void validate(std::uint64_t seed = 0, int probes = 8) const;
};

/// Uniform time grid t_i = t_0 + i * delta, i = 0..n.
struct TimeGrid {
    int n = 1;
    double delta = 1.0;
    std::vector<double> nodes;

    double start() const { return nodes.front(); }
    double end() const { return nodes.back(); }

    /// Sub-grid covering steps [first, first + steps); shares node values with this grid.
    TimeGrid slice(int first, int steps) const;
};

TimeGrid make_grid(double horizon, int n);

/// Coefficients of
///   min E[ int (a x^2 + b x + A u^2 + B u) dt + alpha x_T^2 + beta x_T ],
///   dX = (p X + q u) dt + sigma dW.
struct LqParams {
    double a = 0.0;
    double b = 0.0;
    double A = 1.0;
    double B = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double p = 0.0;
    double q = 1.0;
    double sigma = 0.0;
    double horizon = 1.0;

    void validate() const;
};

/// Builtin LQ presets. "two_fold" (T = 1, a = 10) and "three_fold" (T = 1.25, a = 100)
/// are reconstructions: the control weight A is large relative to q^2 so that f and h move
/// appreciably in time; the remaining coefficients are our own choice.
LqParams lq_preset(const std::string& name);
std::vector<std::string> lq_preset_names();

ControlProblem make_lq_problem(const LqParams& params, Distribution initial = Distribution::point({0.0}));

}  // namespace mspgm
