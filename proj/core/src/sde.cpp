#include "mspgm/sde.hpp"

#include "mspgm/error.hpp"
#include "mspgm/random.hpp"

#include <cmath>
#include <random>

namespace mspgm {

BrownianBatch::BrownianBatch(std::size_t paths, std::size_t steps, std::size_t dim, double delta,
                             std::uint64_t seed, std::vector<double> increments)
    : paths_(paths), steps_(steps), dim_(dim), delta_(delta), seed_(seed), data_(std::move(increments)) {
    if (data_.size() != paths_ * steps_ * dim_) throw InvalidArgument("BrownianBatch: increment count mismatch");
}

Matrix BrownianBatch::step_increments(std::size_t step, std::size_t first, std::size_t count) const {
    if (step >= steps_ || first + count > paths_) throw InvalidArgument("BrownianBatch: index out of range");
    Matrix out(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t k = 0; k < dim_; ++k) {
            out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = increment(first + j, step, k);
        }
    }
    return out;
}

BrownianBatch BrownianBatch::slice(std::size_t first, std::size_t count) const {
    if (first + count > paths_) throw InvalidArgument("BrownianBatch: slice out of range");
    const std::size_t stride = steps_ * dim_;
    std::vector<double> data(data_.begin() + static_cast<std::ptrdiff_t>(first * stride),
                             data_.begin() + static_cast<std::ptrdiff_t>((first + count) * stride));
    return BrownianBatch(count, steps_, dim_, delta_, seed_, std::move(data));
}

BrownianBatch sample_brownian(std::size_t steps, std::size_t paths, std::size_t dim, double delta,
                              std::uint64_t seed, std::size_t first_path) {
    if (steps < 1 || paths < 1 || dim < 1) throw InvalidArgument("sample_brownian: sizes must be >= 1");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("sample_brownian: delta must be positive");
    std::vector<double> data(paths * steps * dim);
    std::normal_distribution<double> normal(0.0, std::sqrt(delta));
    for (std::size_t j = 0; j < paths; ++j) {
        auto rng = path_stream(seed, first_path + j);
        double* out = data.data() + j * steps * dim;
        for (std::size_t i = 0; i < steps * dim; ++i) out[i] = normal(rng);
        normal.reset();
    }
    return BrownianBatch(paths, steps, dim, delta, seed, std::move(data));
}

TerminalFn terminal_cost_of(const ControlProblem& problem) {
    TerminalCostFn g = problem.terminal_cost;
    return [g](double, std::span<const Var> x) { return g(x); };
}

TerminalFn terminal_value(const FeedForwardNet& value_net) {
    return [&value_net](double t, std::span<const Var> x) { return value_net.forward(t, x, false).front(); };
}

namespace {

void check_finite(const Matrix& state, std::size_t node, std::size_t first_path) {
    if (state.allFinite()) return;
    for (Eigen::Index j = 0; j < state.cols(); ++j) {
        if (!state.col(j).allFinite()) throw NonFiniteState(node, first_path + static_cast<std::size_t>(j));
    }
}

Matrix stack_rows(std::span<const Var> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), rows.front().cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].value();
    return out;
}

// Broadcast a 1 x 1 callable result (e.g. a constant diffusion) to the batch width.
Eigen::RowVectorXd widen(const Matrix& v, Eigen::Index cols) {
    if (v.rows() != 1) throw InvalidArgument("rollout: callable returned a non-row value");
    if (v.cols() == cols) return v.row(0);
    if (v.cols() == 1) return Eigen::RowVectorXd::Constant(cols, v(0, 0));
    throw InvalidArgument("rollout: callable returned a value of the wrong width");
}

}  // namespace

TrajectoryBatch rollout(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                        const Matrix& initial_states, const BrownianBatch& noise, const TerminalFn& terminal,
                        Tape* tape, std::size_t first_path) {
    const int d = problem.state_dim;
    const int m = problem.control_dim;
    const int w = problem.noise_dim;
    const auto n = static_cast<std::size_t>(grid.n);
    const auto J = static_cast<std::size_t>(initial_states.cols());
    const auto cols = static_cast<Eigen::Index>(J);

    if (initial_states.rows() != d) throw InvalidArgument("rollout: initial states have the wrong dimension");
    if (J == 0) throw InvalidArgument("rollout: no paths");
    if (noise.paths() != J || noise.steps() != n || noise.dim() != static_cast<std::size_t>(w)) {
        throw InvalidArgument("rollout: noise shape does not match grid and batch");
    }
    if (policy.control_dim() != m) throw InvalidArgument("rollout: policy control dimension mismatch");
    if (!terminal) throw InvalidArgument("rollout: missing terminal function");

    TrajectoryBatch out;
    out.paths = J;
    out.steps = n;
    out.times = grid.nodes;
    out.states.reserve(n + 1);
    out.controls.reserve(n);
    out.step_costs.resize(static_cast<Eigen::Index>(n), cols);
    out.states.push_back(initial_states);
    check_finite(initial_states, 0, first_path);

    Tape scratch;
    Tape* active = tape != nullptr ? tape : &scratch;
    const std::uint64_t ops_before = active->op_count();

    std::vector<Var> x;
    x.reserve(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) x.push_back(active->constant(initial_states.row(k)));

    std::optional<Var> accumulated;
    const double delta = grid.delta;

    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid.nodes[i];
        if (tape == nullptr) {
            // Untaped mode: each step lives on a fresh scratch tape seeded with the state values.
            out.ops += scratch.op_count();
            scratch.reset();
            const Matrix& current = out.states.back();
            x.clear();
            for (int k = 0; k < d; ++k) x.push_back(scratch.constant(current.row(k)));
        }

        const std::vector<Var> u = policy.act(t, x);
        if (static_cast<int>(u.size()) != m) throw InvalidArgument("rollout: policy returned wrong control count");
        const std::vector<Var> mu = problem.drift(t, x, u);
        const std::vector<Var> sigma = problem.diffusion(t, x, u);
        if (static_cast<int>(mu.size()) != d || static_cast<int>(sigma.size()) != d * w) {
            throw InvalidArgument("rollout: drift/diffusion dimension mismatch");
        }
        const Var cost = problem.running_cost(t, x, u) * delta;

        out.controls.push_back(stack_rows(u));
        out.step_costs.row(static_cast<Eigen::Index>(i)) = widen(cost.value(), cols);

        const Matrix dW = noise.step_increments(i, 0, J);
        std::vector<Var> next;
        next.reserve(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) {
            Var xk = x[static_cast<std::size_t>(k)] + mu[static_cast<std::size_t>(k)] * delta;
            for (int l = 0; l < w; ++l) {
                const Var dw = active->constant(Matrix(dW.row(l)));
                xk = xk + sigma[static_cast<std::size_t>(k * w + l)] * dw;
            }
            next.push_back(xk);
        }
        x = std::move(next);

        if (tape != nullptr) accumulated = accumulated ? *accumulated + cost : cost;

        Matrix state(d, cols);
        for (int k = 0; k < d; ++k) state.row(k) = widen(x[static_cast<std::size_t>(k)].value(), cols);
        check_finite(state, i + 1, first_path);
        out.states.push_back(std::move(state));
    }

    if (tape == nullptr) {
        out.ops += scratch.op_count();
        scratch.reset();
        const Matrix& current = out.states.back();
        x.clear();
        for (int k = 0; k < d; ++k) x.push_back(scratch.constant(current.row(k)));
    }
    const Var g = terminal(grid.nodes[n], x);
    out.terminal_costs = widen(g.value(), cols).transpose();

    out.costs_to_go.resize(static_cast<Eigen::Index>(n + 1), cols);
    out.costs_to_go.row(static_cast<Eigen::Index>(n)) = out.terminal_costs.transpose();
    for (std::size_t i = n; i-- > 0;) {
        const auto r = static_cast<Eigen::Index>(i);
        out.costs_to_go.row(r) = out.step_costs.row(r) + out.costs_to_go.row(r + 1);
    }

    if (tape != nullptr) {
        const Var path_total = accumulated ? *accumulated + g : g;
        if (path_total.cols() == cols) {
            out.total_cost = sum(path_total);
        } else {
            out.total_cost = sum(path_total) * static_cast<double>(J);
        }
    }
    out.ops += active->op_count() - (tape != nullptr ? ops_before : 0);
    return out;
}

TrajectoryBatch rollout(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                        const Distribution& init, std::uint64_t init_seed, const BrownianBatch& noise, Tape* tape) {
    const Matrix x0 = init.sample(noise.paths(), init_seed);
    return rollout(problem, grid, policy, x0, noise, terminal_cost_of(problem), tape);
}

TrajectoryBatch restrict_rollout(const ControlProblem& problem, const TimeGrid& subgrid, const Policy& policy,
                                 const Distribution& init, std::uint64_t init_seed, const BrownianBatch& noise,
                                 const FeedForwardNet& value_net, Tape* tape) {
    if (init.kind() == Distribution::Kind::Empirical && init.samples().cols() == 0) {
        throw InvalidArgument("restrict_rollout: empty empirical distribution");
    }
    const Matrix x0 = init.sample(noise.paths(), init_seed);
    return rollout(problem, subgrid, policy, x0, noise, terminal_value(value_net), tape);
}

}  // namespace mspgm
