#include "mspgm/train.hpp"

#include "mspgm/error.hpp"
#include "mspgm/parallel.hpp"
#include "mspgm/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mspgm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct ChunkResult {
    double cost_sum = 0.0;
    Vector grad_sum;
    std::uint64_t ops = 0;
};

// Records one batch of paths on its own tape and sweeps back to the parameters.
ChunkResult chunk_gradient(const ControlProblem& problem, const TimeGrid& grid, const FeedForwardNet& net,
                           const Matrix& x0, const BrownianBatch& noise, const TerminalFn& terminal,
                           std::size_t first_path) {
    Tape tape;
    const NetPolicy policy(net, true);
    const TrajectoryBatch batch = rollout(problem, grid, policy, x0, noise, terminal, &tape, first_path);
    const Var theta = tape.parameters(net.params(), true);
    const Gradients grads = backward(tape, *batch.total_cost);
    ChunkResult out;
    out.cost_sum = batch.total_cost->value()(0, 0);
    out.grad_sum = grads.wrt(theta);
    out.ops = tape.op_count();
    return out;
}

struct WorkItem {
    std::size_t segment = 0;
    std::size_t first = 0;
    std::size_t count = 0;
};

void check_segments(const ControlProblem& problem, std::span<const TrainingSegment> segments) {
    if (segments.empty()) throw InvalidArgument("training: no segments");
    for (const auto& s : segments) {
        if (s.paths < 1) throw InvalidArgument("training: segment needs at least one path");
        if (!s.terminal) throw InvalidArgument("training: segment has no terminal function");
        if (s.initial.dim() != problem.state_dim) throw InvalidArgument("training: initial distribution dimension");
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidArgument("train config: epochs must be >= 0");
    if (!(optimizer.learning_rate > 0.0)) throw InvalidArgument("train config: learning_rate must be positive");
    if (chunk_paths < 1) throw InvalidArgument("train config: chunk_paths must be >= 1");
    if (threads < 1) throw InvalidArgument("train config: threads must be >= 1");
}

CostGradient cost_and_gradient(const ControlProblem& problem, const TimeGrid& grid, const FeedForwardNet& policy,
                               const Matrix& initial_states, const BrownianBatch& noise,
                               const TerminalFn& terminal, std::size_t chunk_paths, int threads) {
    const auto J = static_cast<std::size_t>(initial_states.cols());
    if (J == 0 || noise.paths() != J) throw InvalidArgument("cost_and_gradient: batch size mismatch");
    const auto chunks = chunk_ranges(J, std::max<std::size_t>(chunk_paths, 1));
    std::vector<ChunkResult> results(chunks.size());
    parallel_for(chunks.size(), threads, [&](std::size_t c) {
        const auto [first, count] = chunks[c];
        const Matrix x0 = initial_states.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
        results[c] = chunk_gradient(problem, grid, policy, x0, noise.slice(first, count), terminal, first);
    });
    CostGradient out;
    out.gradient = Vector::Zero(static_cast<Eigen::Index>(policy.params().size()));
    for (const auto& r : results) {
        out.loss += r.cost_sum;
        out.gradient += r.grad_sum;
        out.ops += r.ops;
    }
    out.loss /= static_cast<double>(J);
    out.gradient /= static_cast<double>(J);
    return out;
}

double empirical_cost(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                      const Matrix& initial_states, const BrownianBatch& noise, const TerminalFn& terminal) {
    const TrajectoryBatch batch = rollout(problem, grid, policy, initial_states, noise, terminal);
    return batch.path_costs().mean();
}

TrainedPolicy train_segments(const ControlProblem& problem, std::span<const TrainingSegment> segments,
                             FeedForwardNet initial, const TrainConfig& cfg) {
    cfg.validate();
    check_segments(problem, segments);
    if (initial.input_dim() != problem.state_dim + 1 || initial.output_dim() != problem.control_dim) {
        throw InvalidArgument("training: network shape does not match the problem");
    }

    const auto start = Clock::now();
    TrainedPolicy out;
    out.net = std::move(initial);
    FeedForwardNet& net = out.net;
    const std::size_t q = net.params().size();
    Optimizer optimizer(cfg.optimizer, q);
    std::vector<double> best(net.params().begin(), net.params().end());
    double best_loss = std::numeric_limits<double>::infinity();
    const auto w = static_cast<std::size_t>(problem.noise_dim);

    std::vector<std::size_t> batch(segments.size());
    std::size_t steps_per_epoch = 1;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        batch[s] = cfg.batch_size == 0 ? segments[s].paths : std::min(cfg.batch_size, segments[s].paths);
        steps_per_epoch = std::max(steps_per_epoch, (segments[s].paths + batch[s] - 1) / batch[s]);
    }

    for (int epoch = 0; epoch < cfg.epochs && !out.diverged; ++epoch) {
        const std::uint64_t draw = cfg.fixed_samples ? 0 : static_cast<std::uint64_t>(epoch);
        const std::vector<double> theta_start(net.params().begin(), net.params().end());
        double epoch_loss = 0.0;

        for (std::size_t step = 0; step < steps_per_epoch && !out.diverged; ++step) {
            std::vector<WorkItem> items;
            std::vector<std::size_t> step_paths(segments.size(), 0);
            for (std::size_t s = 0; s < segments.size(); ++s) {
                const std::size_t lo = step * batch[s];
                if (lo >= segments[s].paths) continue;
                const std::size_t hi = std::min(lo + batch[s], segments[s].paths);
                step_paths[s] = hi - lo;
                for (const auto& [first, count] : chunk_ranges(hi - lo, cfg.chunk_paths)) {
                    items.push_back({s, lo + first, count});
                }
            }

            std::vector<ChunkResult> results(items.size());
            try {
                parallel_for(items.size(), cfg.threads, [&](std::size_t k) {
                    const WorkItem& item = items[k];
                    const TrainingSegment& seg = segments[item.segment];
                    const std::uint64_t init_seed = derive_seed(cfg.seed, draw, 2 * item.segment);
                    const std::uint64_t noise_seed = derive_seed(cfg.seed, draw, 2 * item.segment + 1);
                    const Matrix x0 = seg.initial.sample(item.count, init_seed, item.first);
                    const BrownianBatch noise = sample_brownian(static_cast<std::size_t>(seg.grid.n), item.count, w,
                                                                seg.grid.delta, noise_seed, item.first);
                    results[k] = chunk_gradient(problem, seg.grid, net, x0, noise, seg.terminal, item.first);
                });
            } catch (const NonFiniteState&) {
                out.diverged = true;
                break;
            }

            Vector grad = Vector::Zero(static_cast<Eigen::Index>(q));
            for (std::size_t k = 0; k < items.size(); ++k) {
                const std::size_t s = items[k].segment;
                epoch_loss += results[k].cost_sum / static_cast<double>(segments[s].paths);
                grad += results[k].grad_sum / static_cast<double>(step_paths[s]);
                out.ops += results[k].ops;
            }
            if (!grad.allFinite() || !std::isfinite(epoch_loss)) {
                out.diverged = true;
                break;
            }
            optimizer.step(net.params(), std::span<const double>(grad.data(), q));
        }
        if (out.diverged) break;

        out.loss_history.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best = theta_start;
            out.best_epoch = epoch;
        }
    }

    if (out.best_epoch >= 0) net.set_params(best);
    out.seconds = seconds_since(start);
    return out;
}

TrainedPolicy train_policy(const ControlProblem& problem, const TimeGrid& grid, const Distribution& init,
                           const NetArch& arch, std::size_t paths, const TrainConfig& cfg,
                           const TerminalFn& terminal, const FeedForwardNet* warm_start) {
    FeedForwardNet net;
    if (warm_start != nullptr) {
        if (!(warm_start->arch() == arch)) throw InvalidArgument("train_policy: warm start architecture differs");
        net = *warm_start;
    } else {
        net = FeedForwardNet(arch, derive_seed(cfg.seed, 0x6e6574));
    }
    const TrainingSegment segment{grid, init, terminal ? terminal : terminal_cost_of(problem), paths};
    return train_segments(problem, std::span<const TrainingSegment>(&segment, 1), std::move(net), cfg);
}

FeedForwardNet fit_samples(const Matrix& inputs, const Vector& targets, const NetArch& arch, const TrainConfig& cfg,
                           FitReport* report) {
    cfg.validate();
    const Eigen::Index S = inputs.cols();
    if (S == 0 || targets.size() != S) throw InvalidArgument("fit: inputs and targets disagree");
    if (arch.layer_sizes.front() != inputs.rows() || arch.layer_sizes.back() != 1) {
        throw InvalidArgument("fit: architecture does not match (t, x) -> scalar");
    }
    if (!inputs.allFinite() || !targets.allFinite()) throw InvalidArgument("fit: non-finite training data");

    const auto start = Clock::now();
    FeedForwardNet net(arch, derive_seed(cfg.seed, 0x76616c));

    auto standardize = [](const auto& row, double& shift, double& scale) {
        shift = row.mean();
        const double var = (row.array() - shift).square().mean();
        scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    };
    std::vector<double> in_shift(static_cast<std::size_t>(inputs.rows()));
    std::vector<double> in_scale(in_shift.size());
    for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
        double sd = 1.0;
        standardize(inputs.row(r), in_shift[static_cast<std::size_t>(r)], sd);
        in_scale[static_cast<std::size_t>(r)] = 1.0 / sd;
    }
    double out_shift = 0.0;
    double out_scale = 1.0;
    standardize(targets.transpose(), out_shift, out_scale);
    net.set_input_transform(in_shift, in_scale);
    net.set_output_transform({out_shift}, {out_scale});

    const std::size_t q = net.params().size();
    Optimizer optimizer(cfg.optimizer, q);
    const auto total = static_cast<std::size_t>(S);
    const std::size_t batch = cfg.batch_size == 0 ? total : std::min(cfg.batch_size, total);
    std::vector<Eigen::Index> order(total);
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    FitReport local;
    FitReport& rep = report != nullptr ? *report : local;
    rep = FitReport{};
    std::vector<double> best(net.params().begin(), net.params().end());
    double best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (batch < total) {
            std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x66));
            std::shuffle(order.begin(), order.end(), rng);
        }
        const std::vector<double> theta_start(net.params().begin(), net.params().end());
        double epoch_sse = 0.0;
        for (std::size_t lo = 0; lo < total; lo += batch) {
            const std::size_t hi = std::min(lo + batch, total);
            const auto chunks = chunk_ranges(hi - lo, cfg.chunk_paths * 8);
            std::vector<ChunkResult> results(chunks.size());
            parallel_for(chunks.size(), cfg.threads, [&](std::size_t c) {
                const auto [first, count] = chunks[c];
                Matrix x(inputs.rows(), static_cast<Eigen::Index>(count));
                Matrix y(1, static_cast<Eigen::Index>(count));
                for (std::size_t k = 0; k < count; ++k) {
                    const Eigen::Index src = order[lo + first + k];
                    x.col(static_cast<Eigen::Index>(k)) = inputs.col(src);
                    y(0, static_cast<Eigen::Index>(k)) = targets(src);
                }
                Tape tape;
                const Var pred = net.forward(tape.constant(std::move(x)), true);
                const Var loss = sum(square(pred - tape.constant(std::move(y))));
                const Var theta = tape.parameters(net.params(), true);
                const Gradients grads = backward(tape, loss);
                results[c] = ChunkResult{loss.value()(0, 0), grads.wrt(theta), tape.op_count()};
            });
            Vector grad = Vector::Zero(static_cast<Eigen::Index>(q));
            for (const auto& r : results) {
                epoch_sse += r.cost_sum;
                grad += r.grad_sum;
                rep.ops += r.ops;
            }
            grad /= static_cast<double>(hi - lo);
            if (!grad.allFinite()) {
                rep.diverged = true;
                break;
            }
            optimizer.step(net.params(), std::span<const double>(grad.data(), q));
        }
        const double mse = epoch_sse / static_cast<double>(total);
        if (rep.diverged || !std::isfinite(mse)) {
            rep.diverged = true;
            break;
        }
        rep.loss_history.push_back(mse);
        if (mse < best_loss) {
            best_loss = mse;
            best = theta_start;
            rep.best_epoch = epoch;
        }
    }
    if (rep.best_epoch >= 0) net.set_params(best);
    rep.seconds = seconds_since(start);
    return net;
}

FeedForwardNet fit_value(const TrajectoryBatch& trajectories, const NetArch& arch, const TrainConfig& cfg,
                         FitReport* report) {
    if (trajectories.costs_to_go.size() == 0) throw InvalidArgument("fit_value: trajectories carry no costs-to-go");
    const auto nodes = trajectories.states.size();
    const Eigen::Index J = static_cast<Eigen::Index>(trajectories.paths);
    const Eigen::Index d = trajectories.states.front().rows();
    Matrix inputs(d + 1, static_cast<Eigen::Index>(nodes) * J);
    Vector targets(inputs.cols());
    for (std::size_t i = 0; i < nodes; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>(i) * J;
        inputs.block(0, base, 1, J).setConstant(trajectories.times[i]);
        inputs.block(1, base, d, J) = trajectories.states[i];
        targets.segment(base, J) = trajectories.costs_to_go.row(static_cast<Eigen::Index>(i)).transpose();
    }
    return fit_samples(inputs, targets, arch, cfg, report);
}

Evaluation summarize(std::span<const double> costs) {
    Evaluation out;
    out.paths = costs.size();
    if (costs.empty()) return out;
    double total = 0.0;
    for (double c : costs) total += c;
    out.mean = total / static_cast<double>(costs.size());
    if (costs.size() > 1) {
        double ss = 0.0;
        for (double c : costs) ss += (c - out.mean) * (c - out.mean);
        const double var = ss / static_cast<double>(costs.size() - 1);
        out.std_error = std::sqrt(var / static_cast<double>(costs.size()));
    }
    return out;
}

Evaluation evaluate_policy(const ControlProblem& problem, const TimeGrid& grid, const Policy& policy,
                           std::span<const double> x0, std::size_t paths, std::uint64_t seed, int threads) {
    if (paths < 2) throw InvalidArgument("evaluate_policy: needs at least two paths");
    if (static_cast<int>(x0.size()) != problem.state_dim) throw InvalidArgument("evaluate_policy: x0 dimension");
    const auto chunks = chunk_ranges(paths, 2048);
    std::vector<double> costs(paths);
    const TerminalFn terminal = terminal_cost_of(problem);
    const auto w = static_cast<std::size_t>(problem.noise_dim);
    parallel_for(chunks.size(), threads, [&](std::size_t c) {
        const auto [first, count] = chunks[c];
        Matrix start(problem.state_dim, static_cast<Eigen::Index>(count));
        for (int k = 0; k < problem.state_dim; ++k) start.row(k).setConstant(x0[static_cast<std::size_t>(k)]);
        const BrownianBatch noise =
            sample_brownian(static_cast<std::size_t>(grid.n), count, w, grid.delta, seed, first);
        const TrajectoryBatch batch = rollout(problem, grid, policy, start, noise, terminal, nullptr, first);
        const Vector pc = batch.path_costs();
        std::copy(pc.data(), pc.data() + pc.size(), costs.begin() + static_cast<std::ptrdiff_t>(first));
    });
    return summarize(costs);
}

}  // namespace mspgm
