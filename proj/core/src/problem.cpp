#include "mspgm/problem.hpp"

#include "mspgm/error.hpp"
#include "mspgm/random.hpp"

#include <cmath>
#include <random>

namespace mspgm {

Distribution Distribution::uniform(std::vector<double> lo, std::vector<double> hi) {
    if (lo.empty() || lo.size() != hi.size()) throw InvalidArgument("uniform: lo/hi dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < hi[i])) throw InvalidArgument("uniform: requires lo < hi in every coordinate");
    }
    Distribution d;
    d.kind_ = Kind::Uniform;
    d.dim_ = static_cast<int>(lo.size());
    d.lo_ = std::move(lo);
    d.hi_ = std::move(hi);
    return d;
}

Distribution Distribution::point(std::vector<double> x) {
    if (x.empty()) throw InvalidArgument("point: empty state");
    Distribution d;
    d.kind_ = Kind::Point;
    d.dim_ = static_cast<int>(x.size());
    d.lo_ = x;
    d.hi_ = std::move(x);
    return d;
}

Distribution Distribution::empirical(Matrix samples) {
    if (samples.rows() == 0 || samples.cols() == 0) throw InvalidArgument("empirical: empty sample set");
    Distribution d;
    d.kind_ = Kind::Empirical;
    d.dim_ = static_cast<int>(samples.rows());
    d.samples_ = std::move(samples);
    return d;
}

Matrix Distribution::sample(std::size_t count, std::uint64_t seed, std::size_t first) const {
    Matrix out(dim_, static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        switch (kind_) {
            case Kind::Point:
                for (int i = 0; i < dim_; ++i) out(i, col) = lo_[i];
                break;
            case Kind::Uniform: {
                auto rng = path_stream(seed, first + j);
                for (int i = 0; i < dim_; ++i) {
                    std::uniform_real_distribution<double> u(lo_[i], hi_[i]);
                    out(i, col) = u(rng);
                }
                break;
            }
            case Kind::Empirical: {
                auto rng = path_stream(seed, first + j);
                std::uniform_int_distribution<Eigen::Index> pick(0, samples_.cols() - 1);
                out.col(col) = samples_.col(pick(rng));
                break;
            }
        }
    }
    return out;
}

void ControlProblem::validate(std::uint64_t seed, int probes) const {
    if (!(horizon > 0.0)) throw InvalidArgument("control problem: horizon must be positive");
    if (state_dim < 1 || control_dim < 1 || noise_dim < 1) {
        throw InvalidArgument("control problem: dimensions must be >= 1");
    }
    if (!drift || !diffusion || !running_cost || !terminal_cost) {
        throw InvalidArgument("control problem: missing callable");
    }
    if (initial.dim() != state_dim) throw InvalidArgument("control problem: initial distribution dimension");

    auto rng = path_stream(seed, 0);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::uniform_real_distribution<double> time(0.0, horizon);
    Tape tape;
    auto finite = [](Var v) { return v.value().allFinite(); };
    for (int k = 0; k < probes; ++k) {
        std::vector<Var> x;
        std::vector<Var> u;
        for (int i = 0; i < state_dim; ++i) x.push_back(tape.constant(normal(rng), 1));
        for (int i = 0; i < control_dim; ++i) u.push_back(tape.constant(normal(rng), 1));
        const double t = time(rng);
        const auto mu = drift(t, x, u);
        const auto sig = diffusion(t, x, u);
        if (mu.size() != static_cast<std::size_t>(state_dim)) throw InvalidArgument("drift: wrong output dimension");
        if (sig.size() != static_cast<std::size_t>(state_dim * noise_dim)) {
            throw InvalidArgument("diffusion: wrong output dimension");
        }
        for (const Var& v : mu) {
            if (!finite(v)) throw InvalidArgument("drift returned a non-finite value");
        }
        for (const Var& v : sig) {
            if (!finite(v)) throw InvalidArgument("diffusion returned a non-finite value");
        }
        if (!finite(running_cost(t, x, u))) throw InvalidArgument("running cost returned a non-finite value");
        if (!finite(terminal_cost(x))) throw InvalidArgument("terminal cost returned a non-finite value");
        tape.reset();
    }
}

TimeGrid TimeGrid::slice(int first, int steps) const {
    if (first < 0 || steps < 1 || first + steps > n) throw InvalidArgument("grid slice out of range");
    TimeGrid g;
    g.n = steps;
    g.delta = delta;
    g.nodes.assign(nodes.begin() + first, nodes.begin() + first + steps + 1);
    return g;
}

TimeGrid make_grid(double horizon, int n) {
    if (n < 1) throw InvalidArgument("make_grid: n must be >= 1");
    if (!(horizon > 0.0)) throw InvalidArgument("make_grid: horizon must be positive");
    TimeGrid g;
    g.n = n;
    g.delta = horizon / n;
    g.nodes.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) g.nodes[i] = horizon * i / n;
    g.nodes.front() = 0.0;
    g.nodes.back() = horizon;
    return g;
}

void LqParams::validate() const {
    if (!(A > 0.0)) throw InvalidArgument("LQ: control-cost coefficient A must be positive");
    if (!(sigma >= 0.0)) throw InvalidArgument("LQ: sigma must be non-negative");
    if (!(horizon > 0.0)) throw InvalidArgument("LQ: horizon must be positive");
    for (double v : {a, b, A, B, alpha, beta, p, q, sigma, horizon}) {
        if (!std::isfinite(v)) throw InvalidArgument("LQ: coefficients must be finite");
    }
}

LqParams lq_preset(const std::string& name) {
    LqParams p;
    p.a = 10.0;
    p.b = 1.0;
    p.A = 5.0;
    p.B = 0.5;
    p.alpha = 2.0;
    p.beta = 0.5;
    p.p = 0.5;
    p.q = 1.0;
    p.sigma = 1.0;
    p.horizon = 1.0;
    if (name == "two_fold") return p;
    if (name == "three_fold") {
        p.a = 100.0;
        p.horizon = 1.25;
        return p;
    }
    throw InvalidArgument("unknown LQ preset '" + name + "'");
}

std::vector<std::string> lq_preset_names() { return {"two_fold", "three_fold"}; }

ControlProblem make_lq_problem(const LqParams& params, Distribution initial) {
    params.validate();
    if (initial.dim() != 1) throw InvalidArgument("LQ problem is one-dimensional");
    const LqParams c = params;
    ControlProblem prob;
    prob.horizon = c.horizon;
    prob.state_dim = prob.control_dim = prob.noise_dim = 1;
    prob.initial = std::move(initial);
    prob.drift = [c](double, std::span<const Var> x, std::span<const Var> u) {
        return std::vector<Var>{c.p * x[0] + c.q * u[0]};
    };
    prob.diffusion = [c](double, std::span<const Var> x, std::span<const Var>) {
        return std::vector<Var>{x[0].tape()->constant(c.sigma, x[0].cols())};
    };
    prob.running_cost = [c](double, std::span<const Var> x, std::span<const Var> u) {
        return c.a * square(x[0]) + c.b * x[0] + c.A * square(u[0]) + c.B * u[0];
    };
    prob.terminal_cost = [c](std::span<const Var> x) { return c.alpha * square(x[0]) + c.beta * x[0]; };
    prob.validate();
    return prob;
}

}  // namespace mspgm
