#include "mspgm/dp_oracle.hpp"

#include "mspgm/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mspgm {

Quadrature gauss_hermite(int count) {
    if (count < 1) throw InvalidArgument("gauss_hermite: count must be >= 1");
    // Jacobi matrix of the probabilists' Hermite polynomials.
    Matrix jacobi = Matrix::Zero(count, count);
    for (int k = 1; k < count; ++k) {
        jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
        jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
    Quadrature q;
    for (int k = 0; k < count; ++k) {
        q.nodes.push_back(eig.eigenvalues()(k));
        const double v = eig.eigenvectors()(0, k);
        q.weights.push_back(v * v);
    }
    return q;
}

namespace {

Eigen::ArrayXd interpolate(const std::vector<double>& xs, const Eigen::ArrayXd& values, const Eigen::ArrayXd& at) {
    const auto S = static_cast<Eigen::Index>(xs.size());
    const double lo = xs.front();
    const double width = (xs.back() - xs.front()) / static_cast<double>(S - 1);
    Eigen::ArrayXd out(at.size());
    for (Eigen::Index j = 0; j < at.size(); ++j) {
        const double pos = (at(j) - lo) / width;
        auto i = static_cast<Eigen::Index>(std::floor(pos));
        i = std::clamp<Eigen::Index>(i, 0, S - 2);
        const double u = pos - static_cast<double>(i);
        out(j) = (1 - u) * values(i) + u * values(i + 1);
    }
    return out;
}

Eigen::RowVectorXd widen(const Matrix& v, Eigen::Index cols) {
    if (v.cols() == cols) return v.row(0);
    return Eigen::RowVectorXd::Constant(cols, v(0, 0));
}

}  // namespace

double DpSolution::value_at(int step, double x) const {
    if (step < 0 || step > grid.n) throw InvalidArgument("dp: step out of range");
    const double tol = 1e-12 * (1.0 + std::abs(states.back()));
    if (x < states.front() - tol || x > states.back() + tol) throw InvalidArgument("dp: state outside the box");
    const Eigen::ArrayXd v = value.row(step).transpose();
    return interpolate(states, v, Eigen::ArrayXd::Constant(1, x))(0);
}

double DpSolution::control_at(int step, double x) const {
    if (step < 0 || step >= grid.n) throw InvalidArgument("dp: step out of range");
    const Eigen::ArrayXd v = policy.row(step).transpose();
    return interpolate(states, v, Eigen::ArrayXd::Constant(1, x))(0);
}

DpSolution dp_oracle(const ControlProblem& problem, const TimeGrid& grid, Box state_box, Box control_box,
                     int state_resolution, int control_resolution, int quadrature_nodes) {
    if (problem.state_dim != 1 || problem.control_dim != 1 || problem.noise_dim != 1) {
        throw InvalidArgument("dp_oracle: scalar problems only");
    }
    if (!(state_box.lo < state_box.hi) || !(control_box.lo <= control_box.hi)) {
        throw InvalidArgument("dp_oracle: empty box");
    }
    if (state_resolution < 2 || state_resolution > 201 || control_resolution < 1 || control_resolution > 201) {
        throw InvalidArgument("dp_oracle: resolution must lie in [2, 201] (states) and [1, 201] (controls)");
    }
    if (quadrature_nodes < 21) throw InvalidArgument("dp_oracle: at least 21 quadrature nodes required");

    const auto S = static_cast<Eigen::Index>(state_resolution);
    const auto C = static_cast<Eigen::Index>(control_resolution);
    DpSolution out;
    out.grid = grid;
    for (Eigen::Index s = 0; s < S; ++s) {
        out.states.push_back(state_box.lo + (state_box.hi - state_box.lo) * static_cast<double>(s) /
                                                static_cast<double>(S - 1));
    }
    for (Eigen::Index c = 0; c < C; ++c) {
        out.controls.push_back(C == 1 ? control_box.lo
                                      : control_box.lo + (control_box.hi - control_box.lo) * static_cast<double>(c) /
                                                             static_cast<double>(C - 1));
    }

    {
        Tape probe;
        const Var x = probe.constant(0.5 * (state_box.lo + state_box.hi), 1);
        const Var u = probe.constant(0.5 * (control_box.lo + control_box.hi), 1);
        const double sigma = std::abs(problem.diffusion(0.0, std::span<const Var>(&x, 1), std::span<const Var>(&u, 1))
                                          .front()
                                          .value()(0, 0));
        const double reach = 6.0 * sigma * std::sqrt(grid.end() - grid.start());
        if (state_box.hi - state_box.lo < 2.0 * reach) {
            throw InvalidArgument("dp_oracle: state box cannot absorb 6 sigma sqrt(T) excursions");
        }
    }

    const Quadrature quad = gauss_hermite(quadrature_nodes);
    const int n = grid.n;
    out.value.resize(n + 1, S);
    out.policy.resize(n, S);

    // Every (state, control) pair is one column of a batched tape evaluation.
    Matrix xs(1, S * C);
    Matrix us(1, S * C);
    for (Eigen::Index s = 0; s < S; ++s) {
        for (Eigen::Index c = 0; c < C; ++c) {
            xs(0, s * C + c) = out.states[static_cast<std::size_t>(s)];
            us(0, s * C + c) = out.controls[static_cast<std::size_t>(c)];
        }
    }

    {
        Tape tape;
        Matrix grid_states(1, S);
        for (Eigen::Index s = 0; s < S; ++s) grid_states(0, s) = out.states[static_cast<std::size_t>(s)];
        const Var xv = tape.constant(grid_states);
        out.value.row(n) = widen(problem.terminal_cost(std::span<const Var>(&xv, 1)).value(), S);
    }

    for (int i = n - 1; i >= 0; --i) {
        const double t = grid.nodes[static_cast<std::size_t>(i)];
        const double delta = grid.nodes[static_cast<std::size_t>(i) + 1] - t;
        Tape tape;
        const Var x = tape.constant(xs);
        const Var u = tape.constant(us);
        const std::span<const Var> xspan(&x, 1);
        const std::span<const Var> uspan(&u, 1);
        const Eigen::ArrayXd drift = widen(problem.drift(t, xspan, uspan).front().value(), S * C).transpose();
        const Eigen::ArrayXd sigma = widen(problem.diffusion(t, xspan, uspan).front().value(), S * C).transpose();
        const Eigen::ArrayXd running =
            widen(problem.running_cost(t, xspan, uspan).value(), S * C).transpose() * delta;
        const Eigen::ArrayXd mean = xs.row(0).transpose().array() + drift * delta;
        const Eigen::ArrayXd spread = sigma * std::sqrt(delta);

        Eigen::ArrayXd expected = Eigen::ArrayXd::Zero(S * C);
        const Eigen::ArrayXd next_values = out.value.row(i + 1).transpose();
        for (std::size_t k = 0; k < quad.nodes.size(); ++k) {
            const Eigen::ArrayXd next = mean + spread * quad.nodes[k];
            Eigen::ArrayXd v;
            if (i == n - 1) {
                Tape terminal;
                const Var xn = terminal.constant(Matrix(next.transpose()));
                v = widen(problem.terminal_cost(std::span<const Var>(&xn, 1)).value(), S * C).transpose();
            } else {
                v = interpolate(out.states, next_values, next);
            }
            expected += quad.weights[k] * v;
        }
        const Eigen::ArrayXd q = running + expected;
        for (Eigen::Index s = 0; s < S; ++s) {
            Eigen::Index best = 0;
            double best_value = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < C; ++c) {
                if (q(s * C + c) < best_value) {
                    best_value = q(s * C + c);
                    best = c;
                }
            }
            out.value(i, s) = best_value;
            out.policy(i, s) = out.controls[static_cast<std::size_t>(best)];
        }
    }
    return out;
}

}  // namespace mspgm
