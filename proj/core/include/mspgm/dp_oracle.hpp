#pragma once

#include "mspgm/problem.hpp"

#include <vector>

namespace mspgm {

struct Box {
    double lo = -1.0;
    double hi = 1.0;
};

/// Gauss-Hermite rule for a standard normal: E[phi(Z)] ~ sum_k weights[k] phi(nodes[k]).
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction; exact for polynomials of degree < 2 * count.
Quadrature gauss_hermite(int count);

/// Backward induction of the discrete problem on a uniform state lattice:
///   V(t_n, x) = g(x),
///   V(t_i, x) = min_{u in control lattice} L(t_i, x, u) delta + E[V(t_{i+1}, x + mu delta + sigma dW)].
/// The expectation uses Gauss-Hermite quadrature; V between lattice points is interpolated
/// linearly (and extrapolated linearly outside the box). The last step uses g directly.
struct DpSolution {
    TimeGrid grid;
    std::vector<double> states;
    std::vector<double> controls;
    Matrix value;   // (n + 1) x states
    Matrix policy;  // n x states

    /// Linear interpolation of V(t_i, x); throws InvalidArgument outside the state box.
    double value_at(int step, double x) const;
    double control_at(int step, double x) const;
};

/// Scalar problems only (d = m = w = 1). Resolutions are lattice point counts, at most 201.
/// The state box must be at least 12 sigma sqrt(T) wide so that it absorbs 6 sigma sqrt(T)
/// excursions; sigma is probed at the box centre.
DpSolution dp_oracle(const ControlProblem& problem, const TimeGrid& grid, Box state_box, Box control_box,
                     int state_resolution, int control_resolution, int quadrature_nodes = 21);

}  // namespace mspgm
