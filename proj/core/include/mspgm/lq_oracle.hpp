#pragma once

#include "mspgm/problem.hpp"
#include "mspgm/sde.hpp"

#include <vector>

namespace mspgm {

struct RiccatiPoint {
    double f = 0.0;
    double h = 0.0;
    double k = 0.0;
};

/// Right-hand side (f', h', k') of the coefficient ODE system below.
RiccatiPoint riccati_rhs(const LqParams& params, const RiccatiPoint& y);

/// V(t, x) = f(t) x^2 + h(t) x + k(t) for the scalar LQ problem, with
///   f' + a + 2 p f - (q^2 / A) f^2 = 0,                 f(T) = alpha
///   h' + b + p h - (q f / A) (B + q h) = 0,               h(T) = beta
///   k' + sigma^2 f - (B + q h)^2 / (4 A) = 0,             k(T) = 0
/// tabulated on a uniform mesh and interpolated by cubic Hermite polynomials using the
/// exact derivatives at the mesh nodes.
class LqSolution {
public:
    LqSolution(LqParams params, std::vector<double> mesh, std::vector<RiccatiPoint> values);

    const LqParams& params() const noexcept { return params_; }
    const std::vector<double>& mesh() const noexcept { return mesh_; }
    const std::vector<RiccatiPoint>& values() const noexcept { return values_; }

    /// Interpolated coefficients; throws InvalidArgument for t outside [0, T].
    RiccatiPoint at(double t) const;
    /// Time derivatives given by the ODE right-hand side at the point.
    RiccatiPoint derivative(const RiccatiPoint& y) const;

private:
    LqParams params_;
    std::vector<double> mesh_;
    std::vector<RiccatiPoint> values_;
};

/// Classical fourth-order Runge-Kutta, backward from T with `mesh_size` uniform steps.
/// Throws RiccatiBlowUp when the solution leaves every bounded set before t = 0.
LqSolution solve_riccati(const LqParams& params, int mesh_size = 1000);

double lq_optimal_control(const LqSolution& sol, double t, double x);
double lq_value(const LqSolution& sol, double t, double x);

/// Largest absolute ODE residual at interior mesh nodes, derivatives taken by the fourth-order
/// central difference stencil on the tabulated values.
RiccatiPoint riccati_residual(const LqSolution& sol);

/// Closed-form feedback u = -(B + q (2 f(t) x + h(t))) / (2 A) as a Policy.
class LqPolicy final : public Policy {
public:
    explicit LqPolicy(const LqSolution& sol) : sol_(&sol) {}
    int control_dim() const override { return 1; }
    std::vector<Var> act(double t, std::span<const Var> x) const override;

private:
    const LqSolution* sol_;
};

/// Exact expected cost of the Euler-Maruyama scheme on `n` uniform steps from x0 when the
/// closed-form feedback is applied at the grid nodes (first and second moments are
/// propagated in closed form; no sampling).
double lq_discrete_cost(const LqSolution& sol, int n, double x0);

}  // namespace mspgm
