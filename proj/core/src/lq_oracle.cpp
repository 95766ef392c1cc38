#include "mspgm/lq_oracle.hpp"

#include "mspgm/error.hpp"

#include <algorithm>
#include <cmath>

namespace mspgm {

namespace {

constexpr double kBlowUp = 1e12;

RiccatiPoint axpy(const RiccatiPoint& y, double s, const RiccatiPoint& d) {
    return {y.f + s * d.f, y.h + s * d.h, y.k + s * d.k};
}

double hermite(double y0, double y1, double d0, double d1, double u, double width) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * width * d0 + (-2 * u3 + 3 * u2) * y1 +
           (u3 - u2) * width * d1;
}

}  // namespace

LqSolution::LqSolution(LqParams params, std::vector<double> mesh, std::vector<RiccatiPoint> values)
    : params_(params), mesh_(std::move(mesh)), values_(std::move(values)) {
    if (mesh_.size() < 2 || mesh_.size() != values_.size()) throw InvalidArgument("LqSolution: bad mesh");
}

RiccatiPoint riccati_rhs(const LqParams& P, const RiccatiPoint& y) {
    const double coupling = P.B + P.q * y.h;
    return {-(P.a + 2 * P.p * y.f - P.q * P.q / P.A * y.f * y.f),
            -(P.b + P.p * y.h - P.q * y.f * coupling / P.A),
            -(P.sigma * P.sigma * y.f - coupling * coupling / (4 * P.A))};
}

RiccatiPoint LqSolution::derivative(const RiccatiPoint& y) const { return riccati_rhs(params_, y); }

RiccatiPoint LqSolution::at(double t) const {
    const double T = mesh_.back();
    const double tol = 1e-12 * std::max(1.0, T);
    if (!(t >= -tol && t <= T + tol)) throw InvalidArgument("LqSolution: time outside [0, T]");
    t = std::clamp(t, 0.0, T);
    const std::size_t m = mesh_.size() - 1;
    const double width = T / static_cast<double>(m);
    auto i = static_cast<std::size_t>(t / width);
    if (i >= m) i = m - 1;
    const double u = (t - mesh_[i]) / width;
    if (u == 0.0 || t == mesh_[i]) return values_[i];
    if (t == mesh_[i + 1]) return values_[i + 1];
    const RiccatiPoint& y0 = values_[i];
    const RiccatiPoint& y1 = values_[i + 1];
    const RiccatiPoint d0 = derivative(y0);
    const RiccatiPoint d1 = derivative(y1);
    return {hermite(y0.f, y1.f, d0.f, d1.f, u, width), hermite(y0.h, y1.h, d0.h, d1.h, u, width),
            hermite(y0.k, y1.k, d0.k, d1.k, u, width)};
}

LqSolution solve_riccati(const LqParams& params, int mesh_size) {
    params.validate();
    if (mesh_size < 100) throw InvalidArgument("solve_riccati: mesh_size must be >= 100");
    const auto m = static_cast<std::size_t>(mesh_size);
    const double T = params.horizon;
    const double step = T / static_cast<double>(m);

    std::vector<double> mesh(m + 1);
    for (std::size_t i = 0; i <= m; ++i) mesh[i] = T * static_cast<double>(i) / static_cast<double>(m);
    mesh.back() = T;

    std::vector<RiccatiPoint> values(m + 1);
    values[m] = {params.alpha, params.beta, 0.0};
    auto rhs = [&params](const RiccatiPoint& y) { return riccati_rhs(params, y); };
    for (std::size_t i = m; i > 0; --i) {
        const RiccatiPoint& y = values[i];
        const double hstep = -step;
        const RiccatiPoint k1 = rhs(y);
        const RiccatiPoint k2 = rhs(axpy(y, hstep / 2, k1));
        const RiccatiPoint k3 = rhs(axpy(y, hstep / 2, k2));
        const RiccatiPoint k4 = rhs(axpy(y, hstep, k3));
        RiccatiPoint next{y.f + hstep / 6 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f),
                          y.h + hstep / 6 * (k1.h + 2 * k2.h + 2 * k3.h + k4.h),
                          y.k + hstep / 6 * (k1.k + 2 * k2.k + 2 * k3.k + k4.k)};
        if (!std::isfinite(next.f) || !std::isfinite(next.h) || !std::isfinite(next.k) ||
            std::abs(next.f) > kBlowUp || std::abs(next.h) > kBlowUp || std::abs(next.k) > kBlowUp) {
            throw RiccatiBlowUp(mesh[i - 1]);
        }
        values[i - 1] = next;
    }
    return LqSolution(params, std::move(mesh), std::move(values));
}

double lq_optimal_control(const LqSolution& sol, double t, double x) {
    const LqParams& P = sol.params();
    const RiccatiPoint c = sol.at(t);
    return -(P.B + P.q * (2 * c.f * x + c.h)) / (2 * P.A);
}

double lq_value(const LqSolution& sol, double t, double x) {
    const RiccatiPoint c = sol.at(t);
    return c.f * x * x + c.h * x + c.k;
}

RiccatiPoint riccati_residual(const LqSolution& sol) {
    const auto& v = sol.values();
    const auto& mesh = sol.mesh();
    const double width = mesh[1] - mesh[0];
    RiccatiPoint worst;
    for (std::size_t i = 2; i + 2 < v.size(); ++i) {
        auto stencil = [&](auto get) {
            return (-get(v[i + 2]) + 8 * get(v[i + 1]) - 8 * get(v[i - 1]) + get(v[i - 2])) / (12 * width);
        };
        const RiccatiPoint rhs = sol.derivative(v[i]);
        worst.f = std::max(worst.f, std::abs(stencil([](const RiccatiPoint& p) { return p.f; }) - rhs.f));
        worst.h = std::max(worst.h, std::abs(stencil([](const RiccatiPoint& p) { return p.h; }) - rhs.h));
        worst.k = std::max(worst.k, std::abs(stencil([](const RiccatiPoint& p) { return p.k; }) - rhs.k));
    }
    return worst;
}

std::vector<Var> LqPolicy::act(double t, std::span<const Var> x) const {
    if (x.size() != 1) throw InvalidArgument("LqPolicy: scalar state expected");
    const LqParams& P = sol_->params();
    const RiccatiPoint c = sol_->at(t);
    const double gain = -P.q * c.f / P.A;
    const double offset = -(P.B + P.q * c.h) / (2 * P.A);
    return {x[0] * gain + offset};
}

double lq_discrete_cost(const LqSolution& sol, int n, double x0) {
    if (n < 1) throw InvalidArgument("lq_discrete_cost: n must be >= 1");
    const LqParams& P = sol.params();
    const double delta = P.horizon / n;
    double mean = x0;
    double second = x0 * x0;
    double cost = 0.0;
    for (int i = 0; i < n; ++i) {
        const RiccatiPoint c = sol.at(P.horizon * i / n);
        const double gain = -P.q * c.f / P.A;
        const double offset = -(P.B + P.q * c.h) / (2 * P.A);
        const double eu = gain * mean + offset;
        const double eu2 = gain * gain * second + 2 * gain * offset * mean + offset * offset;
        cost += (P.a * second + P.b * mean + P.A * eu2 + P.B * eu) * delta;
        const double growth = 1 + (P.p + P.q * gain) * delta;
        const double shift = P.q * offset * delta;
        const double next_mean = growth * mean + shift;
        second = growth * growth * second + 2 * growth * shift * mean + shift * shift + P.sigma * P.sigma * delta;
        mean = next_mean;
    }
    return cost + P.alpha * second + P.beta * mean;
}

}  // namespace mspgm
