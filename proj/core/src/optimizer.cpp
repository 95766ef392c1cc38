#include "mspgm/optimizer.hpp"

#include "mspgm/error.hpp"

#include <cmath>

namespace mspgm {

Optimizer::Optimizer(OptimizerConfig config, std::size_t size) : config_(config) {
    if (!(config_.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
    if (config_.kind == OptimizerConfig::Kind::Adam) {
        m_.assign(size, 0.0);
        v_.assign(size, 0.0);
    }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != grad.size()) throw InvalidArgument("optimizer: gradient size mismatch");
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerConfig::Kind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
        return;
    }
    if (m_.size() != params.size()) throw InvalidArgument("optimizer: parameter size changed");
    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
    }
}

}  // namespace mspgm
