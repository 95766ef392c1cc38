#pragma once

#include <span>
#include <vector>

namespace mspgm {

struct OptimizerConfig {
    enum class Kind { Sgd, Adam };
    Kind kind = Kind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Stateful first-order update rule. One instance per parameter vector.
class Optimizer {
public:
    Optimizer(OptimizerConfig config, std::size_t size);

    void step(std::span<double> params, std::span<const double> grad);
    const OptimizerConfig& config() const noexcept { return config_; }

private:
    OptimizerConfig config_;
    std::vector<double> m_;
    std::vector<double> v_;
    long steps_ = 0;
};

}  // namespace mspgm
