#pragma once

// Reverse-mode differentiation over batched values.
//
// Every node holds a (rows x cols) matrix. Problem-level scalars (one state coordinate,
// one control, a running cost) are 1 x J rows where J is the number of simulated paths,
// so a whole batch of trajectories is recorded with one node per primitive operation.
// The op counter counts scalar primitive operations, which makes it exactly
// proportional to the batch width.

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

namespace mspgm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as the tape is not reset.
class Var {
public:
    Var() = default;

    Tape* tape() const noexcept { return tape_; }
    std::uint32_t index() const noexcept { return index_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

    Tape* tape_ = nullptr;
    std::uint32_t index_ = 0;
};

enum class OpKind : std::uint8_t {
    Constant,
    Variable,
    Parameters,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    AddScalar,
    MulScalar,
    Square,
    Tanh,
    Sigmoid,
    Relu,
    Exp,
    Log,
    Concat,
    Row,
    Affine,
    Sum,
};

class Tape {
public:
    static constexpr std::uint32_t kNone = 0xffffffffu;

    struct Node {
        OpKind kind = OpKind::Constant;
        bool needs_grad = false;
        std::uint32_t lhs = kNone;
        std::uint32_t rhs = kNone;
        double scalar = 0.0;
        // Affine: offset of W inside the parameter block, and W's shape.
        std::size_t offset = 0;
        Eigen::Index fan_out = 0;
        Eigen::Index fan_in = 0;
        Matrix value;
        // Local derivative of elementwise unary ops (same shape as value).
        Matrix partial;
        std::vector<std::uint32_t> inputs;  // Concat only
        std::span<const double> params;     // Parameters only (non-owning)
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf with no gradient.
    Var constant(Matrix value);
    /// 1 x cols row filled with `value`.
    Var constant(double value, Eigen::Index cols);
    /// Differentiable leaf.
    Var variable(Matrix value);
    /// Leaf viewing an external flat parameter vector (not copied; must outlive the tape's
    /// use). Registering the same storage twice returns the same node. Frozen blocks
    /// (`trainable == false`) receive no gradient.
    Var parameters(std::span<const double> values, bool trainable = true);

    /// W x + b where W (fan_out x fan_in, row-major) and b (fan_out) are read from `params`
    /// starting at `offset`.
    Var affine(Var input, Var params, std::size_t offset, Eigen::Index fan_out);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::uint64_t op_count() const noexcept { return op_count_; }
    void reset();

    const Node& node(std::uint32_t index) const { return nodes_.at(index); }

    // Used by the free-function operators below.
    Var push(Node node, std::uint64_t ops);

private:
    std::deque<Node> nodes_;
    std::vector<std::uint32_t> parameter_nodes_;
    std::uint64_t op_count_ = 0;
};

/// Number of primitive operations recorded on the tape.
inline std::uint64_t op_count(const Tape& tape) noexcept { return tape.op_count(); }

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator/(Var a, double c);

Var square(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);

/// Sum of all entries -> 1 x 1.
Var sum(Var a);
/// Stack 1-or-more nodes with equal column counts vertically.
Var concat_rows(std::span<const Var> parts);
/// Row r of a node, as a 1 x cols node.
Var row(Var a, Eigen::Index r);

/// Adjoints of every leaf reachable from the output of one reverse sweep.
class Gradients {
public:
    /// d(output)/d(leaf); zero-shaped like the leaf when the leaf does not influence the
    /// output. For Parameters leaves this is a (size x 1) column.
    Matrix wrt(Var leaf) const;

    const std::vector<Matrix>& adjoints() const noexcept { return adjoints_; }

private:
    friend Gradients backward(const Tape& tape, Var output);
    const Tape* tape_ = nullptr;
    std::vector<Matrix> adjoints_;
};

/// Reverse sweep from a 1 x 1 output node. The tape is not modified.
Gradients backward(const Tape& tape, Var output);

}  // namespace mspgm
