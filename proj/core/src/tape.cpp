#include "mspgm/tape.hpp"

#include "mspgm/error.hpp"

#include <cmath>
#include <string>

namespace mspgm {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tape& tape_of(Var a) {
    if (!a.valid()) throw InvalidArgument("operation on an unbound Var");
    return *a.tape();
}

Tape& common_tape(Var a, Var b) {
    Tape& t = tape_of(a);
    if (b.tape() != &t) throw InvalidArgument("operands live on different tapes");
    return t;
}

std::uint64_t elements(const Matrix& m) { return static_cast<std::uint64_t>(m.size()); }

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Result shape of an elementwise binary op; a 1x1 operand broadcasts.
void check_broadcast(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return;
    if (is_scalar(a) || is_scalar(b)) return;
    throw InvalidArgument(std::string("shape mismatch in ") + op + ": " + std::to_string(a.rows()) +
                          "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}

Matrix broadcast(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    if (m.rows() == rows && m.cols() == cols) return m;
    return Matrix::Constant(rows, cols, m(0, 0));
}

Var binary(OpKind kind, Var a, Var b) {
    Tape& t = common_tape(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    const char* names[] = {"+", "-", "*", "/"};
    check_broadcast(x, y, names[static_cast<int>(kind) - static_cast<int>(OpKind::Add)]);
    const Eigen::Index rows = std::max(x.rows(), y.rows());
    const Eigen::Index cols = std::max(x.cols(), y.cols());
    const Matrix xb = broadcast(x, rows, cols);
    const Matrix yb = broadcast(y, rows, cols);
    Tape::Node n;
    n.kind = kind;
    n.lhs = a.index();
    n.rhs = b.index();
    n.needs_grad = t.node(a.index()).needs_grad || t.node(b.index()).needs_grad;
    switch (kind) {
        case OpKind::Add: n.value = xb + yb; break;
        case OpKind::Sub: n.value = xb - yb; break;
        case OpKind::Mul: n.value = xb.cwiseProduct(yb); break;
        case OpKind::Div: n.value = xb.cwiseQuotient(yb); break;
        default: break;
    }
    const std::uint64_t ops = elements(n.value);
    return t.push(std::move(n), ops);
}

template <class F, class D>
Var unary(OpKind kind, Var a, F value_fn, D partial_fn) {
    Tape& t = tape_of(a);
    Tape::Node n;
    n.kind = kind;
    n.lhs = a.index();
    n.needs_grad = t.node(a.index()).needs_grad;
    const Matrix& x = a.value();
    n.value = x.unaryExpr(value_fn);
    if (n.needs_grad) n.partial = partial_fn(x, n.value);
    const std::uint64_t ops = elements(n.value);
    return t.push(std::move(n), ops);
}

Var scalar_op(OpKind kind, Var a, double c) {
    Tape& t = tape_of(a);
    Tape::Node n;
    n.kind = kind;
    n.lhs = a.index();
    n.scalar = c;
    n.needs_grad = t.node(a.index()).needs_grad;
    n.value = kind == OpKind::AddScalar ? Matrix(a.value().array() + c) : Matrix(a.value() * c);
    const std::uint64_t ops = elements(n.value);
    return t.push(std::move(n), ops);
}

// Adds `g` (shaped like the op result) into the adjoint of a parent with shape `shape`.
void accumulate(Matrix& adj, const Matrix& shape, const Matrix& g) {
    if (adj.size() == 0) adj = Matrix::Zero(shape.rows(), shape.cols());
    if (g.rows() == adj.rows() && g.cols() == adj.cols()) {
        adj += g;
    } else {
        adj(0, 0) += g.sum();  // parent was broadcast from 1x1
    }
}

}  // namespace

const Matrix& Var::value() const {
    if (!valid()) throw InvalidArgument("value() of an unbound Var");
    return tape_->node(index_).value;
}

Var Tape::push(Node node, std::uint64_t ops) {
    nodes_.push_back(std::move(node));
    op_count_ += ops;
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
    Node n;
    n.kind = OpKind::Constant;
    n.value = std::move(value);
    return push(std::move(n), 0);
}

Var Tape::constant(double value, Eigen::Index cols) {
    return constant(Matrix::Constant(1, cols, value));
}

Var Tape::variable(Matrix value) {
    Node n;
    n.kind = OpKind::Variable;
    n.needs_grad = true;
    n.value = std::move(value);
    return push(std::move(n), 0);
}

Var Tape::parameters(std::span<const double> values, bool trainable) {
    for (std::uint32_t i : parameter_nodes_) {
        const Node& n = nodes_[i];
        if (n.kind == OpKind::Parameters && n.params.data() == values.data() &&
            n.params.size() == values.size() && n.needs_grad == trainable) {
            return Var(this, i);
        }
    }
    Node n;
    n.kind = OpKind::Parameters;
    n.needs_grad = trainable;
    n.params = values;
    Var v = push(std::move(n), 0);
    parameter_nodes_.push_back(v.index());
    return v;
}

Var Tape::affine(Var input, Var params, std::size_t offset, Eigen::Index fan_out) {
    Tape& t = common_tape(input, params);
    if (&t != this) throw InvalidArgument("affine: operands live on another tape");
    const Node& p = node(params.index());
    if (p.kind != OpKind::Parameters) throw InvalidArgument("affine: second operand is not a parameter block");
    const Matrix& x = input.value();
    const Eigen::Index fan_in = x.rows();
    const std::size_t needed = offset + static_cast<std::size_t>(fan_out * (fan_in + 1));
    if (needed > p.params.size()) throw InvalidArgument("affine: parameter block too small");

    Eigen::Map<const RowMajorMatrix> w(p.params.data() + offset, fan_out, fan_in);
    Eigen::Map<const Vector> b(p.params.data() + offset + fan_out * fan_in, fan_out);

    Node n;
    n.kind = OpKind::Affine;
    n.lhs = input.index();
    n.rhs = params.index();
    n.offset = offset;
    n.fan_out = fan_out;
    n.fan_in = fan_in;
    n.needs_grad = node(input.index()).needs_grad || p.needs_grad;
    n.value.noalias() = w * x;
    n.value.colwise() += b;
    // One multiply and one add per weight, per column.
    const std::uint64_t ops = 2ULL * static_cast<std::uint64_t>(fan_out * fan_in * x.cols());
    return push(std::move(n), ops);
}

void Tape::reset() {
    nodes_.clear();
    parameter_nodes_.clear();
    op_count_ = 0;
}

Var operator+(Var a, Var b) { return binary(OpKind::Add, a, b); }
Var operator-(Var a, Var b) { return binary(OpKind::Sub, a, b); }
Var operator*(Var a, Var b) { return binary(OpKind::Mul, a, b); }
Var operator/(Var a, Var b) { return binary(OpKind::Div, a, b); }

Var operator-(Var a) {
    Tape& t = tape_of(a);
    Tape::Node n;
    n.kind = OpKind::Neg;
    n.lhs = a.index();
    n.needs_grad = t.node(a.index()).needs_grad;
    n.value = -a.value();
    const std::uint64_t ops = elements(n.value);
    return t.push(std::move(n), ops);
}

Var operator+(Var a, double c) { return scalar_op(OpKind::AddScalar, a, c); }
Var operator+(double c, Var a) { return scalar_op(OpKind::AddScalar, a, c); }
Var operator-(Var a, double c) { return scalar_op(OpKind::AddScalar, a, -c); }
Var operator-(double c, Var a) { return scalar_op(OpKind::AddScalar, -a, c); }
Var operator*(Var a, double c) { return scalar_op(OpKind::MulScalar, a, c); }
Var operator*(double c, Var a) { return scalar_op(OpKind::MulScalar, a, c); }
Var operator/(Var a, double c) { return scalar_op(OpKind::MulScalar, a, 1.0 / c); }

Var square(Var a) {
    return unary(
        OpKind::Square, a, [](double v) { return v * v; },
        [](const Matrix& x, const Matrix&) { return Matrix(2.0 * x); });
}

Var tanh(Var a) {
    return unary(
        OpKind::Tanh, a, [](double v) { return std::tanh(v); },
        [](const Matrix&, const Matrix& y) { return Matrix(1.0 - y.array().square()); });
}

Var sigmoid(Var a) {
    return unary(
        OpKind::Sigmoid, a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](const Matrix&, const Matrix& y) { return Matrix(y.array() * (1.0 - y.array())); });
}

Var relu(Var a) {
    return unary(
        OpKind::Relu, a, [](double v) { return v > 0.0 ? v : 0.0; },
        [](const Matrix& x, const Matrix&) {
            return Matrix((x.array() > 0.0).cast<double>());
        });
}

Var exp(Var a) {
    return unary(
        OpKind::Exp, a, [](double v) { return std::exp(v); },
        [](const Matrix&, const Matrix& y) { return y; });
}

Var log(Var a) {
    return unary(
        OpKind::Log, a, [](double v) { return std::log(v); },
        [](const Matrix& x, const Matrix&) { return Matrix(x.array().inverse()); });
}

Var sum(Var a) {
    Tape& t = tape_of(a);
    Tape::Node n;
    n.kind = OpKind::Sum;
    n.lhs = a.index();
    n.needs_grad = t.node(a.index()).needs_grad;
    n.value = Matrix::Constant(1, 1, a.value().sum());
    const std::uint64_t ops = elements(a.value());
    return t.push(std::move(n), ops);
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw InvalidArgument("concat_rows: no inputs");
    Tape& t = tape_of(parts[0]);
    const Eigen::Index cols = parts[0].cols();
    Eigen::Index rows = 0;
    Tape::Node n;
    n.kind = OpKind::Concat;
    for (const Var& p : parts) {
        if (p.tape() != &t) throw InvalidArgument("concat_rows: operands live on different tapes");
        if (p.cols() != cols) throw InvalidArgument("concat_rows: column mismatch");
        rows += p.rows();
        n.inputs.push_back(p.index());
        n.needs_grad = n.needs_grad || t.node(p.index()).needs_grad;
    }
    n.value.resize(rows, cols);
    Eigen::Index r = 0;
    for (const Var& p : parts) {
        n.value.middleRows(r, p.rows()) = p.value();
        r += p.rows();
    }
    return t.push(std::move(n), 0);
}

Var row(Var a, Eigen::Index r) {
    Tape& t = tape_of(a);
    if (r < 0 || r >= a.rows()) throw InvalidArgument("row: index out of range");
    if (a.rows() == 1) return a;
    Tape::Node n;
    n.kind = OpKind::Row;
    n.lhs = a.index();
    n.offset = static_cast<std::size_t>(r);
    n.needs_grad = t.node(a.index()).needs_grad;
    n.value = a.value().row(r);
    return t.push(std::move(n), 0);
}

Matrix Gradients::wrt(Var leaf) const {
    if (!leaf.valid() || leaf.tape() != tape_) throw InvalidArgument("wrt: Var from another tape");
    const Tape::Node& n = tape_->node(leaf.index());
    const Eigen::Index rows =
        n.kind == OpKind::Parameters ? static_cast<Eigen::Index>(n.params.size()) : n.value.rows();
    const Eigen::Index cols = n.kind == OpKind::Parameters ? 1 : n.value.cols();
    if (leaf.index() < adjoints_.size() && adjoints_[leaf.index()].size() > 0) {
        return adjoints_[leaf.index()];
    }
    return Matrix::Zero(rows, cols);
}

Gradients backward(const Tape& tape, Var output) {
    if (!output.valid() || output.tape() != &tape) throw InvalidArgument("backward: output not on this tape");
    if (output.index() >= tape.size()) throw InvalidArgument("backward: output index out of range");
    const Tape::Node& out = tape.node(output.index());
    if (out.value.rows() != 1 || out.value.cols() != 1) {
        throw InvalidArgument("backward: output must be a 1x1 node");
    }

    Gradients grads;
    grads.tape_ = &tape;
    std::vector<Matrix>& adj = grads.adjoints_;
    adj.resize(output.index() + 1);
    adj[output.index()] = Matrix::Ones(1, 1);

    for (std::int64_t i = output.index(); i >= 0; --i) {
        const auto idx = static_cast<std::uint32_t>(i);
        const Tape::Node& n = tape.node(idx);
        if (!n.needs_grad || adj[idx].size() == 0) continue;
        const Matrix& g = adj[idx];

        auto parent_needs = [&](std::uint32_t p) { return p != Tape::kNone && tape.node(p).needs_grad; };
        auto parent_value = [&](std::uint32_t p) -> const Matrix& { return tape.node(p).value; };

        switch (n.kind) {
            case OpKind::Constant:
            case OpKind::Variable:
            case OpKind::Parameters:
                continue;  // leaves keep their adjoint
            case OpKind::Add:
                if (parent_needs(n.lhs)) accumulate(adj[n.lhs], parent_value(n.lhs), g);
                if (parent_needs(n.rhs)) accumulate(adj[n.rhs], parent_value(n.rhs), g);
                break;
            case OpKind::Sub:
                if (parent_needs(n.lhs)) accumulate(adj[n.lhs], parent_value(n.lhs), g);
                if (parent_needs(n.rhs)) accumulate(adj[n.rhs], parent_value(n.rhs), -g);
                break;
            case OpKind::Mul: {
                const Matrix& x = parent_value(n.lhs);
                const Matrix& y = parent_value(n.rhs);
                if (parent_needs(n.lhs)) {
                    accumulate(adj[n.lhs], x, Matrix(g.cwiseProduct(broadcast(y, g.rows(), g.cols()))));
                }
                if (parent_needs(n.rhs)) {
                    accumulate(adj[n.rhs], y, Matrix(g.cwiseProduct(broadcast(x, g.rows(), g.cols()))));
                }
                break;
            }
            case OpKind::Div: {
                const Matrix xb = broadcast(parent_value(n.lhs), g.rows(), g.cols());
                const Matrix yb = broadcast(parent_value(n.rhs), g.rows(), g.cols());
                if (parent_needs(n.lhs)) accumulate(adj[n.lhs], parent_value(n.lhs), Matrix(g.cwiseQuotient(yb)));
                if (parent_needs(n.rhs)) {
                    accumulate(adj[n.rhs], parent_value(n.rhs),
                               Matrix(-(g.array() * xb.array() / yb.array().square()).matrix()));
                }
                break;
            }
            case OpKind::Neg:
                accumulate(adj[n.lhs], parent_value(n.lhs), -g);
                break;
            case OpKind::AddScalar:
                accumulate(adj[n.lhs], parent_value(n.lhs), g);
                break;
            case OpKind::MulScalar:
                accumulate(adj[n.lhs], parent_value(n.lhs), Matrix(g * n.scalar));
                break;
            case OpKind::Square:
            case OpKind::Tanh:
            case OpKind::Sigmoid:
            case OpKind::Relu:
            case OpKind::Exp:
            case OpKind::Log:
                accumulate(adj[n.lhs], parent_value(n.lhs), Matrix(g.cwiseProduct(n.partial)));
                break;
            case OpKind::Sum: {
                const Matrix& x = parent_value(n.lhs);
                accumulate(adj[n.lhs], x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                break;
            }
            case OpKind::Concat: {
                Eigen::Index r = 0;
                for (std::uint32_t p : n.inputs) {
                    const Matrix& x = parent_value(p);
                    if (parent_needs(p)) accumulate(adj[p], x, Matrix(g.middleRows(r, x.rows())));
                    r += x.rows();
                }
                break;
            }
            case OpKind::Row: {
                const Matrix& x = parent_value(n.lhs);
                if (adj[n.lhs].size() == 0) adj[n.lhs] = Matrix::Zero(x.rows(), x.cols());
                adj[n.lhs].row(static_cast<Eigen::Index>(n.offset)) += g;
                break;
            }
            case OpKind::Affine: {
                const Tape::Node& p = tape.node(n.rhs);
                Eigen::Map<const RowMajorMatrix> w(p.params.data() + n.offset, n.fan_out, n.fan_in);
                if (parent_needs(n.lhs)) {
                    const Matrix& x = parent_value(n.lhs);
                    if (adj[n.lhs].size() == 0) adj[n.lhs] = Matrix::Zero(x.rows(), x.cols());
                    adj[n.lhs].noalias() += w.transpose() * g;
                }
                if (p.needs_grad) {
                    Matrix& pg = adj[n.rhs];
                    if (pg.size() == 0) pg = Matrix::Zero(static_cast<Eigen::Index>(p.params.size()), 1);
                    Eigen::Map<RowMajorMatrix> dw(pg.data() + n.offset, n.fan_out, n.fan_in);
                    Eigen::Map<Vector> db(pg.data() + n.offset + n.fan_out * n.fan_in, n.fan_out);
                    dw.noalias() += g * parent_value(n.lhs).transpose();
                    db += g.rowwise().sum();
                }
                break;
            }
        }
        if (idx != output.index()) adj[idx].resize(0, 0);  // interior adjoints are no longer needed
    }
    return grads;
}

}  // namespace mspgm
