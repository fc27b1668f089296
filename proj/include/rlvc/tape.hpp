#pragma once

// Reverse-mode differentiation over dense double matrices.
//
// A Tape records every operation applied to its Vars. backward() seeds the
// gradient of a 1x1 node with 1 and walks the record in reverse. Rows are
// batch samples throughout; parameters enter as variable() leaves, data and
// frozen weights as constant() leaves. Nodes that do not depend on any
// variable are never visited during backward.

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rlvc::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var variable(Matrix value);

    const Matrix& value(Var v) const;
    /// Gradient accumulated by the last backward(); zeros if none reached v.
    Matrix grad(Var v) const;
    bool requires_grad(Var v) const;

    /// Throws UsageError if `loss` is not a 1x1 node of this tape.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

    // Used by op implementations.
    Var record(Matrix value, std::span<const Var> parents, BackwardFn fn);
    Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn) {
        return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
    }
    void accumulate(Var v, const Matrix& g);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        bool has_grad = false;
        BackwardFn backward;
    };
    void check(Var v) const;

    std::vector<Node> nodes_;
};

// Linear algebra
Var matmul(Var a, Var b);
/// x * W^T + b with W stored out x in and b a 1 x out row.
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// Elementwise product with a constant of the same shape.
Var mul_const(Var a, const Matrix& m);
/// Multiplies row i by s(i).
Var scale_rows(Var a, const Vector& s);
/// Multiplies row i by the (differentiable) B x 1 column s.
Var scale_rows(Var a, Var s);
Var hconcat(std::span<const Var> parts);
Var hconcat(std::initializer_list<Var> parts);
Var cols(Var a, Eigen::Index start, Eigen::Index count);

// Nonlinearities
Var leaky_relu(Var a, double slope);
Var square(Var a);
Var abs(Var a);
Var log(Var a);

// Reductions
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);
/// Euclidean norm of each row (B x 1). The subgradient at a zero row is 0.
Var row_norm(Var a);
/// Rowwise log-softmax, stabilized by max subtraction.
Var log_softmax_rows(Var a);
/// B x 1 column holding a(i, index[i]).
Var pick(Var a, std::span<const int> index);
/// Rowwise cosine similarity with the rows of a constant matrix. Rows where
/// either side has zero norm yield 0 with zero gradient.
Var cosine_rows(Var a, const Matrix& targets);

}  // namespace rlvc::nn
