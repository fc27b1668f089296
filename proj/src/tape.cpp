#include "rlvc/tape.hpp"

#include <cmath>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::nn {

const Matrix& Var::value() const {
    if (tape == nullptr) throw UsageError("Var is not bound to a tape");
    return tape->value(*this);
}

void Tape::check(Var v) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw UsageError("node is not on this tape");
}

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, false, false, {}});
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::variable(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, true, false, {}});
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

const Matrix& Tape::value(Var v) const {
    check(v);
    return nodes_[v.id].value;
}

Matrix Tape::grad(Var v) const {
    check(v);
    const Node& n = nodes_[v.id];
    if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

bool Tape::requires_grad(Var v) const {
    check(v);
    return nodes_[v.id].requires_grad;
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn fn) {
    bool rg = false;
    for (Var p : parents) {
        check(p);
        rg = rg || nodes_[p.id].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, rg, false, rg ? std::move(fn) : BackwardFn{}});
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.has_grad) {
        n.grad += g;
    } else {
        n.grad = g;
        n.has_grad = true;
    }
}

void Tape::backward(Var loss) {
    check(loss);
    if (nodes_[loss.id].value.size() != 1)
        throw UsageError("backward() needs a scalar node, got " +
                         std::to_string(nodes_[loss.id].value.rows()) + "x" +
                         std::to_string(nodes_[loss.id].value.cols()));
    for (Node& n : nodes_) {
        n.has_grad = false;
        n.grad.resize(0, 0);
    }
    accumulate(loss, Matrix::Ones(1, 1));
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        const Matrix g = n.grad;
        n.backward(*this, g);
    }
}

namespace {

void require_same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
}

Tape& tape_of(Var a) {
    if (a.tape == nullptr) throw UsageError("Var is not bound to a tape");
    return *a.tape;
}

}  // namespace

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw ConfigError("matmul: inner dimension mismatch");
    return tape_of(a).record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g * t.value(b).transpose());
        t.accumulate(b, t.value(a).transpose() * g);
    });
}

Var affine(Var x, Var w, Var b) {
    if (x.cols() != w.cols())
        throw ConfigError("affine: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                          std::to_string(w.cols()));
    if (b.rows() != 1 || b.cols() != w.rows()) throw ConfigError("affine: bias shape mismatch");
    Matrix out = x.value() * w.value().transpose();
    out.rowwise() += b.value().row(0);
    return tape_of(x).record(std::move(out), {x, w, b}, [x, w, b](Tape& t, const Matrix& g) {
        t.accumulate(x, g * t.value(w));
        t.accumulate(w, g.transpose() * t.value(x));
        t.accumulate(b, g.colwise().sum());
    });
}

Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    return tape_of(a).record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var sub(Var a, Var b) {
    require_same_shape(a, b, "sub");
    return tape_of(a).record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, -g);
    });
}

Var hadamard(Var a, Var b) {
    require_same_shape(a, b, "hadamard");
    return tape_of(a).record(a.value().cwiseProduct(b.value()), {a, b},
                             [a, b](Tape& t, const Matrix& g) {
                                 t.accumulate(a, g.cwiseProduct(t.value(b)));
                                 t.accumulate(b, g.cwiseProduct(t.value(a)));
                             });
}

Var scale(Var a, double s) {
    return tape_of(a).record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_scalar(Var a, double s) {
    return tape_of(a).record((a.value().array() + s).matrix(), {a},
                             [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Var mul_const(Var a, const Matrix& m) {
    if (a.rows() != m.rows() || a.cols() != m.cols()) throw ConfigError("mul_const: shape mismatch");
    return tape_of(a).record(a.value().cwiseProduct(m), {a},
                             [a, m](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(m)); });
}

Var scale_rows(Var a, const Vector& s) {
    if (a.rows() != s.size()) throw ConfigError("scale_rows: length mismatch");
    return tape_of(a).record(s.asDiagonal() * a.value(), {a},
                             [a, s](Tape& t, const Matrix& g) { t.accumulate(a, s.asDiagonal() * g); });
}

Var scale_rows(Var a, Var s) {
    if (s.cols() != 1 || s.rows() != a.rows()) throw ConfigError("scale_rows: expected a B x 1 column");
    Vector sv = s.value().col(0);
    return tape_of(a).record(sv.asDiagonal() * a.value(), {a, s}, [a, s](Tape& t, const Matrix& g) {
        Vector sv = t.value(s).col(0);
        t.accumulate(a, sv.asDiagonal() * g);
        t.accumulate(s, g.cwiseProduct(t.value(a)).rowwise().sum());
    });
}

Var hconcat(std::span<const Var> parts) {
    if (parts.empty()) throw UsageError("hconcat: no parts");
    const Eigen::Index rows = parts[0].rows();
    Eigen::Index total = 0;
    for (Var p : parts) {
        if (p.rows() != rows) throw ConfigError("hconcat: row count mismatch");
        total += p.cols();
    }
    Matrix out(rows, total);
    Eigen::Index off = 0;
    for (Var p : parts) {
        out.middleCols(off, p.cols()) = p.value();
        off += p.cols();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return tape_of(parts[0]).record(std::move(out), parts, [ps](Tape& tt, const Matrix& g) {
        Eigen::Index o = 0;
        for (Var p : ps) {
            tt.accumulate(p, g.middleCols(o, p.cols()));
            o += p.cols();
        }
    });
}

Var hconcat(std::initializer_list<Var> parts) {
    return hconcat(std::span<const Var>(parts.begin(), parts.size()));
}

Var cols(Var a, Eigen::Index start, Eigen::Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw ConfigError("cols: range out of bounds");
    return tape_of(a).record(a.value().middleCols(start, count), {a}, [a, start, count](Tape& t, const Matrix& g) {
        Matrix full = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
        full.middleCols(start, count) = g;
        t.accumulate(a, full);
    });
}

Var leaky_relu(Var a, double slope) {
    Matrix out = a.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    return tape_of(a).record(std::move(out), {a}, [a, slope](Tape& t, const Matrix& g) {
        Matrix d = t.value(a).unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
        t.accumulate(a, g.cwiseProduct(d));
    });
}

Var square(Var a) {
    return tape_of(a).record(a.value().array().square().matrix(), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, 2.0 * g.cwiseProduct(t.value(a)));
    });
}

Var abs(Var a) {
    return tape_of(a).record(a.value().cwiseAbs(), {a}, [a](Tape& t, const Matrix& g) {
        Matrix s = t.value(a).unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
        t.accumulate(a, g.cwiseProduct(s));
    });
}

Var log(Var a) {
    return tape_of(a).record(a.value().array().log().matrix(), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g.cwiseQuotient(t.value(a)));
    });
}

Var sum(Var a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return tape_of(a).record(std::move(out), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
    });
}

Var mean(Var a) {
    if (a.value().size() == 0) throw UsageError("mean of an empty matrix");
    const double n = static_cast<double>(a.value().size());
    Matrix out(1, 1);
    out(0, 0) = a.value().sum() / n;
    return tape_of(a).record(std::move(out), {a}, [a, n](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0) / n));
    });
}

Var row_sum(Var a) {
    return tape_of(a).record(a.value().rowwise().sum(), {a}, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, g.col(0).replicate(1, t.value(a).cols()));
    });
}

Var row_norm(Var a) {
    Matrix out = a.value().rowwise().norm();
    return tape_of(a).record(out, {a}, [a, out](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(a);
        Matrix d(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (out(i, 0) > 0.0)
                d.row(i) = x.row(i) * (g(i, 0) / out(i, 0));
            else
                d.row(i).setZero();
        }
        t.accumulate(a, d);
    });
}

Var log_softmax_rows(Var a) {
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double m = x.row(i).maxCoeff();
        const double lse = m + std::log((x.row(i).array() - m).exp().sum());
        out.row(i) = x.row(i).array() - lse;
    }
    return tape_of(a).record(out, {a}, [a, out](Tape& t, const Matrix& g) {
        // d/dx_j sum_k g_k (x_k - lse) = g_j - softmax_j * sum_k g_k
        Matrix p = out.array().exp().matrix();
        Matrix d = g - (p.array().colwise() * g.rowwise().sum().array()).matrix();
        t.accumulate(a, d);
    });
}

Var pick(Var a, std::span<const int> index) {
    if (static_cast<Eigen::Index>(index.size()) != a.rows()) throw ConfigError("pick: index length mismatch");
    Matrix out(a.rows(), 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const int k = index[i];
        if (k < 0 || k >= a.cols()) throw UsageError("pick: index " + std::to_string(k) + " out of range");
        out(i, 0) = a.value()(i, k);
    }
    std::vector<int> idx(index.begin(), index.end());
    return tape_of(a).record(std::move(out), {a}, [a, idx](Tape& t, const Matrix& g) {
        Matrix d = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
        for (std::size_t i = 0; i < idx.size(); ++i) d(static_cast<Eigen::Index>(i), idx[i]) = g(i, 0);
        t.accumulate(a, d);
    });
}

Var cosine_rows(Var a, const Matrix& targets) {
    if (a.rows() != targets.rows() || a.cols() != targets.cols()) throw ConfigError("cosine_rows: shape mismatch");
    const Matrix& x = a.value();
    Matrix out(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double nx = x.row(i).norm();
        const double nv = targets.row(i).norm();
        out(i, 0) = (nx > 0.0 && nv > 0.0) ? x.row(i).dot(targets.row(i)) / (nx * nv) : 0.0;
    }
    return tape_of(a).record(out, {a}, [a, targets, out](Tape& t, const Matrix& g) {
        const Matrix& x = t.value(a);
        Matrix d = Matrix::Zero(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double nx = x.row(i).norm();
            const double nv = targets.row(i).norm();
            if (nx == 0.0 || nv == 0.0) continue;
            // d cos / dx = v/(|x||v|) - cos * x/|x|^2
            d.row(i) = g(i, 0) * (targets.row(i) / (nx * nv) - out(i, 0) * x.row(i) / (nx * nx));
        }
        t.accumulate(a, d);
    });
}

}  // namespace rlvc::nn
