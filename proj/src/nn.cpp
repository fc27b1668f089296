#include "rlvc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rlvc/errors.hpp"

namespace rlvc::nn {

DenseNet::DenseNet(std::vector<int> layer_dims, double slope) : dims_(std::move(layer_dims)), slope_(slope) {
    if (dims_.size() < 2) throw ConfigError("DenseNet needs at least input and output widths");
    for (int d : dims_)
        if (d <= 0) throw ConfigError("DenseNet layer widths must be positive");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        weights_.push_back(Matrix::Zero(dims_[l + 1], dims_[l]));
        biases_.push_back(Matrix::Zero(1, dims_[l + 1]));
    }
}

DenseNet DenseNet::he_normal(std::vector<int> layer_dims, Rng& rng, double slope) {
    DenseNet net(std::move(layer_dims), slope);
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const double sd = std::sqrt(2.0 / net.dims_[l]);
        net.weights_[l] = standard_normal(net.dims_[l + 1], net.dims_[l], rng) * sd;
    }
    return net;
}

std::vector<Matrix*> DenseNet::parameters() {
    std::vector<Matrix*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

std::vector<const Matrix*> DenseNet::parameters() const {
    std::vector<const Matrix*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* p : parameters()) n += static_cast<std::size_t>(p->size());
    return n;
}

Matrix DenseNet::forward(const Matrix& batch) const {
    if (batch.cols() != input_dim())
        throw ConfigError("forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                          std::to_string(input_dim()));
    Matrix h = batch;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Matrix a = h * weights_[l].transpose();
        a.rowwise() += biases_[l].row(0);
        if (l + 1 < weights_.size()) {
            const double s = slope_;
            h = a.unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
        } else {
            h = std::move(a);
        }
    }
    return h;
}

void DenseNet::check_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        if (!weights_[l].allFinite()) throw NumericError("non-finite weight in layer " + std::to_string(l));
        if (!biases_[l].allFinite()) throw NumericError("non-finite bias in layer " + std::to_string(l));
    }
}

bool DenseNet::operator==(const DenseNet& other) const {
    if (dims_ != other.dims_ || slope_ != other.slope_) return false;
    for (std::size_t l = 0; l < weights_.size(); ++l)
        if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
    return true;
}

std::vector<Matrix> BoundNet::gradients(const Tape& tape) const {
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (Var p : params) out.push_back(tape.grad(p));
    return out;
}

BoundNet bind(Tape& tape, const DenseNet& net, bool trainable) {
    BoundNet b;
    b.net = &net;
    for (const Matrix* p : net.parameters()) b.params.push_back(trainable ? tape.variable(*p) : tape.constant(*p));
    return b;
}

NetTrace forward(const BoundNet& bound, Var input) {
    const DenseNet& net = *bound.net;
    if (input.cols() != net.input_dim())
        throw ConfigError("forward: input has " + std::to_string(input.cols()) + " columns, network expects " +
                          std::to_string(net.input_dim()));
    NetTrace trace;
    Var h = input;
    const double s = net.slope();
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        Var a = affine(h, bound.params[2 * l], bound.params[2 * l + 1]);
        if (l + 1 < net.num_layers()) {
            trace.slopes.push_back(a.value().unaryExpr([s](double v) { return v > 0.0 ? 1.0 : s; }));
            h = leaky_relu(a, s);
        } else {
            h = a;
        }
    }
    trace.output = h;
    return trace;
}

Var input_gradient(const BoundNet& bound, const NetTrace& trace, Eigen::Index start, Eigen::Index count) {
    const DenseNet& net = *bound.net;
    if (net.output_dim() != 1) throw UsageError("input_gradient needs a scalar-output network");
    Tape& tape = *trace.output.tape;
    const Eigen::Index rows = trace.output.rows();
    // delta holds d(out)/d(pre-activation of layer l), row per sample.
    Var delta = tape.constant(Matrix::Ones(rows, 1));
    for (std::size_t l = net.num_layers() - 1; l > 0; --l) {
        Var back = matmul(delta, bound.params[2 * l]);
        delta = mul_const(back, trace.slopes[l - 1]);
    }
    return matmul(delta, cols(bound.params[0], start, count));
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state) {
    if (params.size() != grads.size()) throw UsageError("adam_step: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].rows() != params[i]->rows() || grads[i].cols() != params[i]->cols())
            throw UsageError("adam_step: gradient " + std::to_string(i) + " shape mismatch");
        if (!grads[i].allFinite()) throw NumericError("adam_step: non-finite gradient in tensor " + std::to_string(i));
    }
    if (state.first_moment.empty()) {
        for (Matrix* p : params) {
            state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
            state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    } else if (state.first_moment.size() != params.size()) {
        throw UsageError("adam_step: state was built for a different parameter list");
    }
    const AdamConfig& c = state.config;
    const long t = state.step_count + 1;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& m = state.first_moment[i];
        Matrix& v = state.second_moment[i];
        m = c.beta1 * m + (1.0 - c.beta1) * grads[i];
        v = c.beta2 * v + (1.0 - c.beta2) * grads[i].cwiseProduct(grads[i]);
        auto denom = ((v.array() / bc2).sqrt() + c.epsilon);
        params[i]->array() -= c.learning_rate * (m.array() / bc1) / denom;
    }
    state.step_count = t;
}

double finite_difference_check(const std::function<LossAndGrad()>& loss_fn, std::span<Matrix* const> params,
                               double step) {
    const LossAndGrad base = loss_fn();
    if (base.grads.size() != params.size()) throw UsageError("finite_difference_check: gradient count mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& p = *params[i];
        for (Eigen::Index k = 0; k < p.size(); ++k) {
            const double orig = p.data()[k];
            p.data()[k] = orig + step;
            const double up = loss_fn().value;
            p.data()[k] = orig - step;
            const double down = loss_fn().value;
            p.data()[k] = orig;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = base.grads[i].data()[k];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace rlvc::nn
